/**
 * Browser wiring: login, page switching, and the four pages (Drive,
 * Blocks, Monitor, Chat) rendered from the snapshot store. All state
 * shown comes from the server via MonitorLoop polling; the store is
 * replaced wholesale and never merged.
 */

import { BusApi, ApiError } from "./api.js";
import { DrivePage } from "./drive.js";
import { BlockEditor, PALETTE, type EditorNode } from "./editor.js";
import { ChatPage } from "./chat.js";
import { MonitorLoop, project, type Viewport } from "./monitor.js";
import { SnapshotStore } from "./store.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const api = new BusApi(window.location.origin);
const store = new SnapshotStore();
const monitor = new MonitorLoop(api, store);
const drive = new DrivePage(api, (notice) => showNotice(notice.kind, notice.text));
const editor = new BlockEditor();
const chatSession = `ui-${Math.random().toString(36).slice(2, 10)}`;
const chat = new ChatPage(api, chatSession, renderChatLine);

const PAGES = ["drive", "blocks", "monitor", "chat"] as const;
type Page = (typeof PAGES)[number];

function showNotice(kind: string, text: string): void {
  const bar = $("notice");
  bar.textContent = text;
  bar.className = `notice ${kind}`;
  bar.hidden = false;
  setTimeout(() => (bar.hidden = true), 4000);
}

function selectPage(page: Page): void {
  for (const name of PAGES) {
    $(`page-${name}`).hidden = name !== page;
    $(`nav-${name}`).classList.toggle("active", name === page);
  }
}

// -- drive ------------------------------------------------------------------

function wireDrivePad(): void {
  const actions = ["forward", "left", "right", "backward"] as const;
  for (const action of actions) {
    $(`drive-${action}`).addEventListener("click", () => void drive.press(action));
  }
  // The header stop button is reachable from every page in one click.
  $("stop-button").addEventListener("click", () => void drive.stop());
}

// -- blocks -----------------------------------------------------------------

let highlightedBlock: number | null = null;
let inlineError: { blockId: number | null; text: string } | null = null;

function renderPalette(container: HTMLElement, parentId: number | null): void {
  for (const kind of PALETTE) {
    const button = document.createElement("button");
    button.className = "palette";
    button.textContent = `+ ${kind.replaceAll("_", " ")}`;
    button.addEventListener("click", () => {
      editor.add(kind, parentId);
      inlineError = null;
      renderBlocks();
    });
    container.appendChild(button);
  }
}

function renderBlockRow(node: EditorNode, container: HTMLElement): void {
  const row = document.createElement("div");
  row.className = "block";
  if (node.id === highlightedBlock) row.classList.add("error");
  const label = document.createElement("span");
  label.textContent = node.kind.replaceAll("_", " ");
  row.appendChild(label);

  if (node.kind === "make_expression") {
    const select = document.createElement("select");
    for (const name of editor.expressionOptions()) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      option.selected = name === node.expression;
      select.appendChild(option);
    }
    select.addEventListener("change", () => editor.setExpression(node.id, select.value));
    row.appendChild(select);
  }
  if (node.kind === "repeat") {
    const count = document.createElement("input");
    count.type = "number";
    count.min = "0";
    count.value = String(node.count ?? 0);
    count.addEventListener("change", () => editor.setCount(node.id, Number(count.value)));
    row.appendChild(count);
  }

  const remove = document.createElement("button");
  remove.textContent = "✕";
  remove.title = "remove block";
  remove.addEventListener("click", () => {
    editor.remove(node.id);
    renderBlocks();
  });
  row.appendChild(remove);
  container.appendChild(row);

  if (inlineError && inlineError.blockId === node.id) {
    const message = document.createElement("div");
    message.className = "inline-error";
    message.textContent = inlineError.text;
    container.appendChild(message);
  }

  if (node.kind === "repeat") {
    const body = document.createElement("div");
    body.className = "repeat-body";
    for (const child of node.body ?? []) renderBlockRow(child, body);
    renderPalette(body, node.id);
    container.appendChild(body);
  }
}

function renderBlocks(): void {
  const list = $("block-list");
  list.replaceChildren();
  for (const node of editor.blocks) renderBlockRow(node, list);
  const general = $("block-error");
  if (inlineError && inlineError.blockId === null) {
    general.textContent = inlineError.text;
    general.hidden = false;
  } else {
    general.hidden = true;
  }
}

async function runProgram(): Promise<void> {
  inlineError = null;
  highlightedBlock = null;
  try {
    const out = await api.submitBlocks(editor.toDocument());
    showNotice("ok", `program accepted (${out.length} commands)`);
  } catch (e) {
    if (e instanceof ApiError) {
      if (e.code === "busy") {
        showNotice("busy", "A program is already running. Stop it first.");
      } else if (e.path) {
        const node = editor.nodeAtPath(e.path);
        highlightedBlock = node?.id ?? null;
        inlineError = { blockId: node?.id ?? null, text: e.reason };
      } else {
        inlineError = { blockId: null, text: e.reason };
      }
    } else {
      inlineError = { blockId: null, text: String(e) };
    }
  }
  renderBlocks();
}

function wireBlocksPage(): void {
  renderPalette($("block-palette"), null);
  $("run-button").addEventListener("click", () => void runProgram());
  $("clear-button").addEventListener("click", () => {
    editor.clear();
    inlineError = null;
    renderBlocks();
  });
  renderBlocks();
}

// -- monitor ------------------------------------------------------------------

const VIEW: Viewport = { width: 480, height: 360, metersAcross: 2.5, centerX: 0, centerY: 0 };

function drawMonitor(): void {
  const canvas = $("monitor-canvas") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, VIEW.width, VIEW.height);

  ctx.strokeStyle = "#2a3950";
  ctx.lineWidth = 1;
  const scale = VIEW.width / VIEW.metersAcross;
  for (let m = -5; m <= 5; m++) {
    const { px } = project({ x: m * 0.5, y: 0 }, VIEW);
    const { py } = project({ x: 0, y: m * 0.5 }, VIEW);
    ctx.strokeRect(px, 0, 0.0001, VIEW.height);
    ctx.strokeRect(0, py, VIEW.width, 0.0001);
  }

  const points = monitor.trail.points;
  if (points.length > 1) {
    ctx.strokeStyle = "#58a6ff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    points.forEach((p, i) => {
      const { px, py } = project(p, VIEW);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  const snapshot = store.current();
  const robot = snapshot?.status.robot;
  if (robot) {
    const { px, py, angle } = project(robot.pose, VIEW);
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(-angle);
    ctx.fillStyle = "#7ee787";
    ctx.beginPath();
    ctx.moveTo(0.12 * scale, 0);
    ctx.lineTo(-0.06 * scale, 0.06 * scale);
    ctx.lineTo(-0.06 * scale, -0.06 * scale);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }
}

function renderMonitorText(): void {
  const snapshot = store.current();
  const stale = store.isStale(Date.now());
  const staleBadge = $("stale-indicator");
  staleBadge.textContent = stale ? "STALE — no robot report" : "LIVE";
  staleBadge.className = stale ? "badge stale" : "badge live";

  const status = snapshot?.status;
  $("monitor-phase").textContent = status
    ? `${status.phase} (delivered ${status.delivered}, acked ${status.acked_count})`
    : "—";
  const robot = status?.robot;
  $("monitor-pose").textContent = robot
    ? `x ${robot.pose.x.toFixed(2)} m · y ${robot.pose.y.toFixed(2)} m · heading ${robot.pose.heading.toFixed(0)}°`
    : "no report yet";
  $("monitor-expression").textContent = robot ? robot.expression : "—";

  const feed = $("emotion-feed");
  feed.replaceChildren();
  const report = snapshot?.emotion;
  if (report) {
    for (const [person, entry] of Object.entries(report.data)) {
      const line = document.createElement("li");
      const emotions = Object.entries(entry.emotions)
        .map(([name, pct]) => `${name} ${pct}`)
        .join(", ");
      const vad = entry.vad.map((v) => v.toFixed(2)).join(" / ");
      line.textContent = `person ${person}: ${emotions || "(none selected)"} · VAD ${vad}`;
      feed.appendChild(line);
    }
  }
}

// -- chat -------------------------------------------------------------------------

function renderChatLine(line: { who: string; text: string }): void {
  const log = $("chat-log");
  const item = document.createElement("div");
  item.className = `chat-line ${line.who}`;
  item.textContent = `${line.who === "you" ? "You" : "Wolly"}: ${line.text}`;
  log.appendChild(item);
  log.scrollTop = log.scrollHeight;
}

function wireChatPage(): void {
  const input = $("chat-input") as unknown as HTMLInputElement;
  const send = () => {
    void chat.send(input.value);
    input.value = "";
  };
  $("chat-send").addEventListener("click", send);
  input.addEventListener("keydown", (e) => {
    if ((e as KeyboardEvent).key === "Enter") send();
  });
}

// -- boot ---------------------------------------------------------------------------

async function login(): Promise<void> {
  const username = ($("login-user") as unknown as HTMLInputElement).value.trim();
  const password = ($("login-pass") as unknown as HTMLInputElement).value;
  if (!username || !password) {
    showNotice("error", "enter a username and password");
    return;
  }
  try {
    await api.loginOrCreate(username, password);
  } catch (e) {
    showNotice("error", e instanceof ApiError ? e.reason : String(e));
    return;
  }
  $("login-panel").hidden = true;
  $("app-panel").hidden = false;
  monitor.start();
  setInterval(() => {
    renderMonitorText();
    drawMonitor();
  }, 250);
}

function boot(): void {
  wireDrivePad();
  wireBlocksPage();
  wireChatPage();
  for (const page of PAGES) {
    $(`nav-${page}`).addEventListener("click", () => selectPage(page));
  }
  $("login-button").addEventListener("click", () => void login());
  selectPage("drive");
}

boot();
