/**
 * Typed client for the command-bus and chat endpoints. The UI talks to
 * the server exclusively through this module, and never mutates the bus
 * without a login token.
 */

import type { BlockNode } from "./blocks.js";

export interface RobotSnapshot {
  pose: { x: number; y: number; heading: number };
  expression: string;
  program_id: string;
  seq: number;
  reported_at: number;
}

export interface BusStatus {
  phase: "IDLE" | "RUNNING";
  delivered: number;
  acked_count: number;
  robot: RobotSnapshot | null;
  program_id?: string;
  program_length?: number;
}

export interface PersonEntry {
  emotions: Record<string, string>;
  vad: [number, number, number];
}

export type EmotionReportDoc = { data: Record<string, PersonEntry> };

export type TeleopAction = "forward" | "right" | "left" | "backward" | "stop";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly reason: string,
    readonly status: number,
    readonly path: string | null = null,
  ) {
    super(`${code}: ${reason}`);
  }
}

type FetchLike = typeof fetch;

export class BusApi {
  token: string | null = null;

  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request(method: string, url: string, body?: unknown): Promise<unknown> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.token) headers.authorization = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${url}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (e) {
      throw new ApiError("network", String(e), 0);
    }
    let doc: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        doc = JSON.parse(text);
      } catch {
        doc = null;
      }
    }
    if (!response.ok) {
      const err = (doc ?? {}) as Record<string, unknown>;
      throw new ApiError(
        (err.code as string) ?? "http_error",
        (err.reason as string) ?? text,
        response.status,
        (err.path as string | null) ?? null,
      );
    }
    return doc;
  }

  private mustToken(): void {
    if (!this.token) throw new ApiError("unauthorized", "login first", 401);
  }

  async createAccount(username: string, password: string, role: "controller" | "robot"): Promise<void> {
    await this.request("POST", "/api/accounts", { username, password, role });
  }

  async login(username: string, password: string): Promise<void> {
    const doc = (await this.request("POST", "/api/login", { username, password })) as {
      token: string;
    };
    this.token = doc.token;
  }

  /** Login, signing the account up on first use. */
  async loginOrCreate(username: string, password: string): Promise<void> {
    try {
      await this.login(username, password);
    } catch (e) {
      if (!(e instanceof ApiError) || e.status !== 401) throw e;
      await this.createAccount(username, password, "controller");
      await this.login(username, password);
    }
  }

  async submitBlocks(tree: BlockNode): Promise<{ program_id: string; length: number }> {
    this.mustToken();
    return (await this.request("POST", "/api/programs", {
      format: "blocks",
      tree,
    })) as { program_id: string; length: number };
  }

  async teleop(action: TeleopAction): Promise<{ program_id: string }> {
    this.mustToken();
    return (await this.request("POST", "/api/teleop", { action })) as { program_id: string };
  }

  async status(): Promise<BusStatus> {
    this.mustToken();
    return (await this.request("GET", "/api/status")) as BusStatus;
  }

  async expressions(): Promise<string[]> {
    this.mustToken();
    const doc = (await this.request("GET", "/api/expressions")) as { expressions: string[] };
    return doc.expressions;
  }

  async latestEmotion(): Promise<EmotionReportDoc | null> {
    this.mustToken();
    const doc = (await this.request("GET", "/api/emotion/latest")) as {
      report: EmotionReportDoc | null;
    };
    return doc.report;
  }

  async chat(session: string, text: string): Promise<string> {
    this.mustToken();
    const doc = (await this.request("POST", "/api/chat", { session, text })) as { text: string };
    return doc.text;
  }
}
