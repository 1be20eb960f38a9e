"""Operator command line: run services, drive the robot, query offline tools.

Exit codes: 0 success, 1 domain error (machine-readable JSON line on
stderr), 2 usage error. Every flag has a WOLLY_-prefixed environment
variable override, and --config can point at a JSON file of defaults.
"""

from __future__ import annotations

import json
import logging
import sys
import threading
import time
from pathlib import Path

import click
import httpx
import uvicorn

from . import assets
from .blocks import CompileError, compile_blocks, emit_script, parse_blocks
from .bus.core import CommandBus
from .bus.http import create_bus_app
from .chat import ChatService
from .dialogue import load_rules
from .emotion.metrics import average_precision, mean_ap, mean_vad_error, vad_error
from .emotion.service import create_emotion_app, fixture_frames, stub_analyzer
from .emotion.wire import Thresholds
from .identity import IdentityRegistry
from .kb import KnowledgeBase, UnknownEntity
from .model import ParseError, Program, parse_script
from .robot.client import Credentials, RobotRuntime, StaticFrameSource
from .robot.kinematics import KinematicConfig, replay

log = logging.getLogger("wolly")


class DomainError(click.ClickException):
    """Domain failure: exit 1 with a machine-readable stderr line."""

    exit_code = 1

    def __init__(self, code: str, reason: str):
        super().__init__(reason)
        self.code = code

    def show(self, file=None) -> None:
        click.echo(json.dumps({"error": self.code, "reason": self.message}), err=True)


def _load_config_defaults(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DomainError("bad_config", f"cannot read config file: {e}")


class _Config:
    def __init__(self, bus: str, emotion: str, data_dir: str, step: float,
                 turn: float, duration: float, log_level: str):
        self.bus = bus if "//" in bus else f"http://{bus}"
        self.emotion = emotion if "//" in emotion else f"http://{emotion}"
        self.data_dir = Path(data_dir)
        self.kinematics = KinematicConfig(step_distance=step, turn_angle=turn,
                                          command_duration=duration)
        self.log_level = log_level


@click.group(context_settings={"auto_envvar_prefix": "WOLLY"})
@click.option("--bus", default="127.0.0.1:8080", show_default=True,
              help="Command-bus address (host:port or URL).")
@click.option("--emotion", default="127.0.0.1:8091", show_default=True,
              help="Emotion-service address (host:port or URL).")
@click.option("--data-dir", default="wolly-data", show_default=True,
              help="Directory for registry, audit log, and pictures.")
@click.option("--step", default=0.1, show_default=True, help="Meters per move command.")
@click.option("--turn", default=90.0, show_default=True, help="Degrees per turn command.")
@click.option("--duration", default=1.0, show_default=True,
              help="Simulated seconds per command.")
@click.option("--log-level", default="INFO", show_default=True)
@click.option("--config", default=None, help="JSON file with flag defaults.")
@click.pass_context
def main(ctx, bus, emotion, data_dir, step, turn, duration, log_level, config):
    """Wolly: educational-robot control stack."""
    defaults = _load_config_defaults(config)
    bus = defaults.get("bus", bus)
    emotion = defaults.get("emotion", emotion)
    data_dir = defaults.get("data_dir", data_dir)
    step = float(defaults.get("step", step))
    turn = float(defaults.get("turn", turn))
    duration = float(defaults.get("duration", duration))
    log_level = defaults.get("log_level", log_level)
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        ctx.obj = _Config(bus, emotion, data_dir, step, turn, duration, log_level)
    except ValueError as e:
        raise DomainError("bad_config", str(e))


def _host_port(url: str, default_port: int) -> tuple[str, int]:
    stripped = url.split("//", 1)[-1].rstrip("/")
    if ":" in stripped:
        host, port = stripped.rsplit(":", 1)
        return host, int(port)
    return stripped, default_port


@main.command()
@click.option("--thresholds", default=None,
              help="Threshold file for the emotion service (default: shipped 0.5 file).")
@click.option("--ui-dir", default=None, help="Directory of built web-UI assets to serve at /ui.")
@click.pass_obj
def serve(cfg: _Config, thresholds, ui_dir):
    """Run the command bus (with chat + identity) and the emotion service."""
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    registry = IdentityRegistry(cfg.data_dir / "registry.jsonl")
    kb = assets.fixture_kb()
    chat = ChatService(load_rules(assets.default_rules_text()), kb, registry)
    bus = CommandBus(audit_path=cfg.data_dir / "audit.log")
    bus_app = create_bus_app(bus, chat, registry, ui_dir=ui_dir)
    t = Thresholds.from_file(thresholds) if thresholds else assets.default_thresholds()
    emotion_app = create_emotion_app(stub_analyzer(t))

    bus_host, bus_port = _host_port(cfg.bus, 8080)
    emo_host, emo_port = _host_port(cfg.emotion, 8091)
    servers = [
        uvicorn.Server(uvicorn.Config(bus_app, host=bus_host, port=bus_port,
                                      log_level="warning")),
        uvicorn.Server(uvicorn.Config(emotion_app, host=emo_host, port=emo_port,
                                      log_level="warning")),
    ]
    threads = [threading.Thread(target=s.run, daemon=True) for s in servers]
    for thread in threads:
        thread.start()
    click.echo(f"bus listening on {cfg.bus}, emotion service on {cfg.emotion}")
    try:
        while all(thread.is_alive() for thread in threads):
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        for server in servers:
            server.should_exit = True
        for thread in threads:
            thread.join(timeout=5)
        registry.close()
        bus.close()


@main.command()
@click.option("--frame", default=None, help="PNG/JPEG file to use as the camera frame.")
@click.option("--emotion-period", default=2.0, show_default=True)
@click.option("--user", default="wolly-robot", show_default=True)
@click.option("--password", default="wolly-robot", show_default=True)
@click.pass_obj
def robot(cfg: _Config, frame, emotion_period, user, password):
    """Run the virtual robot against the bus and emotion service."""
    if frame:
        frame_bytes = Path(frame).read_bytes()
    else:
        frame_bytes = fixture_frames()["two_people"]
    runtime = RobotRuntime(
        cfg.bus, cfg.kinematics,
        credentials=Credentials(user, password),
        frame_source=StaticFrameSource(frame_bytes),
        emotion_url=cfg.emotion,
        emotion_period=emotion_period,
    )
    click.echo(f"robot connecting to {cfg.bus}")
    runtime.start()
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        runtime.stop()


def _controller_token(cfg: _Config, client: httpx.Client,
                      username: str = "wolly-cli", password: str = "wolly-cli") -> str:
    from .robot.client import login_or_create

    try:
        return login_or_create(client, cfg.bus, Credentials(username, password, "controller"))
    except httpx.HTTPError as e:
        raise DomainError("bus_unreachable", f"cannot reach bus at {cfg.bus}: {e}")


def _request(client, method, url, **kwargs) -> dict:
    try:
        r = client.request(method, url, **kwargs)
    except httpx.HTTPError as e:
        raise DomainError("bus_unreachable", str(e))
    if r.status_code >= 400:
        try:
            body = r.json()
        except json.JSONDecodeError:
            body = {"code": "http_error", "reason": r.text}
        raise DomainError(body.get("code", "http_error"), body.get("reason", ""))
    return r.json()


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["auto", "blocks", "script"]),
              default="auto", show_default=True)
@click.pass_obj
def submit(cfg: _Config, file, fmt):
    """Submit a program file (block-tree JSON or canonical script)."""
    text = Path(file).read_text(encoding="utf-8")
    if fmt == "auto":
        fmt = "blocks" if text.lstrip().startswith("{") else "script"
    if fmt == "blocks":
        try:
            payload = {"format": "blocks", "tree": json.loads(text)}
        except json.JSONDecodeError as e:
            raise DomainError("parse_error", f"not valid JSON: {e}")
    else:
        payload = {"format": "script", "text": text}
    with httpx.Client(timeout=10.0) as client:
        token = _controller_token(cfg, client)
        out = _request(client, "POST", f"{cfg.bus}/api/programs", json=payload,
                       headers={"authorization": f"Bearer {token}"})
    click.echo(json.dumps(out))


@main.command()
@click.argument("action", type=click.Choice(["forward", "right", "left", "backward", "stop"]))
@click.pass_obj
def teleop(cfg: _Config, action):
    """Send one teleop action."""
    with httpx.Client(timeout=10.0) as client:
        token = _controller_token(cfg, client)
        out = _request(client, "POST", f"{cfg.bus}/api/teleop", json={"action": action},
                       headers={"authorization": f"Bearer {token}"})
    click.echo(json.dumps(out))


@main.command()
@click.pass_obj
def status(cfg: _Config):
    """Print the bus status snapshot."""
    with httpx.Client(timeout=10.0) as client:
        token = _controller_token(cfg, client)
        out = _request(client, "GET", f"{cfg.bus}/api/status",
                       headers={"authorization": f"Bearer {token}"})
    click.echo(json.dumps(out))


@main.command()
@click.argument("session")
@click.argument("text")
@click.pass_obj
def chat(cfg: _Config, session, text):
    """Send one chat message and print the reply."""
    with httpx.Client(timeout=10.0) as client:
        token = _controller_token(cfg, client)
        out = _request(client, "POST", f"{cfg.bus}/api/chat",
                       json={"session": session, "text": text},
                       headers={"authorization": f"Bearer {token}"})
    click.echo(out["text"])


@main.command("replay")
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def replay_trace(cfg: _Config, trace_file):
    """Replay a canonical script offline and print the final state."""
    text = Path(trace_file).read_text(encoding="utf-8")
    try:
        instructions = parse_script(text)
    except ParseError as e:
        raise DomainError("parse_error", str(e))
    end = replay(instructions, cfg.kinematics)
    click.echo(json.dumps({
        "x": end.pose.x, "y": end.pose.y, "heading": end.pose.heading,
        "expression": end.expression,
    }))


@main.command("compile")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def compile_file(cfg: _Config, file):
    """Compile a block-tree document offline and print the script."""
    text = Path(file).read_text(encoding="utf-8")
    try:
        program = compile_blocks(parse_blocks(text))
    except (ParseError, CompileError) as e:
        raise DomainError("compile_error", str(e))
    click.echo(emit_script(program), nl=False)


@main.group()
def kb():
    """Knowledge-base tools."""


def _kb_from_files(files) -> KnowledgeBase:
    store = assets.fixture_kb() if not files else KnowledgeBase()
    for path in files:
        try:
            store.load_triples(Path(path).read_text(encoding="utf-8"))
        except ParseError as e:
            raise DomainError("parse_error", f"{path}: {e}")
    return store


@kb.command("load")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def kb_load(files):
    """Parse triple files and print how many distinct triples they add."""
    store = KnowledgeBase()
    total = 0
    for path in files:
        try:
            total += store.load_triples(Path(path).read_text(encoding="utf-8"))
        except ParseError as e:
            raise DomainError("parse_error", f"{path}: {e}")
    click.echo(json.dumps({"triples": total}))


@kb.command("ask")
@click.argument("kind", type=click.Choice(["starring", "costars", "related"]))
@click.argument("iri")
@click.argument("k", default=5, required=False, type=int)
@click.option("--file", "files", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Triple files to query (default: the shipped fixture ontology).")
def kb_ask(kind, iri, k, files):
    """Query the ontology: starring <movie>, costars <char>, related <iri> <k>."""
    store = _kb_from_files(files)
    try:
        if kind == "starring":
            out = sorted(store.characters_in(iri))
        elif kind == "costars":
            out = sorted(store.costars(iri))
        else:
            out = store.related_topics(iri, k)
    except UnknownEntity:
        raise DomainError("unknown_entity", f"{iri} does not occur in the knowledge base")
    except ValueError as e:
        raise DomainError("bad_request", str(e))
    click.echo(json.dumps(out))


@main.group()
def metrics():
    """Offline metric computations over line-oriented numeric files."""


@metrics.command("ap")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def metrics_ap(file):
    """Average precision from lines of '<label01> <score>'."""
    labels, scores = [], []
    for n, line in enumerate(Path(file).read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            label, score = line.split()
            labels.append(int(label))
            scores.append(float(score))
        except ValueError:
            raise DomainError("parse_error", f"{file}:{n}: expected '<label01> <score>'")
    try:
        click.echo(f"{average_precision(labels, scores):.5f}")
    except ValueError as e:
        raise DomainError("bad_input", str(e))


@metrics.command("map")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def metrics_map(file):
    """Mean AP from 26 lines of per-category values ('Name value' or bare)."""
    values = []
    for line in Path(file).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(float(line.rsplit(None, 1)[-1]))
    try:
        click.echo(f"{mean_ap(values):.5f}")
    except ValueError as e:
        raise DomainError("bad_input", str(e))


@metrics.command("vad")
@click.argument("preds", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth", type=click.Path(exists=True, dir_okay=False))
def metrics_vad(preds, truth):
    """Mean VAD error from two files of 'v a d' lines."""

    def read(path):
        out = []
        for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DomainError("parse_error", f"{path}:{n}: expected 'v a d'")
            out.append(tuple(float(p) for p in parts))
        return out

    try:
        per_dim = vad_error(read(preds), read(truth))
        click.echo(f"{mean_vad_error(per_dim):.5f}")
    except ValueError as e:
        raise DomainError("bad_input", str(e))


if __name__ == "__main__":
    main()
