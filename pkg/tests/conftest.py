import socket
import threading
import time

import httpx
import pytest
import uvicorn

from wolly.assets import default_rules_text, fixture_kb
from wolly.bus.core import CommandBus
from wolly.bus.http import create_bus_app
from wolly.chat import ChatService
from wolly.dialogue import load_rules
from wolly.emotion.service import create_emotion_app, stub_analyzer
from wolly.emotion.wire import Thresholds
from wolly.identity import IdentityRegistry


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """A uvicorn server on an ephemeral port, running in a thread."""

    def __init__(self, app):
        self.port = free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port,
                                log_level="warning", timeout_graceful_shutdown=2)
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self) -> "LiveServer":
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.01)
        return self

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


class BusStack:
    """Live bus app plus direct handles on its domain objects."""

    def __init__(self, tmp_path, heartbeat_interval=0.2):
        self.bus = CommandBus(heartbeat_interval=heartbeat_interval,
                              audit_path=tmp_path / "audit.log")
        self.registry = IdentityRegistry(tmp_path / "registry.jsonl", dim=16)
        self.chat = ChatService(load_rules(default_rules_text()), fixture_kb(), self.registry)
        self.app = create_bus_app(self.bus, self.chat, self.registry)
        self.server = LiveServer(self.app).start()
        self.url = self.server.url
        self.bus.create_account("teacher", "pw", "controller")
        self.bus.create_account("wolly", "pw", "robot")

    def token(self, username="teacher", password="pw") -> str:
        return self.bus.login(username, password).token

    def headers(self, **kw) -> dict:
        return {"authorization": f"Bearer {self.token(**kw)}"}

    def stop(self):
        self.server.stop()
        self.bus.close()
        self.registry.close()


@pytest.fixture()
def bus_stack(tmp_path):
    stack = BusStack(tmp_path)
    yield stack
    stack.stop()


@pytest.fixture()
def emotion_server():
    app = create_emotion_app(stub_analyzer(Thresholds.uniform(0.1)))
    server = LiveServer(app).start()
    yield server
    server.stop()


@pytest.fixture()
def http_client():
    with httpx.Client(timeout=10.0) as client:
        yield client
