"""The virtual robot: bus subscriber loop and emotion polling loop.

Two independent loops that never share mutable state directly: the
instruction loop applies delivered commands to the kinematic state,
acks, and reports state; the emotion loop posts camera frames to the
analysis service and republishes reports. A hung or down emotion service
never delays instruction execution or acks.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Protocol, Sequence

import httpx

from ..emotion.wire import EmotionReport, parse_response
from ..model import Kind, Phase, RobotState, parse_instruction
from .kinematics import KinematicConfig, apply

log = logging.getLogger("wolly.robot")

DEFAULT_BACKOFF_BASE = 0.5
DEFAULT_BACKOFF_CAP = 30.0
DEFAULT_EMOTION_PERIOD = 2.0


class FrameSource(Protocol):
    def frame(self) -> tuple[bytes, str]:
        """Newest camera frame as (bytes, content type)."""


@dataclass
class StaticFrameSource:
    data: bytes
    content_type: str = "image/png"

    def frame(self) -> tuple[bytes, str]:
        return self.data, self.content_type


@dataclass(frozen=True)
class Credentials:
    username: str = "wolly-robot"
    password: str = "wolly-robot"
    role: str = "robot"


def login_or_create(client: httpx.Client, base_url: str, creds: Credentials) -> str:
    """Login, creating the account on first contact. Returns the token."""
    r = client.post(f"{base_url}/api/login",
                    json={"username": creds.username, "password": creds.password})
    if r.status_code == 401:
        created = client.post(f"{base_url}/api/accounts", json={
            "username": creds.username, "password": creds.password, "role": creds.role})
        if created.status_code not in (201, 409):
            created.raise_for_status()
        r = client.post(f"{base_url}/api/login",
                        json={"username": creds.username, "password": creds.password})
    r.raise_for_status()
    return r.json()["token"]


class RobotRuntime:
    """Owns the robot's state machine and its two service loops."""

    def __init__(self, bus_url: str, cfg: KinematicConfig = KinematicConfig(),
                 credentials: Credentials = Credentials(),
                 frame_source: Optional[FrameSource] = None,
                 emotion_url: Optional[str] = None,
                 emotion_period: float = DEFAULT_EMOTION_PERIOD,
                 backoff_base: float = DEFAULT_BACKOFF_BASE,
                 backoff_cap: float = DEFAULT_BACKOFF_CAP,
                 state_listener: Optional[Callable[[RobotState, str, int], None]] = None,
                 report_subscribers: Iterable[Callable[[EmotionReport], None]] = ()):
        self.bus_url = bus_url.rstrip("/")
        self.cfg = cfg
        self.credentials = credentials
        self.frame_source = frame_source
        self.emotion_url = emotion_url.rstrip("/") if emotion_url else None
        self.emotion_period = emotion_period
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.state_listener = state_listener
        self.report_subscribers = list(report_subscribers)
        self.stop_event = threading.Event()
        self._state_lock = threading.Lock()
        self._state = RobotState()
        self._applied: set[tuple[str, int]] = set()
        self._current_program: Optional[str] = None
        self._threads: list[threading.Thread] = []

    @property
    def state(self) -> RobotState:
        with self._state_lock:
            return self._state

    # -- instruction loop ---------------------------------------------------

    def run(self) -> None:
        """Subscribe-execute-ack loop; blocks until stop_event is set."""
        backoff = self.backoff_base
        while not self.stop_event.is_set():
            try:
                with httpx.Client(timeout=httpx.Timeout(5.0, read=30.0)) as client:
                    token = login_or_create(client, self.bus_url, self.credentials)
                    headers = {"authorization": f"Bearer {token}"}
                    with client.stream("GET", f"{self.bus_url}/api/robot/stream",
                                       headers=headers) as response:
                        if response.status_code != 200:
                            log.warning("stream rejected: %s", response.status_code)
                            raise httpx.TransportError("stream rejected")
                        for line in response.iter_lines():
                            if self.stop_event.is_set():
                                return
                            if not line:
                                continue
                            backoff = self.backoff_base  # healthy connection
                            self._handle_line(client, headers, json.loads(line))
            except (httpx.HTTPError, OSError, json.JSONDecodeError) as e:
                if self.stop_event.is_set():
                    return
                log.info("bus connection lost (%s); retrying in %.1fs", e, backoff)
                self.stop_event.wait(backoff)
                backoff = min(backoff * 2, self.backoff_cap)

    def _handle_line(self, client: httpx.Client, headers: dict, event: dict) -> None:
        if event.get("type") != "deliver":
            return
        program_id = event["program_id"]
        seq = int(event["seq"])
        if program_id != self._current_program:
            # New program: the dedup window for the old one can go.
            self._applied = {k for k in self._applied if k[0] == program_id}
            self._current_program = program_id
        key = (program_id, seq)
        if key not in self._applied:
            instruction = parse_instruction(event["instruction"])
            with self._state_lock:
                state = apply(self._state, instruction, self.cfg)
                if instruction.kind is not Kind.STOP:
                    state = RobotState(state.pose, state.expression, Phase.EXECUTING, seq)
                self._state = state
            self._applied.add(key)
            if self.cfg.command_duration > 0:
                self.stop_event.wait(self.cfg.command_duration)
            if self.state_listener is not None:
                self.state_listener(self.state, program_id, seq)
        self._ack_and_report(client, headers, program_id, seq)

    def _ack_and_report(self, client: httpx.Client, headers: dict,
                        program_id: str, seq: int) -> None:
        try:
            r = client.post(f"{self.bus_url}/api/robot/ack", headers=headers,
                            json={"program_id": program_id, "seq": seq})
            if r.status_code != 200:
                log.warning("ack(%s, %s) rejected: %s", program_id, seq, r.text)
        except httpx.HTTPError as e:
            log.warning("ack failed: %s", e)
            raise
        state = self.state
        try:
            client.post(f"{self.bus_url}/api/robot/state", headers=headers, json={
                "pose": {"x": state.pose.x, "y": state.pose.y, "heading": state.pose.heading},
                "expression": state.expression,
                "program_id": program_id,
                "seq": seq,
            })
        except httpx.HTTPError as e:
            log.warning("state report failed: %s", e)

    # -- emotion loop ----------------------------------------------------------

    def run_emotion_poll(self) -> None:
        """Post the newest frame every period; skip ticks while in flight."""
        if self.frame_source is None or self.emotion_url is None:
            return
        next_tick = time.monotonic()
        bus_headers: Optional[dict] = None
        with httpx.Client(timeout=httpx.Timeout(5.0, read=10.0)) as client:
            while not self.stop_event.is_set():
                frame, content_type = self.frame_source.frame()
                try:
                    r = client.post(f"{self.emotion_url}/analyze", content=frame,
                                    headers={"content-type": content_type})
                    r.raise_for_status()
                    report = parse_response(r.content)
                except (httpx.HTTPError, ValueError) as e:
                    log.info("emotion poll failed: %s", e)
                else:
                    for subscriber in self.report_subscribers:
                        try:
                            subscriber(report)
                        except Exception:
                            log.exception("report subscriber failed")
                    try:
                        if bus_headers is None:
                            token = login_or_create(client, self.bus_url, self.credentials)
                            bus_headers = {"authorization": f"Bearer {token}"}
                        client.post(f"{self.bus_url}/api/robot/emotion",
                                    headers=bus_headers, content=r.content)
                    except httpx.HTTPError as e:
                        bus_headers = None
                        log.info("emotion republish failed: %s", e)
                now = time.monotonic()
                next_tick += self.emotion_period
                if next_tick <= now:  # previous request outlasted >= 1 tick: skip
                    missed = int((now - next_tick) // self.emotion_period) + 1
                    next_tick += missed * self.emotion_period
                self.stop_event.wait(max(0.0, next_tick - now))

    # -- lifecycle ----------------------------------------------------------------

    def start(self) -> None:
        """Run both loops on daemon threads (CLI and tests)."""
        self._threads = [threading.Thread(target=self.run, name="robot-instructions", daemon=True)]
        if self.frame_source is not None and self.emotion_url is not None:
            self._threads.append(threading.Thread(
                target=self.run_emotion_poll, name="robot-emotion", daemon=True))
        for t in self._threads:
            t.start()

    def stop(self, timeout: float = 5.0) -> None:
        self.stop_event.set()
        for t in self._threads:
            t.join(timeout)


def run_client(bus_endpoint: str, cfg: KinematicConfig = KinematicConfig(),
               frame_source: Optional[FrameSource] = None,
               emotion_endpoint: Optional[str] = None, **kwargs) -> None:
    """Convenience blocking entry point: both loops until interrupted."""
    runtime = RobotRuntime(bus_endpoint, cfg, frame_source=frame_source,
                           emotion_url=emotion_endpoint, **kwargs)
    runtime.start()
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        runtime.stop()
