"""The realtime command queue: one program in flight, stop-and-wait delivery.

Controllers submit programs or teleop actions; the single robot consumer
subscribes, receives instructions strictly in order, and acknowledges
each one before the next is released. Acking the final instruction
resets the queue to IDLE, ready for a new command set. A stop request is
always accepted: undelivered instructions are discarded and a Stop
instruction is appended for delivery, so at most the one already-released
instruction still executes.

Every state transition happens under one lock (the single logical owner
of the queue state), which makes the externally observable behavior
linearizable. Waiting consumers are coordinated with a condition variable
on the same lock.

Account handling is a deliberately minimal token scheme: open signup,
login returns an unguessable bearer token, roles are ``controller`` and
``robot``.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..model import (
    MAX_PROGRAM_LEN,
    STOP,
    Instruction,
    Kind,
    Program,
    validate_program,
)

TELEOP_ACTIONS = {
    "forward": Kind.MOVE_FORWARD,
    "right": Kind.MOVE_RIGHT,
    "left": Kind.MOVE_LEFT,
    "backward": Kind.MOVE_BACKWARD,
    "stop": Kind.STOP,
}

ROLES = ("controller", "robot")

DEFAULT_HEARTBEAT_INTERVAL = 5.0
MISSED_HEARTBEAT_LIMIT = 3


class BusError(Exception):
    code = "error"
    http_status = 400

    def __init__(self, reason: str = ""):
        self.reason = reason or self.code
        super().__init__(f"{self.code}: {self.reason}")


class Unauthorized(BusError):
    code = "unauthorized"
    http_status = 401


class Busy(BusError):
    code = "busy"
    http_status = 409


class Invalid(BusError):
    code = "invalid"
    http_status = 422


class Conflict(BusError):
    code = "conflict"
    http_status = 409


class UnknownSeq(BusError):
    code = "unknown_seq"
    http_status = 409


class StaleProgram(BusError):
    code = "stale_program"
    http_status = 409


class UsernameTaken(BusError):
    code = "username_taken"
    http_status = 409


class SubscriptionClosed(Exception):
    """The stream was preempted or shut down; reconnect to resume."""


@dataclass(frozen=True)
class Account:
    id: str
    username: str
    role: str
    salt: str
    password_hash: str


@dataclass(frozen=True)
class Session:
    token: str
    account_id: str
    role: str


@dataclass(frozen=True)
class DeliveryEvent:
    seq: int
    instruction: Instruction
    program_id: str


def _hash_password(salt: str, password: str) -> str:
    return hashlib.sha256((salt + password).encode()).hexdigest()


class Subscription:
    """The robot's event channel. Delivery pushes under the bus lock;
    the consumer blocks in next_event. A timeout return of None means a
    heartbeat is due."""

    def __init__(self, bus: "CommandBus"):
        self._bus = bus
        self._queue: deque[DeliveryEvent] = deque()
        self.closed = False
        self.last_touch = bus._clock()

    def _push(self, event: DeliveryEvent) -> None:
        self._queue.append(event)
        self._bus._cond.notify_all()

    def next_event(self, timeout: Optional[float] = None) -> Optional[DeliveryEvent]:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._bus._cond:
            while True:
                if self.closed:
                    raise SubscriptionClosed()
                if self._queue:
                    return self._queue.popleft()
                if deadline is None:
                    self._bus._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return None
                    self._bus._cond.wait(remaining)

    def touch(self) -> None:
        with self._bus._lock:
            self.last_touch = self._bus._clock()

    def close(self) -> None:
        with self._bus._cond:
            self.closed = True
            if self._bus._subscription is self:
                self._bus._subscription = None
            self._bus._cond.notify_all()


class CommandBus:
    def __init__(self, clock=time.monotonic,
                 heartbeat_interval: float = DEFAULT_HEARTBEAT_INTERVAL,
                 audit_path=None,
                 max_program_len: int = MAX_PROGRAM_LEN):
        self._clock = clock
        self.heartbeat_interval = heartbeat_interval
        self.max_program_len = max_program_len
        self._lock = threading.RLock()
        self._cond = threading.Condition(self._lock)
        self._accounts: dict[str, Account] = {}  # by username
        self._sessions: dict[str, Session] = {}  # by token
        # queue state (phase IDLE <=> _program is None)
        self._program: Optional[Program] = None
        self._next_seq = 0
        self._acked: set[int] = set()
        self._stop_pending = False
        self._last_completed: Optional[str] = None
        self._subscription: Optional[Subscription] = None
        self._robot_report: Optional[dict] = None
        self._audit_file = open(audit_path, "a", encoding="utf-8") if audit_path else None

    # -- audit ----------------------------------------------------------------

    def _audit(self, event: str, **fields) -> None:
        if self._audit_file is None:
            return
        record = {"ts": time.time(), "event": event, **fields}
        self._audit_file.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._audit_file.flush()

    def close(self) -> None:
        with self._lock:
            if self._subscription is not None:
                self._subscription.close()
            if self._audit_file is not None:
                self._audit_file.close()
                self._audit_file = None

    # -- accounts and sessions --------------------------------------------------

    def create_account(self, username: str, password: str, role: str) -> str:
        if role not in ROLES:
            raise Invalid(f"unknown role {role!r}")
        if not username or not password:
            raise Invalid("username and password must be non-empty")
        with self._lock:
            if username in self._accounts:
                raise UsernameTaken(f"username {username!r} already exists")
            salt = secrets.token_hex(8)
            account = Account(secrets.token_hex(8), username, role, salt,
                              _hash_password(salt, password))
            self._accounts[username] = account
            self._audit("account_created", username=username, role=role)
            return account.id

    def login(self, username: str, password: str) -> Session:
        with self._lock:
            account = self._accounts.get(username)
            if account is None or _hash_password(account.salt, password) != account.password_hash:
                raise Unauthorized("bad credentials")
            session = Session(secrets.token_hex(32), account.id, account.role)
            self._sessions[session.token] = session
            return session

    def _authenticate(self, token: str, role: Optional[str] = None) -> Session:
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise Unauthorized("unknown or expired token")
        if role is not None and session.role != role:
            raise Unauthorized(f"requires {role} role")
        return session

    # -- queue state helpers -----------------------------------------------------

    @property
    def phase(self) -> str:
        with self._lock:
            return "RUNNING" if self._program is not None else "IDLE"

    def _assert_invariants(self) -> None:
        if self._program is None:
            assert self._next_seq == 0 and not self._acked
        else:
            assert self._next_seq <= len(self._program)
            assert self._acked == set(range(len(self._acked)))  # contiguous prefix
            assert len(self._acked) <= self._next_seq

    def _pump(self) -> None:
        """Release the next instruction when stop-and-wait allows it."""
        if self._program is None or self._subscription is None:
            return
        if len(self._acked) == self._next_seq and self._next_seq < len(self._program):
            event = DeliveryEvent(self._next_seq,
                                  self._program.instructions[self._next_seq],
                                  self._program.id)
            self._next_seq += 1
            self._subscription._push(event)
            self._audit("deliver", program_id=event.program_id, seq=event.seq)
        self._assert_invariants()

    def _start(self, program: Program) -> str:
        self._program = program
        self._next_seq = 0
        self._acked = set()
        self._stop_pending = False
        self._audit("start", program_id=program.id, length=len(program))
        self._pump()
        self._cond.notify_all()
        return program.id

    # -- controller operations ------------------------------------------------------

    def submit_program(self, token: str, program: Program) -> str:
        session = self._authenticate(token, "controller")
        error = validate_program(program, self.max_program_len)
        if error is not None:
            raise Invalid(error.reason)
        with self._lock:
            if self._program is not None:
                raise Busy("a program is already running")
            program = Program(program.instructions, id=program.id,
                              author=program.author or session.account_id)
            self._audit("submit", program_id=program.id, author=program.author)
            return self._start(program)

    def teleop(self, token: str, action: str) -> str:
        session = self._authenticate(token, "controller")
        if action not in TELEOP_ACTIONS:
            raise Invalid(f"unknown teleop action {action!r}")
        with self._lock:
            if action != "stop":
                if self._program is not None:
                    raise Busy("a program is already running")
                program = Program((Instruction(TELEOP_ACTIONS[action]),),
                                  author=session.account_id)
                self._audit("teleop", action=action, program_id=program.id)
                return self._start(program)
            # Stop is always accepted.
            if self._program is None:
                program = Program((STOP,), author=session.account_id)
                self._audit("teleop", action="stop", program_id=program.id)
                return self._start(program)
            if not self._stop_pending:
                delivered = self._program.instructions[: self._next_seq]
                discarded = len(self._program) - self._next_seq
                self._program = Program(delivered + (STOP,), id=self._program.id,
                                        author=self._program.author)
                self._stop_pending = True
                self._audit("stop", program_id=self._program.id, discarded=discarded)
                self._pump()
            return self._program.id

    # -- robot operations --------------------------------------------------------

    def subscribe(self, token: str) -> Subscription:
        self._authenticate(token, "robot")
        with self._lock:
            existing = self._subscription
            if existing is not None:
                expired = (self._clock() - existing.last_touch
                           > MISSED_HEARTBEAT_LIMIT * self.heartbeat_interval)
                if expired:
                    existing.close()
                else:
                    raise Conflict("another robot is already subscribed")
            subscription = Subscription(self)
            self._subscription = subscription
            self._audit("subscribe")
            if self._program is not None and len(self._acked) < self._next_seq:
                # Reconnect mid-program: redeliver the lowest unacked seq.
                seq = len(self._acked)
                event = DeliveryEvent(seq, self._program.instructions[seq], self._program.id)
                subscription._push(event)
                self._audit("redeliver", program_id=event.program_id, seq=event.seq)
            else:
                self._pump()
            return subscription

    def ack(self, token: str, program_id: str, seq: int) -> None:
        self._authenticate(token, "robot")
        with self._lock:
            if self._program is None or program_id != self._program.id:
                if program_id == self._last_completed:
                    return  # duplicate ack after completion: idempotent no-op
                raise StaleProgram(f"program {program_id!r} is not active")
            if not 0 <= seq < self._next_seq:
                raise UnknownSeq(f"seq {seq} was never delivered")
            if seq in self._acked:
                return  # idempotent
            self._acked.add(seq)
            self._audit("ack", program_id=program_id, seq=seq)
            if len(self._acked) == len(self._program):
                self._last_completed = self._program.id
                self._program = None
                self._next_seq = 0
                self._acked = set()
                self._stop_pending = False
                self._audit("reset", program_id=program_id)
                self._cond.notify_all()
            else:
                self._pump()
            self._assert_invariants()

    def report_state(self, token: str, payload: dict) -> None:
        self._authenticate(token, "robot")
        with self._lock:
            self._robot_report = {**payload, "reported_at": time.time()}

    # -- shared -------------------------------------------------------------------

    def status(self, token: str) -> dict:
        self._authenticate(token)
        with self._lock:
            out = {
                "phase": "RUNNING" if self._program is not None else "IDLE",
                "delivered": self._next_seq,
                "acked_count": len(self._acked),
                "robot": self._robot_report,
            }
            if self._program is not None:
                out["program_id"] = self._program.id
                out["program_length"] = len(self._program)
            return out

    def wait_idle(self, timeout: float) -> bool:
        """Block until the queue resets to IDLE (test/CLI convenience)."""
        deadline = time.monotonic() + timeout
        with self._cond:
            while self._program is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._cond.wait(remaining)
            return True
