"""Shared domain vocabulary: instructions, expressions, programs, poses.

Everything here is an immutable value type, safe to share across threads.
The canonical one-command-per-line script format lives here too, so every
other module round-trips through a single parser/serializer pair.
"""

from __future__ import annotations

import math
import secrets
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

MAX_PROGRAM_LEN = 10_000

# The closed set of facial expressions the robot can show. The hardware
# exposes eleven displays; the names are configuration, but the set size
# and spelling are frozen for serialization stability.
EXPRESSIONS: tuple[str, ...] = (
    "happy",
    "sad",
    "angry",
    "surprised",
    "afraid",
    "disgusted",
    "neutral",
    "love",
    "sleepy",
    "confused",
    "laughing",
)

assert len(EXPRESSIONS) == 11
assert len(set(EXPRESSIONS)) == 11


class Kind(Enum):
    """The six robot commands."""

    MOVE_FORWARD = "FORWARD"
    MOVE_RIGHT = "RIGHT"
    MOVE_LEFT = "LEFT"
    MOVE_BACKWARD = "BACKWARD"
    STOP = "STOP"
    MAKE_EXPRESSION = "EXPRESSION"


_TOKEN_TO_KIND = {k.value: k for k in Kind}


class ParseError(ValueError):
    """Raised for malformed script lines or block documents."""

    def __init__(self, reason: str, line: Optional[int] = None, path: Optional[str] = None):
        self.reason = reason
        self.line = line
        self.path = path
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif path is not None:
            where = f" (at {path})"
        super().__init__(f"{reason}{where}")


@dataclass(frozen=True)
class ValidationError:
    index: Optional[int]
    reason: str


@dataclass(frozen=True)
class Instruction:
    """One robot command; ``expression`` is set iff kind is MAKE_EXPRESSION.

    Construction enforces the structural invariant (payload presence).
    The closed expression-name set is checked by :func:`validate_program`
    and by the script parser, not here, so an invalid name can still be
    represented and reported with its program index.
    """

    kind: Kind
    expression: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is Kind.MAKE_EXPRESSION:
            if not self.expression:
                raise ValueError("MAKE_EXPRESSION requires an expression name")
        elif self.expression is not None:
            raise ValueError(f"{self.kind.name} carries no payload")


# Convenience singletons for the five payload-free commands.
FORWARD = Instruction(Kind.MOVE_FORWARD)
RIGHT = Instruction(Kind.MOVE_RIGHT)
LEFT = Instruction(Kind.MOVE_LEFT)
BACKWARD = Instruction(Kind.MOVE_BACKWARD)
STOP = Instruction(Kind.STOP)


def make_expression(name: str) -> Instruction:
    return Instruction(Kind.MAKE_EXPRESSION, name)


def parse_instruction(text: str, line: Optional[int] = None) -> Instruction:
    """Parse one canonical script line into an Instruction.

    Accepts exactly the tokens FORWARD, RIGHT, LEFT, BACKWARD, STOP and
    ``EXPRESSION <name>`` where ``<name>`` is one of the eleven known
    expressions. Raises :class:`ParseError` otherwise.
    """
    if "\n" in text:
        raise ParseError("expected a single line", line=line)
    parts = text.strip().split()
    if not parts:
        raise ParseError("empty command", line=line)
    token = parts[0]
    kind = _TOKEN_TO_KIND.get(token)
    if kind is None:
        raise ParseError(f"unknown token {token!r}", line=line)
    if kind is Kind.MAKE_EXPRESSION:
        if len(parts) != 2:
            raise ParseError("EXPRESSION takes exactly one name", line=line)
        name = parts[1]
        if name not in EXPRESSIONS:
            raise ParseError(f"unknown expression {name!r}", line=line)
        return Instruction(kind, name)
    if len(parts) != 1:
        raise ParseError(f"{token} takes no argument", line=line)
    return Instruction(kind)


def serialize_instruction(instr: Instruction) -> str:
    """Inverse of :func:`parse_instruction` for all valid instructions."""
    if instr.kind is Kind.MAKE_EXPRESSION:
        return f"EXPRESSION {instr.expression}"
    return instr.kind.value


def new_program_id() -> str:
    return secrets.token_hex(8)


@dataclass(frozen=True)
class Program:
    """An ordered command set; list order is execution order."""

    instructions: tuple[Instruction, ...]
    id: str = field(default_factory=new_program_id)
    author: str = ""

    def __len__(self) -> int:
        return len(self.instructions)


def program_of(instructions: Iterable[Instruction], author: str = "") -> Program:
    return Program(tuple(instructions), author=author)


def validate_program(p: Program, max_len: int = MAX_PROGRAM_LEN) -> Optional[ValidationError]:
    """Return None if the program is acceptable, else the first defect."""
    if len(p.instructions) > max_len:
        return ValidationError(index=None, reason=f"too long: {len(p.instructions)} > {max_len}")
    for i, instr in enumerate(p.instructions):
        if instr.kind is Kind.MAKE_EXPRESSION and instr.expression not in EXPRESSIONS:
            return ValidationError(index=i, reason=f"unknown expression {instr.expression!r}")
    return None


def parse_script(text: str) -> list[Instruction]:
    """Parse a whole canonical script: one command per line.

    Blank lines are ignored so hand-edited files stay forgiving; every
    other line must parse. Errors carry 1-based line numbers.
    """
    out: list[Instruction] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        out.append(parse_instruction(raw, line=n))
    return out


def emit_script(instructions: Iterable[Instruction]) -> str:
    """Canonical script text: newline-terminated, no trailing whitespace."""
    return "".join(serialize_instruction(i) + "\n" for i in instructions)


def normalize_heading(degrees: float) -> float:
    """Map any finite angle to [0, 360); normalize(h + 360k) == normalize(h)."""
    h = math.fmod(degrees, 360.0)
    if h < 0.0:
        h += 360.0
    # fmod can yield exactly 360.0 after the negative adjustment of a
    # value like -1e-14; fold that back onto 0.
    if h >= 360.0:
        h -= 360.0
    return h


@dataclass(frozen=True)
class RobotPose:
    """Planar pose. Heading is degrees in [0, 360), 0 = +x, CCW positive."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "heading", normalize_heading(self.heading))


class Phase(Enum):
    IDLE = "idle"
    EXECUTING = "executing"


@dataclass(frozen=True)
class RobotState:
    pose: RobotPose = RobotPose()
    expression: str = "neutral"
    phase: Phase = Phase.IDLE
    seq: Optional[int] = None  # set iff phase is EXECUTING

    def idle(self) -> "RobotState":
        return replace(self, phase=Phase.IDLE, seq=None)
