"""Block-program trees and their compilation to flat instruction streams.

A block program is a finite tree of statement blocks (the six robot
commands plus repeat / if / set_var / sequence) with integer expressions
and boolean conditions. Compilation statically evaluates the control
flow: loops are unrolled, conditionals resolved, variables computed, and
the result is the exact instruction trace a sequential executor would
produce. Two deliberately different evaluators exist:

* :func:`compile_blocks` - an iterative, explicit-stack lowering pass;
* :func:`interpret` - a direct recursive evaluator.

They implement the same contract and serve as each other's oracle.

Documents arrive as JSON: every block is an object with a ``kind`` key
plus kind-specific fields (see :func:`parse_blocks`). Integer arithmetic
uses Python ints and is exact at least over the signed 64-bit range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .model import (
    EXPRESSIONS,
    MAX_PROGRAM_LEN,
    Instruction,
    Kind,
    ParseError,
    Program,
)
from .model import emit_script as _emit_script_lines

# ---------------------------------------------------------------------------
# Tree types

IntExpr = Union["Lit", "Var", "BinOp"]
BoolExpr = Union["Compare", "BoolOp", "Not"]


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    left: IntExpr
    right: IntExpr


@dataclass(frozen=True)
class Compare:
    op: str  # one of < = >
    left: IntExpr
    right: IntExpr


@dataclass(frozen=True)
class BoolOp:
    op: str  # and | or
    left: BoolExpr
    right: BoolExpr


@dataclass(frozen=True)
class Not:
    operand: BoolExpr


@dataclass(frozen=True)
class Action:
    """One of the five payload-free command blocks."""

    kind: str  # move_forward | move_right | move_left | move_backward | stop


@dataclass(frozen=True)
class MakeExpression:
    expression: str


@dataclass(frozen=True)
class Repeat:
    count: IntExpr
    body: tuple["BlockNode", ...]


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    then: tuple["BlockNode", ...]
    orelse: tuple["BlockNode", ...] = ()


@dataclass(frozen=True)
class SetVar:
    name: str
    value: IntExpr


@dataclass(frozen=True)
class Sequence:
    children: tuple["BlockNode", ...]


BlockNode = Union[Action, MakeExpression, Repeat, If, SetVar, Sequence]

_ACTION_KINDS = {
    "move_forward": Kind.MOVE_FORWARD,
    "move_right": Kind.MOVE_RIGHT,
    "move_left": Kind.MOVE_LEFT,
    "move_backward": Kind.MOVE_BACKWARD,
    "stop": Kind.STOP,
}


@dataclass(frozen=True)
class CompileLimits:
    """Caps on the emitted trace and on evaluation work.

    ``max_steps`` bounds total block executions so that degenerate loop
    nests that emit nothing (and therefore never trip the instruction
    cap) still terminate. Both evaluators count steps identically.
    """

    max_instructions: int = MAX_PROGRAM_LEN
    max_repeat: int = 1_000
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if self.max_instructions <= 0 or self.max_repeat <= 0 or self.max_steps <= 0:
            raise ValueError("limits must be positive")


class CompileError(Exception):
    TOO_MANY_INSTRUCTIONS = "TooManyInstructions"
    UNDEFINED_VARIABLE = "UndefinedVariable"
    REPEAT_BOUND = "RepeatBound"

    def __init__(self, code: str, reason: str, name: Optional[str] = None):
        self.code = code
        self.reason = reason
        self.name = name
        super().__init__(f"{code}: {reason}")


# ---------------------------------------------------------------------------
# Document parsing


def _err(path: str, reason: str) -> ParseError:
    return ParseError(reason, path=path)


def _expect_keys(obj: dict, path: str, required: set[str], optional: set[str] = frozenset()) -> None:
    keys = set(obj) - {"kind"}
    missing = required - keys
    if missing:
        raise _err(path, f"missing field(s) {sorted(missing)} for kind {obj.get('kind')!r}")
    unknown = keys - required - optional
    if unknown:
        raise _err(path, f"unknown field(s) {sorted(unknown)} for kind {obj.get('kind')!r}")


def _parse_int_expr(doc: Any, path: str) -> IntExpr:
    if isinstance(doc, bool):
        raise _err(path, "expected an integer expression, got a boolean")
    if isinstance(doc, int):
        return Lit(doc)
    if not isinstance(doc, dict):
        raise _err(path, f"expected an integer expression, got {type(doc).__name__}")
    if "lit" in doc:
        _expect_keys(doc, path, {"lit"})
        if not isinstance(doc["lit"], int) or isinstance(doc["lit"], bool):
            raise _err(path + ".lit", "literal must be an integer")
        return Lit(doc["lit"])
    if "var" in doc:
        _expect_keys(doc, path, {"var"})
        if not isinstance(doc["var"], str) or not doc["var"]:
            raise _err(path + ".var", "variable name must be a non-empty string")
        return Var(doc["var"])
    if "op" in doc:
        op = doc["op"]
        if op not in ("+", "-", "*"):
            raise _err(path + ".op", f"unknown integer operator {op!r}")
        _expect_keys(doc, path, {"op", "left", "right"})
        return BinOp(
            op,
            _parse_int_expr(doc["left"], path + ".left"),
            _parse_int_expr(doc["right"], path + ".right"),
        )
    raise _err(path, "integer expression needs one of: lit, var, op")


def _parse_bool_expr(doc: Any, path: str) -> BoolExpr:
    if not isinstance(doc, dict):
        raise _err(path, f"expected a condition object, got {type(doc).__name__}")
    op = doc.get("op")
    if op in ("<", "=", ">"):
        _expect_keys(doc, path, {"op", "left", "right"})
        return Compare(
            op,
            _parse_int_expr(doc["left"], path + ".left"),
            _parse_int_expr(doc["right"], path + ".right"),
        )
    if op in ("and", "or"):
        _expect_keys(doc, path, {"op", "left", "right"})
        return BoolOp(
            op,
            _parse_bool_expr(doc["left"], path + ".left"),
            _parse_bool_expr(doc["right"], path + ".right"),
        )
    if op == "not":
        _expect_keys(doc, path, {"op", "operand"})
        return Not(_parse_bool_expr(doc["operand"], path + ".operand"))
    raise _err(path + ".op", f"unknown condition operator {op!r}")


def _parse_body(doc: Any, path: str) -> tuple[BlockNode, ...]:
    if not isinstance(doc, list):
        raise _err(path, f"expected a list of blocks, got {type(doc).__name__}")
    return tuple(_parse_node(child, f"{path}[{i}]") for i, child in enumerate(doc))


def _parse_node(doc: Any, path: str) -> BlockNode:
    if not isinstance(doc, dict):
        raise _err(path, f"expected a block object, got {type(doc).__name__}")
    kind = doc.get("kind")
    if kind in _ACTION_KINDS:
        _expect_keys(doc, path, set())
        return Action(kind)
    if kind == "make_expression":
        _expect_keys(doc, path, {"expression"})
        name = doc["expression"]
        if name not in EXPRESSIONS:
            raise _err(path + ".expression", f"unknown expression {name!r}")
        return MakeExpression(name)
    if kind == "repeat":
        _expect_keys(doc, path, {"count", "body"})
        return Repeat(
            _parse_int_expr(doc["count"], path + ".count"),
            _parse_body(doc["body"], path + ".body"),
        )
    if kind == "if":
        _expect_keys(doc, path, {"cond", "then"}, optional={"else"})
        return If(
            _parse_bool_expr(doc["cond"], path + ".cond"),
            _parse_body(doc["then"], path + ".then"),
            _parse_body(doc.get("else", []), path + ".else"),
        )
    if kind == "set_var":
        _expect_keys(doc, path, {"name", "value"})
        name = doc["name"]
        if not isinstance(name, str) or not name:
            raise _err(path + ".name", "variable name must be a non-empty string")
        return SetVar(name, _parse_int_expr(doc["value"], path + ".value"))
    if kind == "sequence":
        _expect_keys(doc, path, {"children"})
        return Sequence(_parse_body(doc["children"], path + ".children"))
    raise _err(path, f"unknown block kind {kind!r}")


def parse_blocks(source: Union[str, bytes, dict]) -> BlockNode:
    """Parse a block-tree document (JSON text or an already-decoded tree).

    Unknown kinds, unknown fields, and arity errors raise
    :class:`wolly.model.ParseError` with the offending document path.
    """
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", path="$") from e
    else:
        doc = source
    return _parse_node(doc, "$")


# ---------------------------------------------------------------------------
# Compilation (iterative) and interpretation (recursive)


class _Budget:
    """Shared step/instruction accounting for both evaluators."""

    __slots__ = ("limits", "steps")

    def __init__(self, limits: CompileLimits):
        self.limits = limits
        self.steps = 0

    def step(self) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise CompileError(
                CompileError.TOO_MANY_INSTRUCTIONS,
                f"evaluation exceeded {self.limits.max_steps} block executions",
            )

    def emit(self, out: list[Instruction], instr: Instruction) -> None:
        if len(out) >= self.limits.max_instructions:
            raise CompileError(
                CompileError.TOO_MANY_INSTRUCTIONS,
                f"trace would exceed {self.limits.max_instructions} instructions",
            )
        out.append(instr)

    def repeat_count(self, n: int) -> int:
        if n < 0:
            raise CompileError(CompileError.REPEAT_BOUND, f"repeat count {n} is negative")
        if n > self.limits.max_repeat:
            raise CompileError(
                CompileError.REPEAT_BOUND,
                f"repeat count {n} exceeds {self.limits.max_repeat}",
            )
        return n


def _undefined(name: str) -> CompileError:
    return CompileError(CompileError.UNDEFINED_VARIABLE, f"variable {name!r} read before set_var", name=name)


def _eval_int_iter(expr: IntExpr, env: dict[str, int]) -> int:
    """Postorder evaluation with an explicit stack (compile route)."""
    work: list[tuple[str, Any]] = [("visit", expr)]
    values: list[int] = []
    while work:
        tag, node = work.pop()
        if tag == "visit":
            if isinstance(node, Lit):
                values.append(node.value)
            elif isinstance(node, Var):
                if node.name not in env:
                    raise _undefined(node.name)
                values.append(env[node.name])
            else:  # BinOp
                work.append(("apply", node.op))
                work.append(("visit", node.right))
                work.append(("visit", node.left))
        else:
            b = values.pop()
            a = values.pop()
            if node == "+":
                values.append(a + b)
            elif node == "-":
                values.append(a - b)
            else:
                values.append(a * b)
    return values[0]


def _eval_bool_iter(expr: BoolExpr, env: dict[str, int]) -> bool:
    # Conditions nest shallowly; plain recursion over the boolean shell
    # with iterative integer leaves keeps this readable.
    if isinstance(expr, Compare):
        a = _eval_int_iter(expr.left, env)
        b = _eval_int_iter(expr.right, env)
        return a < b if expr.op == "<" else a == b if expr.op == "=" else a > b
    if isinstance(expr, BoolOp):
        left = _eval_bool_iter(expr.left, env)
        right = _eval_bool_iter(expr.right, env)
        return (left and right) if expr.op == "and" else (left or right)
    return not _eval_bool_iter(expr.operand, env)


@dataclass
class _LoopFrame:
    remaining: int
    body: tuple[BlockNode, ...]


def compile_blocks(root: BlockNode, limits: CompileLimits = CompileLimits(), author: str = "") -> Program:
    """Lower a block tree to its flat instruction trace.

    Pure function of (tree, limits): loops unrolled, conditionals
    resolved, variables statically evaluated. Raises
    :class:`CompileError` with code TooManyInstructions,
    UndefinedVariable, or RepeatBound.
    """
    budget = _Budget(limits)
    out: list[Instruction] = []
    env: dict[str, int] = {}
    stack: list[Any] = [root]
    while stack:
        item = stack.pop()
        if isinstance(item, _LoopFrame):
            if item.remaining > 0:
                next_frame = _LoopFrame(item.remaining - 1, item.body)
                stack.append(next_frame)
                stack.extend(reversed(item.body))
            continue
        budget.step()
        if isinstance(item, Sequence):
            stack.extend(reversed(item.children))
        elif isinstance(item, Action):
            budget.emit(out, Instruction(_ACTION_KINDS[item.kind]))
        elif isinstance(item, MakeExpression):
            budget.emit(out, Instruction(Kind.MAKE_EXPRESSION, item.expression))
        elif isinstance(item, SetVar):
            env[item.name] = _eval_int_iter(item.value, env)
        elif isinstance(item, If):
            branch = item.then if _eval_bool_iter(item.cond, env) else item.orelse
            stack.extend(reversed(branch))
        elif isinstance(item, Repeat):
            n = budget.repeat_count(_eval_int_iter(item.count, env))
            stack.append(_LoopFrame(n, item.body))
        else:
            raise TypeError(f"not a block node: {item!r}")
    return Program(tuple(out), author=author)


def _eval_int_rec(expr: IntExpr, env: dict[str, int]) -> int:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise _undefined(expr.name) from None
    a = _eval_int_rec(expr.left, env)
    b = _eval_int_rec(expr.right, env)
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    return a * b


def _eval_bool_rec(expr: BoolExpr, env: dict[str, int]) -> bool:
    if isinstance(expr, Compare):
        a = _eval_int_rec(expr.left, env)
        b = _eval_int_rec(expr.right, env)
        if expr.op == "<":
            return a < b
        if expr.op == "=":
            return a == b
        return a > b
    if isinstance(expr, BoolOp):
        l = _eval_bool_rec(expr.left, env)
        r = _eval_bool_rec(expr.right, env)
        return (l and r) if expr.op == "and" else (l or r)
    return not _eval_bool_rec(expr.operand, env)


def interpret(root: BlockNode, limits: CompileLimits = CompileLimits(), author: str = "") -> Program:
    """Direct recursive evaluator; contract identical to compile_blocks."""
    budget = _Budget(limits)
    out: list[Instruction] = []
    env: dict[str, int] = {}

    def run(node: BlockNode) -> None:
        budget.step()
        if isinstance(node, Sequence):
            for child in node.children:
                run(child)
        elif isinstance(node, Action):
            budget.emit(out, Instruction(_ACTION_KINDS[node.kind]))
        elif isinstance(node, MakeExpression):
            budget.emit(out, Instruction(Kind.MAKE_EXPRESSION, node.expression))
        elif isinstance(node, SetVar):
            env[node.name] = _eval_int_rec(node.value, env)
        elif isinstance(node, If):
            for child in node.then if _eval_bool_rec(node.cond, env) else node.orelse:
                run(child)
        elif isinstance(node, Repeat):
            n = budget.repeat_count(_eval_int_rec(node.count, env))
            for _ in range(n):
                for child in node.body:
                    run(child)
        else:
            raise TypeError(f"not a block node: {node!r}")

    run(root)
    return Program(tuple(out), author=author)


def emit_script(p: Program) -> str:
    """Canonical script for a compiled program, one line per instruction."""
    return _emit_script_lines(p.instructions)
