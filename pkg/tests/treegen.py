"""Random block-tree generator shared by the compiler oracle tests."""

import random

from wolly.blocks import (
    Action,
    BinOp,
    BlockNode,
    BoolOp,
    Compare,
    If,
    Lit,
    MakeExpression,
    Not,
    Repeat,
    Sequence,
    SetVar,
    Var,
)
from wolly.model import EXPRESSIONS

_ACTIONS = ["move_forward", "move_right", "move_left", "move_backward", "stop"]
_VARS = ["x", "y", "z"]


def random_int_expr(rng: random.Random, depth: int, allow_unbound: bool) -> object:
    roll = rng.random()
    if depth <= 0 or roll < 0.55:
        return Lit(rng.randint(-2, 5))
    if roll < 0.75:
        # May reference a variable that was never set; both evaluators
        # must then agree on the UndefinedVariable error class.
        pool = _VARS if allow_unbound else _VARS[:1]
        return Var(rng.choice(pool))
    return BinOp(
        rng.choice("+-*"),
        random_int_expr(rng, depth - 1, allow_unbound),
        random_int_expr(rng, depth - 1, allow_unbound),
    )


def random_bool_expr(rng: random.Random, depth: int, allow_unbound: bool) -> object:
    roll = rng.random()
    if depth <= 0 or roll < 0.6:
        return Compare(
            rng.choice("<=>"),
            random_int_expr(rng, depth - 1, allow_unbound),
            random_int_expr(rng, depth - 1, allow_unbound),
        )
    if roll < 0.85:
        return BoolOp(
            rng.choice(["and", "or"]),
            random_bool_expr(rng, depth - 1, allow_unbound),
            random_bool_expr(rng, depth - 1, allow_unbound),
        )
    return Not(random_bool_expr(rng, depth - 1, allow_unbound))


def random_tree(rng: random.Random, depth: int = 4, max_repeat: int = 5, allow_unbound: bool = True) -> BlockNode:
    """A sequence node of bounded depth mixing all ten block kinds."""
    return Sequence(tuple(_random_nodes(rng, depth, max_repeat, allow_unbound)))


def _random_nodes(rng, depth, max_repeat, allow_unbound):
    nodes = []
    for _ in range(rng.randint(0, 4)):
        nodes.append(_random_node(rng, depth - 1, max_repeat, allow_unbound))
    return nodes


def _random_node(rng, depth, max_repeat, allow_unbound):
    choices = ["action", "action", "expr", "set"]
    if depth > 0:
        choices += ["repeat", "repeat", "if", "seq"]
    pick = rng.choice(choices)
    if pick == "action":
        return Action(rng.choice(_ACTIONS))
    if pick == "expr":
        return MakeExpression(rng.choice(EXPRESSIONS))
    if pick == "set":
        return SetVar(rng.choice(_VARS), random_int_expr(rng, 2, allow_unbound))
    if pick == "repeat":
        # Mostly in-bound counts; occasionally negative or expression-valued
        # so the RepeatBound error path is exercised too.
        if rng.random() < 0.8:
            count = Lit(rng.randint(0, max_repeat))
        else:
            count = random_int_expr(rng, 2, allow_unbound)
        return Repeat(count, tuple(_random_nodes(rng, depth, max_repeat, allow_unbound)))
    if pick == "if":
        return If(
            random_bool_expr(rng, 2, allow_unbound),
            tuple(_random_nodes(rng, depth, max_repeat, allow_unbound)),
            tuple(_random_nodes(rng, depth, max_repeat, allow_unbound)),
        )
    return Sequence(tuple(_random_nodes(rng, depth, max_repeat, allow_unbound)))
