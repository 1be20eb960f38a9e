"""Discrete-step kinematics for the virtual robot.

Each movement command translates or rotates the pose by a fixed,
configured amount; there is no velocity integration, so instruction
traces are exactly replayable. Heading convention: 0 degrees = +x axis,
counterclockwise positive (documented for the UI canvas).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from ..model import Instruction, Kind, RobotPose, RobotState, normalize_heading


@dataclass(frozen=True)
class KinematicConfig:
    step_distance: float = 0.1  # meters per forward/backward command
    turn_angle: float = 90.0  # degrees per left/right command
    command_duration: float = 1.0  # simulated seconds per command; 0 in tests

    def __post_init__(self) -> None:
        if not self.step_distance > 0:
            raise ValueError("step_distance must be positive")
        if not 0 < self.turn_angle <= 180:
            raise ValueError("turn_angle must be in (0, 180]")
        if self.command_duration < 0:
            raise ValueError("command_duration must be non-negative")


def _translate(pose: RobotPose, distance: float) -> RobotPose:
    rad = math.radians(pose.heading)
    return RobotPose(pose.x + distance * math.cos(rad), pose.y + distance * math.sin(rad), pose.heading)


def _rotate(pose: RobotPose, degrees: float) -> RobotPose:
    return RobotPose(pose.x, pose.y, normalize_heading(pose.heading + degrees))


def apply(state: RobotState, instr: Instruction, cfg: KinematicConfig = KinematicConfig()) -> RobotState:
    """Pure transition function; total over all valid instructions."""
    kind = instr.kind
    if kind is Kind.MOVE_FORWARD:
        return replace(state, pose=_translate(state.pose, cfg.step_distance))
    if kind is Kind.MOVE_BACKWARD:
        return replace(state, pose=_translate(state.pose, -cfg.step_distance))
    if kind is Kind.MOVE_LEFT:
        return replace(state, pose=_rotate(state.pose, cfg.turn_angle))
    if kind is Kind.MOVE_RIGHT:
        return replace(state, pose=_rotate(state.pose, -cfg.turn_angle))
    if kind is Kind.STOP:
        return state.idle()
    return replace(state, expression=instr.expression)


def replay(instructions: Iterable[Instruction], cfg: KinematicConfig = KinematicConfig(),
           start: RobotState = RobotState()) -> RobotState:
    """Fold apply over a trace from a start state (origin by default)."""
    state = start
    for instr in instructions:
        state = apply(state, instr, cfg)
    return state
