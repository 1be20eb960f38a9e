from .client import Credentials, RobotRuntime, StaticFrameSource, login_or_create, run_client
from .kinematics import KinematicConfig, apply, replay

__all__ = [
    "Credentials",
    "KinematicConfig",
    "RobotRuntime",
    "StaticFrameSource",
    "apply",
    "login_or_create",
    "replay",
    "run_client",
]
