from .core import (
    Busy,
    BusError,
    CommandBus,
    Conflict,
    DeliveryEvent,
    Invalid,
    StaleProgram,
    Subscription,
    SubscriptionClosed,
    Unauthorized,
    UnknownSeq,
    UsernameTaken,
)

__all__ = [
    "Busy",
    "BusError",
    "CommandBus",
    "Conflict",
    "DeliveryEvent",
    "Invalid",
    "StaleProgram",
    "Subscription",
    "SubscriptionClosed",
    "Unauthorized",
    "UnknownSeq",
    "UsernameTaken",
]
