"""Reference trainer adapter for the prune-planner line protocol."""

from .hooks import HookSet, demo_hooks
from .server import PROTOCOL_VERSION, Adapter, serve
from .surface import synthetic_accuracy

__version__ = "0.1.0"

__all__ = [
    "Adapter",
    "HookSet",
    "PROTOCOL_VERSION",
    "demo_hooks",
    "serve",
    "synthetic_accuracy",
]
