"""Hook points for plugging a real prune/fine-tune stack into the adapter.

A hook receives ``(dimension, target, round_no, last_point)`` and returns
``((d, w, r), accuracy)``: the ratios the stack actually achieved (real
pruning snaps to integer layer/filter counts and image sizes, so the changed
coordinate may land near, not on, the target) and the fine-tuned accuracy as
a fraction. ``last_point`` is the previous achieved point of the same
dimension's chain; round 1 always starts from the base model.

The planner side tolerates an echo within 0.02 of the target on the changed
coordinate. How long to fine-tune per round is the stack's own policy; a few
tens of epochs per round is the usual ballpark for CIFAR-scale models, with a
longer final fine-tune after the comprehensive prune.

The implementations below are illustrative stand-ins that snap targets to a
coarse hardware-ish grid and read the synthetic surface; replace them with
calls into your training code.

Typical wiring::

    from prune_planner_adapter.hooks import HookSet
    from prune_planner_adapter.server import Adapter, serve

    def prune_depth(dimension, target, round_no, last_point):
        model = restore_checkpoint(last_point)
        achieved = my_layer_pruner(model, target)      # e.g. DBP-style scoring
        accuracy = finetune_and_eval(model)
        return achieved, accuracy

    serve(Adapter(hooks=HookSet(depth=prune_depth, ...)))
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .surface import synthetic_accuracy

Point = tuple[float, float, float]
Hook = Callable[[str, float, int, Point], tuple[Point, float]]

_AXIS_INDEX = {"depth": 0, "width": 1, "resolution": 2}


@dataclass(frozen=True)
class HookSet:
    """One callable per prunable dimension."""

    depth: Hook
    width: Hook
    resolution: Hook

    def get(self, dimension: str) -> Optional[Hook]:
        return getattr(self, dimension, None)


def _snapping_stub(grid: int = 40) -> Hook:
    """Illustrative hook: snap the target to an n-step grid, read the surface.

    The default grid keeps the worst-case snap distance (half a step) inside
    the 0.02 echo tolerance the planner side enforces.
    """

    def hook(dimension: str, target: float, round_no: int, last_point: Point):
        snapped = max(round(target * grid) / grid, 1.0 / grid)
        point = list(last_point)
        point[_AXIS_INDEX[dimension]] = snapped
        d, w, r = point
        return (d, w, r), synthetic_accuracy(d, w, r)

    return hook


def demo_hooks() -> HookSet:
    """A complete, runnable hook set built from the snapping stubs."""
    return HookSet(
        depth=_snapping_stub(),
        width=_snapping_stub(),
        resolution=_snapping_stub(),
    )
