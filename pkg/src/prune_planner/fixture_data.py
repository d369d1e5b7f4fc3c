"""Access to the bundled measurement grids and the simulation truth surface.

Two published accuracy grids ship with the package, one per base
architecture family, each as three axis-aligned slice files (the suffix
names the pinned coordinate: ``_d1`` holds the depth=1.0 slice, and so on)
plus a merged, deduplicated file. Exact duplicate rows (same point, same
value) are removed from the merge; re-measurements of the same point with
different values are kept as separate rows on purpose, including the
conflicting base-point pair.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURE_NAMES = (
    "resnet_grid",
    "resnet_grid_d1",
    "resnet_grid_w1",
    "resnet_grid_r1",
    "densenet_grid",
    "densenet_grid_d1",
    "densenet_grid_w1",
    "densenet_grid_r1",
    "truth_map",
)


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture; ``name`` may omit the extension."""
    stem = name.removesuffix(".csv").removesuffix(".json")
    if stem not in FIXTURE_NAMES:
        raise KeyError(
            f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}"
        )
    filename = f"{stem}.json" if stem == "truth_map" else f"{stem}.csv"
    path = resources.files("prune_planner").joinpath("fixtures", filename)
    return Path(str(path))
