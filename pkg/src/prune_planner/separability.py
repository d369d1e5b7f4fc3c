"""Cross-ratio validation of the separability hypothesis.

If accuracy factorizes as a product of per-dimension functions, then within
any axis-aligned slice (one coordinate fixed), the ratio of accuracies at two
values of a second coordinate is independent of the third coordinate. This
module measures how well measured grids honor that: for every slice and every
2x2 sub-rectangle of its grid, it compares the two cross ratios and records
their relative spread. Near-zero spreads certify that a rank-1 surface can
represent the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import median

import numpy as np

from .dataset import Dataset

AXES = ("d", "w", "r")


class InsufficientGridError(ValueError):
    """Raised when the dataset holds no complete 2x2 axis-aligned rectangle."""


@dataclass(frozen=True)
class RatioDeviation:
    """One 2x2 cross-ratio comparison inside a slice.

    ``rows`` are two values of the slice's first free axis, ``cols`` two
    values of the second; ``ratios`` are the accuracy ratios across the rows,
    taken at each column. ``deviation`` is their relative spread
    ``|r1 - r2| / mean(r1, r2)``.
    """

    rows: tuple[float, float]
    cols: tuple[float, float]
    ratios: tuple[float, float]
    deviation: float


@dataclass(frozen=True)
class SliceReport:
    axis: str
    value: float
    row_axis: str
    col_axis: str
    n_cells: int
    deviations: tuple[RatioDeviation, ...]

    @property
    def max_deviation(self) -> float:
        return max(d.deviation for d in self.deviations) if self.deviations else 0.0


@dataclass(frozen=True)
class SeparabilityReport:
    slices: tuple[SliceReport, ...]
    max_rel_dev: float
    median_rel_dev: float
    worst_slice: SliceReport
    worst: RatioDeviation

    def passes(self, median_threshold: float = 0.01, max_threshold: float = 0.03) -> bool:
        return self.median_rel_dev < median_threshold and self.max_rel_dev < max_threshold

    def to_json_dict(self) -> dict:
        return {
            "format": "separability-report/v1",
            "summary": {
                "max_rel_dev": self.max_rel_dev,
                "median_rel_dev": self.median_rel_dev,
                "n_comparisons": sum(len(s.deviations) for s in self.slices),
                "worst": {
                    "axis": self.worst_slice.axis,
                    "value": self.worst_slice.value,
                    "rows": list(self.worst.rows),
                    "cols": list(self.worst.cols),
                    "deviation": self.worst.deviation,
                },
            },
            "slices": [
                {
                    "axis": s.axis,
                    "value": s.value,
                    "row_axis": s.row_axis,
                    "col_axis": s.col_axis,
                    "n_cells": s.n_cells,
                    "deviations": [
                        {
                            "rows": list(d.rows),
                            "cols": list(d.cols),
                            "ratios": list(d.ratios),
                            "deviation": d.deviation,
                        }
                        for d in s.deviations
                    ],
                }
                for s in self.slices
            ],
        }


def _slice_cells(data: Dataset, axis: int, value: float) -> dict[tuple[float, float], float]:
    """Cells of one slice keyed by the two free coordinates.

    Re-measurements of the same point are averaged so that conflicting
    duplicates (common when several published grids are merged) do not break
    the ratio computation.
    """
    cells: dict[tuple[float, float], list[float]] = {}
    for s in data:
        coords = (round(s.point.d, 12), round(s.point.w, 12), round(s.point.r, 12))
        if coords[axis] != value:
            continue
        key = tuple(c for i, c in enumerate(coords) if i != axis)
        cells.setdefault(key, []).append(s.accuracy)
    return {k: float(np.mean(v)) for k, v in cells.items()}


def analyze_separability(data: Dataset) -> SeparabilityReport:
    """Measure cross-ratio spreads over every axis-aligned slice of the data.

    Raises :class:`InsufficientGridError` when no slice holds a complete
    2x2 rectangle of measured cells.
    """
    slices: list[SliceReport] = []
    for axis in range(3):
        values = sorted(
            {round((s.point.d, s.point.w, s.point.r)[axis], 12) for s in data}
        )
        free = [a for i, a in enumerate(AXES) if i != axis]
        for value in values:
            cells = _slice_cells(data, axis, value)
            rows = sorted({k[0] for k in cells})
            cols = sorted({k[1] for k in cells})
            devs: list[RatioDeviation] = []
            for i1 in range(len(rows)):
                for i2 in range(i1 + 1, len(rows)):
                    for j1 in range(len(cols)):
                        for j2 in range(j1 + 1, len(cols)):
                            quad = [
                                (rows[i1], cols[j1]),
                                (rows[i2], cols[j1]),
                                (rows[i1], cols[j2]),
                                (rows[i2], cols[j2]),
                            ]
                            if not all(k in cells for k in quad):
                                continue
                            r1 = cells[quad[0]] / cells[quad[1]]
                            r2 = cells[quad[2]] / cells[quad[3]]
                            devs.append(
                                RatioDeviation(
                                    rows=(rows[i1], rows[i2]),
                                    cols=(cols[j1], cols[j2]),
                                    ratios=(r1, r2),
                                    deviation=2.0 * abs(r1 - r2) / (r1 + r2),
                                )
                            )
            if devs:
                slices.append(
                    SliceReport(
                        axis=AXES[axis],
                        value=value,
                        row_axis=free[0],
                        col_axis=free[1],
                        n_cells=len(cells),
                        deviations=tuple(devs),
                    )
                )
    all_devs = [d for s in slices for d in s.deviations]
    if not all_devs:
        raise InsufficientGridError(
            "insufficient grid structure: no axis-aligned 2x2 rectangle of samples"
        )
    worst = max(all_devs, key=lambda d: d.deviation)
    worst_slice = max(slices, key=lambda s: s.max_deviation)
    return SeparabilityReport(
        slices=tuple(slices),
        max_rel_dev=worst.deviation,
        median_rel_dev=float(median(d.deviation for d in all_devs)),
        worst_slice=worst_slice,
        worst=worst,
    )
