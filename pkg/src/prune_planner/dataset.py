"""Sample datasets and their CSV representation.

The on-disk format is a header-first CSV with columns ``d,w,r,accuracy``, one
sample per row. Accuracy columns may be percent-valued (as published tables
usually are) or fractional; see :func:`load_samples` for the detection rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .maps import AccuracySample, DimTriple

CSV_HEADER = ["d", "w", "r", "accuracy"]


class DatasetFormatError(ValueError):
    """Raised when a samples file cannot be parsed or mixes accuracy scales."""


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of accuracy samples.

    Duplicate points are allowed; they represent noisy re-measurements and
    are deliberately kept distinct.
    """

    samples: tuple[AccuracySample, ...]

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("a dataset needs at least one sample")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[AccuracySample]:
        return iter(self.samples)

    def points(self) -> np.ndarray:
        """Sample coordinates as an ``(n, 3)`` array of ``(d, w, r)`` rows."""
        return np.array([[s.point.d, s.point.w, s.point.r] for s in self.samples])

    def accuracies(self) -> np.ndarray:
        return np.array([s.accuracy for s in self.samples])

    @staticmethod
    def from_arrays(points, accuracies) -> "Dataset":
        points = np.asarray(points, dtype=float)
        accuracies = np.asarray(accuracies, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3 or len(points) != len(accuracies):
            raise ValueError("expected (n, 3) points and n accuracies")
        return Dataset(
            tuple(
                AccuracySample(DimTriple(*map(float, p)), float(a))
                for p, a in zip(points, accuracies)
            )
        )


def _normalize_accuracies(values: list[float], unit: str, where: str) -> list[float]:
    if unit == "fraction":
        return values
    if unit == "percent":
        return [v / 100.0 for v in values]
    if unit != "auto":
        raise ValueError(f"unit must be 'auto', 'percent', or 'fraction', got {unit!r}")
    if all(v <= 1.0 for v in values):
        return values
    # Any value above 1 switches the whole file to percent; a file that also
    # carries sub-1 values is mixing scales, which is unrecoverable.
    if any(v < 1.0 for v in values):
        raise DatasetFormatError(
            f"{where}: accuracies mix percent-scale (>1) and fraction-scale (<1) "
            "values; pass an explicit unit"
        )
    return [v / 100.0 for v in values]


def load_samples(path, unit: str = "auto") -> Dataset:
    """Read a ``d,w,r,accuracy`` CSV file into a :class:`Dataset`.

    With ``unit='auto'`` (default), any accuracy above 1 switches the whole
    file to percent interpretation (divide by 100); a file mixing both scales
    raises :class:`DatasetFormatError`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read samples file {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    rows = [row for row in reader if row]
    if not rows:
        raise DatasetFormatError(f"{path}: empty samples file")
    header = [c.strip() for c in rows[0]]
    if header != CSV_HEADER:
        raise DatasetFormatError(
            f"{path}: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
        )
    triples: list[tuple[float, float, float]] = []
    raw_acc: list[float] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise DatasetFormatError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        try:
            d, w, r, a = (float(c) for c in row)
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
        if not all(math.isfinite(v) for v in (d, w, r, a)):
            raise DatasetFormatError(f"{path}:{lineno}: non-finite value")
        triples.append((d, w, r))
        raw_acc.append(a)
    if not triples:
        raise DatasetFormatError(f"{path}: no sample rows")
    accs = _normalize_accuracies(raw_acc, unit, str(path))
    try:
        samples = tuple(
            AccuracySample(DimTriple(*t), a) for t, a in zip(triples, accs)
        )
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from exc
    return Dataset(samples)


def save_samples(data: Dataset | Iterable[AccuracySample], path) -> None:
    """Write samples as a fractional-accuracy ``d,w,r,accuracy`` CSV."""
    samples = data.samples if isinstance(data, Dataset) else tuple(data)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow([repr(s.point.d), repr(s.point.w), repr(s.point.r), repr(s.accuracy)])
