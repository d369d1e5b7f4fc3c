"""Constrained maximization of an accuracy surface on the cost-budget shell.

The problem is ``maximize F(d, w, r)`` subject to ``d * w**2 * r**2 = T`` and
``d, w, r in (0, 1]``. The equality constraint is eliminated through
``d = T / (w**2 * r**2)``, leaving a 2-D maximization of the reduced
objective over the feasible region ``{(w, r) in (0, 1]^2 : w**2 r**2 >= T}``.
The solver scans a log-uniform grid, polishes the best cell with a
derivative-free simplex restricted to the feasible set, checks the three
single-dimension corner candidates, and reports multiplier-based stationarity
residuals so callers can verify first-order optimality at interior optima.

A pure multiplier solve would be incomplete here: optima routinely sit on the
``= 1`` box boundary, where the stationarity rows legitimately stay nonzero.
Those coordinates are flagged via ``active_bounds``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maps import (
    AccuracyMap,
    DimTriple,
    cost,
    frr,
    gradient,
    predict,
    predict_many,
    prr_estimate,
)

DEFAULT_GRID_RESOLUTION = 512
MIN_GRID_RESOLUTION = 16
MIN_BRUTE_RESOLUTION = 64

# A coordinate this close to 1 is treated as pinned at the box boundary.
_ACTIVE_TOL = 1e-6
_REFINE_STEP_TOL = 1e-9
_REFINE_MAX_ITER = 600


@dataclass(frozen=True)
class Budget:
    """Target fraction of the base model's compute cost, in ``(0, 1)``."""

    t: float

    def __post_init__(self) -> None:
        if not (isinstance(self.t, (int, float)) and 0.0 < self.t < 1.0):
            raise ValueError(f"budget must lie strictly in (0, 1), got {self.t!r}")


@dataclass(frozen=True)
class PlanResult:
    """Solver output: the chosen point plus first-order optimality evidence.

    ``kkt_residuals`` holds the constraint row ``cost(point) - T`` followed by
    the three stationarity rows evaluated with ``lagrange_multiplier``.
    ``active_bounds`` flags coordinates pinned at the upper box bound, where
    nonzero stationarity residuals are expected.
    """

    point: DimTriple
    predicted_accuracy: float
    lagrange_multiplier: float
    kkt_residuals: tuple[float, float, float, float]
    active_bounds: tuple[bool, bool, bool]
    objective_gap_vs_grid: float
    budget: float

    def __post_init__(self) -> None:
        if abs(cost(self.point) - self.budget) > 1e-6:
            raise ValueError(
                f"plan point violates the budget: cost {cost(self.point)} vs {self.budget}"
            )

    def to_json_dict(self) -> dict:
        return {
            "point": {"d": self.point.d, "w": self.point.w, "r": self.point.r},
            "predicted_accuracy": self.predicted_accuracy,
            "lagrange_multiplier": self.lagrange_multiplier,
            "kkt_residuals": list(self.kkt_residuals),
            "active_bounds": list(self.active_bounds),
            "objective_gap_vs_grid": self.objective_gap_vs_grid,
            "budget": self.budget,
            "cost": cost(self.point),
            "frr": frr(self.point),
            "prr_estimate": prr_estimate(self.point),
        }


def _as_budget(budget: Budget | float) -> Budget:
    return budget if isinstance(budget, Budget) else Budget(float(budget))


def kkt_residual(
    m: AccuracyMap, p: DimTriple, multiplier: float, budget: Budget | float
) -> tuple[float, float, float, float]:
    """Left-hand sides of the stationarity system at ``p`` with multiplier.

    Rows: ``cost(p) - T``; then one row per dimension pairing the analytic
    surface partial with the matching cost partial, each of the form
    ``dF/dx + multiplier * dC/dx``.
    """
    t = _as_budget(budget).t
    gd, gw, gr = gradient(m, p)
    d, w, r = p.d, p.w, p.r
    return (
        cost(p) - t,
        gd + multiplier * w * w * r * r,
        gw + multiplier * 2.0 * d * w * r * r,
        gr + multiplier * 2.0 * d * w * w * r,
    )


def _estimate_multiplier(
    m: AccuracyMap, p: DimTriple, active: tuple[bool, bool, bool]
) -> float:
    """Least-squares multiplier over the stationarity rows of free coordinates."""
    gd, gw, gr = gradient(m, p)
    d, w, r = p.d, p.w, p.r
    grads = np.array([gd, gw, gr])
    cost_grads = np.array([w * w * r * r, 2.0 * d * w * r * r, 2.0 * d * w * w * r])
    keep = ~np.array(active)
    if not keep.any():
        keep = np.ones(3, dtype=bool)
    g, c = grads[keep], cost_grads[keep]
    denom = float(c @ c)
    if denom == 0.0:
        return 0.0
    return float(-(g @ c) / denom)


def _grid_axes(t: float, resolution: int) -> np.ndarray:
    return np.geomspace(math.sqrt(t), 1.0, resolution)


def _grid_candidates(
    m: AccuracyMap, t: float, resolution: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    axis = _grid_axes(t, resolution)
    w = np.repeat(axis, resolution)
    r = np.tile(axis, resolution)
    feasible = w * w * r * r >= t
    w, r = w[feasible], r[feasible]
    d = np.minimum(t / (w * w * r * r), 1.0)
    return d, w, r, predict_many(m, d, w, r)


def _lex_argmax(
    d: np.ndarray, w: np.ndarray, r: np.ndarray, f: np.ndarray
) -> tuple[float, float, float, float]:
    """Argmax of ``f`` with exact ties broken by greatest ``(d, w, r)``."""
    best = f.max()
    tie = np.flatnonzero(f == best)
    if len(tie) > 1:
        tie = tie[d[tie] == d[tie].max()]
        tie = tie[w[tie] == w[tie].max()]
        tie = tie[r[tie] == r[tie].max()]
    i = int(tie[0])
    return float(d[i]), float(w[i]), float(r[i]), float(f[i])


def _reduced_objective(m: AccuracyMap, t: float):
    def g(x: np.ndarray) -> float:
        w, r = float(x[0]), float(x[1])
        if not (0.0 < w <= 1.0 and 0.0 < r <= 1.0):
            return -math.inf
        if w * w * r * r < t:
            return -math.inf
        d = min(t / (w * w * r * r), 1.0)
        return float(predict_many(m, np.array([d]), np.array([w]), np.array([r]))[0])

    return g


def _simplex_refine(
    m: AccuracyMap, t: float, start: tuple[float, float], step: float
) -> tuple[float, float, float, float]:
    """Reflection/contraction simplex on (w, r), clipped to the feasible box."""
    g = _reduced_objective(m, t)
    lo = math.sqrt(t)

    def clip(x: np.ndarray) -> np.ndarray:
        return np.clip(x, lo * 0.5, 1.0)

    verts = [np.array(start, dtype=float)]
    for k in range(2):
        offset = np.zeros(2)
        offset[k] = -step if start[k] + step > 1.0 else step
        verts.append(clip(verts[0] + offset))
    vals = [g(v) for v in verts]

    for _ in range(_REFINE_MAX_ITER):
        order = sorted(range(3), key=lambda i: vals[i], reverse=True)
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]
        if max(np.linalg.norm(verts[0] - verts[k]) for k in (1, 2)) < _REFINE_STEP_TOL:
            break
        centroid = (verts[0] + verts[1]) / 2.0
        reflected = clip(centroid + (centroid - verts[2]))
        f_reflected = g(reflected)
        if f_reflected > vals[0]:
            expanded = clip(centroid + 2.0 * (centroid - verts[2]))
            f_expanded = g(expanded)
            if f_expanded > f_reflected:
                verts[2], vals[2] = expanded, f_expanded
            else:
                verts[2], vals[2] = reflected, f_reflected
        elif f_reflected > vals[1]:
            verts[2], vals[2] = reflected, f_reflected
        else:
            contracted = clip(centroid + 0.5 * (verts[2] - centroid))
            f_contracted = g(contracted)
            if f_contracted > vals[2]:
                verts[2], vals[2] = contracted, f_contracted
            else:
                for k in (1, 2):
                    verts[k] = verts[0] + 0.5 * (verts[k] - verts[0])
                    vals[k] = g(verts[k])

    i = max(range(3), key=lambda k: vals[k])
    w, r = float(verts[i][0]), float(verts[i][1])
    if vals[i] == -math.inf:
        return start[0], start[1], -math.inf, -math.inf
    d = min(t / (w * w * r * r), 1.0)
    return d, w, r, float(vals[i])


def _corner_candidates(m: AccuracyMap, t: float) -> list[tuple[float, float, float, float]]:
    root = math.sqrt(t)
    corners = [(t, 1.0, 1.0), (1.0, root, 1.0), (1.0, 1.0, root)]
    return [(d, w, r, predict(m, DimTriple(d, w, r))) for d, w, r in corners]


def _assemble(
    m: AccuracyMap, t: float, d: float, w: float, r: float, f: float, grid_best: float
) -> PlanResult:
    point = DimTriple(min(d, 1.0), min(w, 1.0), min(r, 1.0))
    active = (
        abs(point.d - 1.0) <= _ACTIVE_TOL,
        abs(point.w - 1.0) <= _ACTIVE_TOL,
        abs(point.r - 1.0) <= _ACTIVE_TOL,
    )
    multiplier = _estimate_multiplier(m, point, active)
    residuals = kkt_residual(m, point, multiplier, t)
    return PlanResult(
        point=point,
        predicted_accuracy=f,
        lagrange_multiplier=multiplier,
        kkt_residuals=residuals,
        active_bounds=active,
        objective_gap_vs_grid=f - grid_best,
        budget=t,
    )


def brute_force(m: AccuracyMap, budget: Budget | float, resolution: int) -> PlanResult:
    """Exhaustive scan of the reduced (w, r) grid; the testing oracle for solve."""
    t = _as_budget(budget).t
    if resolution < MIN_BRUTE_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_BRUTE_RESOLUTION}, got {resolution}")
    d, w, r, f = _grid_candidates(m, t, resolution)
    bd, bw, br, bf = _lex_argmax(d, w, r, f)
    return _assemble(m, t, bd, bw, br, bf, grid_best=bf)


def solve(
    m: AccuracyMap,
    budget: Budget | float,
    grid_resolution: int = DEFAULT_GRID_RESOLUTION,
    refine: bool = True,
) -> PlanResult:
    """Maximize the surface on the budget shell.

    Scans a log-uniform ``grid_resolution**2`` grid of the reduced problem,
    evaluates the three single-dimension corner candidates, then locally
    refines the best grid cell with a projected simplex until its step size
    falls below 1e-9. Exact objective ties are broken toward the
    lexicographically greatest ``(d, w, r)``, which also resolves degenerate
    (constant) surfaces deterministically.
    """
    t = _as_budget(budget).t
    if grid_resolution < MIN_GRID_RESOLUTION:
        raise ValueError(
            f"grid_resolution must be >= {MIN_GRID_RESOLUTION}, got {grid_resolution}"
        )
    d, w, r, f = _grid_candidates(m, t, grid_resolution)
    gd, gw, gr, gf = _lex_argmax(d, w, r, f)
    candidates = [(gd, gw, gr, gf)]
    candidates.extend(_corner_candidates(m, t))
    if refine:
        cell = (1.0 - math.sqrt(t)) / max(grid_resolution - 1, 1)
        rd, rw, rr, rf = _simplex_refine(m, t, (gw, gr), step=max(cell, 1e-6))
        if math.isfinite(rf):
            candidates.append((rd, rw, rr, rf))
    bd, bw, br, bf = max(candidates, key=lambda c: (c[3], c[0], c[1], c[2]))
    return _assemble(m, t, bd, bw, br, bf, grid_best=gf)
