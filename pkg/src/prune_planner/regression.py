"""Least-squares fitting of both accuracy-surface representations.

The dense polynomial is a single linear least-squares solve over all
``(degree + 1)**3`` monomial features. The separable surface is fitted by
block alternating least squares: with two of the three per-dimension factor
groups held fixed, the residual is linear in the third, so every sweep solves
three small damped linear systems (one per dimension, covering all rank
components simultaneously) and the training loss never increases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .maps import (
    AccuracyMap,
    FactorTriple,
    FullTensorMap,
    SeparableMap,
    predict_many,
)

DEFAULT_RANK = 1
DEFAULT_DEGREE = 3
DEFAULT_MAX_SWEEPS = 500
DEFAULT_REL_TOL = 1e-10

# Damping floor added to every inner ALS solve; guards collinear design
# matrices produced by axis-aligned sample grids.
_ALS_DAMPING_FLOOR = 1e-10

# Cap on the undamped polish sweeps run after convergence at ridge == 0.
_POLISH_MAX_SWEEPS = 50


@dataclass(frozen=True)
class FitConfig:
    """Hyper-parameters of the separable fit."""

    rank: int = DEFAULT_RANK
    degree: int = DEFAULT_DEGREE
    ridge: float = 0.0
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    rel_tol: float = DEFAULT_REL_TOL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")


@dataclass(frozen=True)
class FitReport:
    """Training diagnostics of a fit.

    ``train_mae`` is in accuracy percentage points; ``final_loss`` is the sum
    of squared residuals on the fractional scale.
    """

    train_mae: float
    sweeps_used: int
    converged: bool
    final_loss: float


def _validate_finite(points: np.ndarray, acc: np.ndarray) -> None:
    if not (np.all(np.isfinite(points)) and np.all(np.isfinite(acc))):
        raise ValueError("dataset contains non-finite values")


def _powers(x: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(x, degree + 1, increasing=True)


def _damped_lstsq(a: np.ndarray, b: np.ndarray, damping: float) -> np.ndarray:
    n = a.shape[1]
    aug = np.vstack([a, np.sqrt(damping) * np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n)])
    x, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    return x


def mae(m: AccuracyMap, data: Dataset) -> float:
    """Mean absolute prediction error in accuracy percentage points."""
    pts = data.points()
    pred = predict_many(m, pts[:, 0], pts[:, 1], pts[:, 2])
    return float(np.mean(np.abs(pred - data.accuracies()))) * 100.0


def fit_full_tensor(
    data: Dataset, degree: int, ridge: float = 0.0
) -> tuple[FullTensorMap, FitReport]:
    """Fit the dense polynomial surface by (ridge-regularized) least squares.

    With ``ridge == 0`` the solve is rank-revealing and returns the
    minimum-norm solution when the system is underdetermined.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    points = data.points()
    acc = data.accuracies()
    _validate_finite(points, acc)
    pd = _powers(points[:, 0], degree)
    pw = _powers(points[:, 1], degree)
    pr = _powers(points[:, 2], degree)
    phi = np.einsum("ni,nj,nk->nijk", pd, pw, pr).reshape(len(acc), -1)
    if ridge > 0:
        theta = _damped_lstsq(phi, acc, ridge)
    else:
        theta, *_ = np.linalg.lstsq(phi, acc, rcond=None)
    m = FullTensorMap(degree, theta.reshape((degree + 1,) * 3))
    residual = phi @ theta - acc
    report = FitReport(
        train_mae=float(np.mean(np.abs(residual))) * 100.0,
        sweeps_used=1,
        converged=True,
        final_loss=float(residual @ residual),
    )
    return m, report


def _als_core(
    points: np.ndarray, acc: np.ndarray, config: FitConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float], bool, int]:
    rank, degree = config.rank, config.degree
    n_coef = degree + 1
    pd = _powers(points[:, 0], degree)
    pw = _powers(points[:, 1], degree)
    pr = _powers(points[:, 2], degree)

    # Depth vectors start from a univariate fit against d alone; width and
    # resolution start as the constant-1 polynomial. Components beyond the
    # first get seeded noise to break the rank symmetry.
    rng = np.random.default_rng(config.seed)
    s0, *_ = np.linalg.lstsq(pd, acc, rcond=None)
    s = np.tile(s0, (rank, 1))
    u = np.zeros((rank, n_coef))
    u[:, 0] = 1.0
    v = np.zeros((rank, n_coef))
    v[:, 0] = 1.0
    if rank > 1:
        s[1:] += rng.normal(scale=1e-2, size=(rank - 1, n_coef))
        u[1:] += rng.normal(scale=1e-2, size=(rank - 1, n_coef))
        v[1:] += rng.normal(scale=1e-2, size=(rank - 1, n_coef))

    damping = max(config.ridge, _ALS_DAMPING_FLOOR)
    n = len(acc)

    def solve_block(fixed1: np.ndarray, fixed2: np.ndarray, basis: np.ndarray) -> np.ndarray:
        design = (fixed1 * fixed2)[:, :, None] * basis[:, None, :]
        x = _damped_lstsq(design.reshape(n, rank * n_coef), acc, damping)
        return x.reshape(rank, n_coef)

    def renorm() -> None:
        for q in range(rank):
            nu = np.linalg.norm(u[q])
            nv = np.linalg.norm(v[q])
            if nu > 0.0:
                u[q] /= nu
                s[q] *= nu
            if nv > 0.0:
                v[q] /= nv
                s[q] *= nv

    def undamped_block(fixed1: np.ndarray, fixed2: np.ndarray, basis: np.ndarray) -> np.ndarray:
        design = (fixed1 * fixed2)[:, :, None] * basis[:, None, :]
        x, *_ = np.linalg.lstsq(design.reshape(n, rank * n_coef), acc, rcond=None)
        return x.reshape(rank, n_coef)

    def current_loss() -> float:
        residual = ((pd @ s.T) * (pw @ u.T) * (pr @ v.T)).sum(axis=1) - acc
        return float(residual @ residual)

    losses: list[float] = []
    prev = np.inf
    converged = False
    sweeps = 0
    for sweep in range(config.max_sweeps):
        sweeps = sweep + 1
        s = solve_block(pw @ u.T, pr @ v.T, pd)
        u = solve_block(pd @ s.T, pr @ v.T, pw)
        v = solve_block(pd @ s.T, pw @ u.T, pr)
        renorm()
        loss = current_loss()
        losses.append(loss)
        if prev < np.inf and (prev == 0.0 or (prev - loss) / prev < config.rel_tol):
            converged = True
            break
        prev = loss
    if config.ridge == 0.0:
        # undamped polish sweeps remove the damping-floor bias so exactly
        # representable data fits to machine precision; each exact block
        # solve can only lower the squared loss (min-norm via the
        # rank-revealing lstsq where the design is deficient)
        prev = losses[-1]
        for _ in range(_POLISH_MAX_SWEEPS):
            s = undamped_block(pw @ u.T, pr @ v.T, pd)
            u = undamped_block(pd @ s.T, pr @ v.T, pw)
            v = undamped_block(pd @ s.T, pw @ u.T, pr)
            renorm()
            loss = current_loss()
            losses.append(loss)
            if prev == 0.0 or (prev - loss) / prev < config.rel_tol:
                break
            prev = loss
    return s, u, v, losses, converged, sweeps


def fit_separable(
    data: Dataset, config: FitConfig | None = None
) -> tuple[SeparableMap, FitReport]:
    """Fit the separable surface by block alternating least squares.

    Deterministic for a fixed ``config.seed``. The report's ``converged``
    flag is False when ``max_sweeps`` ran out before the relative loss
    improvement dropped below ``rel_tol``; ``sweeps_used`` counts damped
    sweeps only (the trailing undamped polish sweeps at ridge 0 show up in
    the loss history but not the counter).
    """
    config = config or FitConfig()
    points = data.points()
    acc = data.accuracies()
    _validate_finite(points, acc)
    s, u, v, losses, converged, sweeps = _als_core(points, acc, config)
    factors = tuple(
        FactorTriple(tuple(s[q]), tuple(u[q]), tuple(v[q])) for q in range(config.rank)
    )
    m = SeparableMap(config.rank, config.degree, factors)
    report = FitReport(
        train_mae=mae(m, data),
        sweeps_used=sweeps,
        converged=converged,
        final_loss=losses[-1],
    )
    return m, report


def fit_separable_with_history(
    data: Dataset, config: FitConfig | None = None
) -> tuple[SeparableMap, FitReport, tuple[float, ...]]:
    """Like :func:`fit_separable`, also returning the per-sweep loss curve."""
    config = config or FitConfig()
    points = data.points()
    acc = data.accuracies()
    _validate_finite(points, acc)
    s, u, v, losses, converged, sweeps = _als_core(points, acc, config)
    factors = tuple(
        FactorTriple(tuple(s[q]), tuple(u[q]), tuple(v[q])) for q in range(config.rank)
    )
    m = SeparableMap(config.rank, config.degree, factors)
    report = FitReport(mae(m, data), sweeps, converged, losses[-1])
    return m, report, tuple(losses)


def split(data: Dataset, n_train: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle-then-prefix split into (train, eval) datasets.

    Samples at the base point ``(1, 1, 1)`` are always routed to the training
    split: the planner is assumed to know the unpruned model's accuracy.
    """
    if not 1 <= n_train < len(data):
        raise ValueError(
            f"n_train must satisfy 1 <= n_train < {len(data)}, got {n_train}"
        )
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(data)))
    is_base = [
        data.samples[i].point.as_tuple() == (1.0, 1.0, 1.0) for i in range(len(data))
    ]
    order = [i for i in order if is_base[i]] + [i for i in order if not is_base[i]]
    train = Dataset(tuple(data.samples[i] for i in order[:n_train]))
    evaluation = Dataset(tuple(data.samples[i] for i in order[n_train:]))
    return train, evaluation
