"""scikit-learn estimator wrappers around the fitting and planning cores.

``X`` is always an ``(n_samples, 3)`` array of ``(d, w, r)`` ratio columns
and ``y`` the measured accuracies (fractions in ``[0, 1]``). The wrappers
compose with the usual ecosystem machinery: ``get_params``/``set_params``,
``clone``, pipelines, and cross-validation splitters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import Dataset
from .maps import predict_many
from .planner import DEFAULT_GRID_RESOLUTION, PlanResult, solve
from .regression import (
    FitConfig,
    fit_full_tensor,
    fit_separable_with_history,
)


def _check_ratio_matrix(X) -> np.ndarray:
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 3:
        raise ValueError(f"X must have exactly 3 columns (d, w, r), got {X.shape[1]}")
    return X


def _to_dataset(X: np.ndarray, y) -> Dataset:
    y = check_array(y, dtype=float, ensure_2d=False)
    if y.ndim != 1 or len(y) != len(X):
        raise ValueError("y must be a 1-D array aligned with X")
    return Dataset.from_arrays(X, y)


class SeparableMapRegressor(RegressorMixin, BaseEstimator):
    """Low-rank separable accuracy surface fitted by alternating least squares.

    Parameters
    ----------
    rank : int
        Number of separable terms. Rank 1 is usually enough and is the most
        robust choice for small sample sets.
    degree : int
        Shared degree of the per-dimension polynomials.
    ridge : float
        L2 penalty on each inner solve; 0 keeps only a tiny numerical damping.
    max_sweeps, rel_tol : int, float
        Sweep budget and relative-improvement stopping rule.
    seed : int
        Seeds the rank-symmetry-breaking initialization noise.

    Attributes
    ----------
    map_ : SeparableMap
        The fitted surface.
    report_ : FitReport
        Training MAE (percentage points), sweeps used, convergence flag, loss.
    loss_curve_ : tuple of float
        Per-sweep sum of squared residuals (non-increasing).
    """

    def __init__(
        self,
        rank: int = 1,
        degree: int = 3,
        ridge: float = 0.0,
        max_sweeps: int = 500,
        rel_tol: float = 1e-10,
        seed: int = 0,
    ) -> None:
        self.rank = rank
        self.degree = degree
        self.ridge = ridge
        self.max_sweeps = max_sweeps
        self.rel_tol = rel_tol
        self.seed = seed

    def fit(self, X, y) -> "SeparableMapRegressor":
        X = _check_ratio_matrix(X)
        data = _to_dataset(X, y)
        config = FitConfig(
            rank=self.rank,
            degree=self.degree,
            ridge=self.ridge,
            max_sweeps=self.max_sweeps,
            rel_tol=self.rel_tol,
            seed=self.seed,
        )
        self.map_, self.report_, self.loss_curve_ = fit_separable_with_history(
            data, config
        )
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "map_")
        X = _check_ratio_matrix(X)
        return predict_many(self.map_, X[:, 0], X[:, 1], X[:, 2])


class FullPolynomialRegressor(RegressorMixin, BaseEstimator):
    """Dense trivariate polynomial baseline fitted by one least-squares solve."""

    def __init__(self, degree: int = 3, ridge: float = 0.0) -> None:
        self.degree = degree
        self.ridge = ridge

    def fit(self, X, y) -> "FullPolynomialRegressor":
        X = _check_ratio_matrix(X)
        data = _to_dataset(X, y)
        self.map_, self.report_ = fit_full_tensor(data, self.degree, self.ridge)
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "map_")
        X = _check_ratio_matrix(X)
        return predict_many(self.map_, X[:, 0], X[:, 1], X[:, 2])


class PruningPlanner(SeparableMapRegressor):
    """Fit an accuracy surface, then pick the best plan for a compute budget.

    A thin facade: ``fit(X, y)`` behaves exactly like
    :class:`SeparableMapRegressor`; :meth:`plan` maximizes the fitted surface
    on the budget shell and returns the full :class:`PlanResult`.
    """

    def plan(
        self,
        budget: float,
        grid_resolution: int = DEFAULT_GRID_RESOLUTION,
        refine: bool = True,
    ) -> PlanResult:
        check_is_fitted(self, "map_")
        return solve(self.map_, budget, grid_resolution=grid_resolution, refine=refine)
