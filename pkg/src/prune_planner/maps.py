"""Domain types, accuracy-surface evaluation, and the proportional cost model.

A pruned model is described by the ratio triple ``(d, w, r)`` of its depth,
width, and input resolution relative to the unpruned base model, each in
``(0, 1]``. Its compute cost relative to the base model is ``d * w**2 * r**2``.

Two interchangeable accuracy-surface representations are provided:

``SeparableMap``
    A sum of ``rank`` products of univariate polynomials, one per dimension.
    This is the low-capacity surface the regression module fits by default.

``FullTensorMap``
    A dense trivariate polynomial with one coefficient per monomial
    ``d**i * w**j * r**k``, kept as the high-capacity baseline.

All types are immutable after construction and all functions here are pure,
so they are safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

MAP_FORMAT = "map/v1"


@dataclass(frozen=True)
class DimTriple:
    """Depth, width, and resolution ratios of a model, each in ``(0, 1]``.

    The base (unpruned) model is exactly ``(1.0, 1.0, 1.0)``.
    """

    d: float
    w: float
    r: float

    def __post_init__(self) -> None:
        for name, value in (("d", self.d), ("w", self.w), ("r", self.r)):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.d, self.w, self.r)

    @staticmethod
    def base() -> "DimTriple":
        return DimTriple(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class AccuracySample:
    """One regression datum: a dimension triple and its measured accuracy.

    Accuracy is stored as a fraction in ``[0, 1]``; percent-valued inputs are
    normalized at ingestion (see :mod:`prune_planner.dataset`).
    """

    point: DimTriple
    accuracy: float

    def __post_init__(self) -> None:
        if not (isinstance(self.accuracy, (int, float)) and math.isfinite(self.accuracy)):
            raise ValueError(f"accuracy must be finite, got {self.accuracy!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(
                f"accuracy must lie in [0, 1] after normalization, got {self.accuracy}"
            )


class FactorTriple(NamedTuple):
    """Per-dimension polynomial coefficients of one rank component.

    Each vector has length ``degree + 1``; index ``i`` holds the coefficient
    of ``x**i``.
    """

    d: tuple[float, ...]
    w: tuple[float, ...]
    r: tuple[float, ...]


def _as_coeff_tuple(coeffs) -> tuple[float, ...]:
    out = tuple(float(c) for c in coeffs)
    if not out:
        raise ValueError("coefficient vector must be nonempty")
    if not all(math.isfinite(c) for c in out):
        raise ValueError("coefficient vector contains non-finite values")
    return out


@dataclass(frozen=True)
class SeparableMap:
    """Rank-constrained accuracy surface: a sum of separable polynomial terms.

    ``predict(d, w, r) = sum_q P_dq(d) * P_wq(w) * P_rq(r)`` where each
    ``P_*q`` is a univariate polynomial of degree ``degree``. Fitted maps are
    canonically scaled (width and resolution vectors have unit 2-norm, with
    the overall magnitude absorbed into the depth vector); hand-built maps
    need not be.
    """

    rank: int
    degree: int
    factors: tuple[FactorTriple, ...]

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if len(self.factors) != self.rank:
            raise ValueError(
                f"expected {self.rank} factor triples, got {len(self.factors)}"
            )
        clean = []
        for triple in self.factors:
            triple = FactorTriple(*(map(_as_coeff_tuple, triple)))
            for vec in triple:
                if len(vec) != self.degree + 1:
                    raise ValueError(
                        f"factor vectors must have length degree+1={self.degree + 1}, "
                        f"got {len(vec)}"
                    )
            clean.append(triple)
        object.__setattr__(self, "factors", tuple(clean))


@dataclass(frozen=True, eq=False)
class FullTensorMap:
    """Dense trivariate polynomial surface with ``(degree + 1)**3`` coefficients.

    ``coefficients[i, j, k]`` multiplies ``d**i * w**j * r**k``.
    """

    degree: int
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        coeffs = np.asarray(self.coefficients, dtype=float)
        expected = (self.degree + 1,) * 3
        if coeffs.shape != expected:
            raise ValueError(f"coefficients must have shape {expected}, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients contain non-finite values")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)


AccuracyMap = Union[SeparableMap, FullTensorMap]


# ---------------------------------------------------------------------------
# polynomial evaluation
# ---------------------------------------------------------------------------

def eval_poly(coeffs, x: float) -> float:
    """Evaluate ``sum_i coeffs[i] * x**i`` by Horner's scheme."""
    if len(coeffs) == 0:
        raise ValueError("coefficient vector must be nonempty")
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return float(acc)


def poly_derivative(coeffs) -> tuple[float, ...]:
    """Coefficients of the analytic derivative; a constant maps to ``(0.0,)``."""
    if len(coeffs) == 0:
        raise ValueError("coefficient vector must be nonempty")
    if len(coeffs) == 1:
        return (0.0,)
    return tuple(float(i * c) for i, c in enumerate(coeffs) if i > 0)


def _poly_many(coeffs, x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def eval_separable(m: SeparableMap, p: DimTriple) -> float:
    """Predicted accuracy at ``p``; may overshoot ``[0, 1]`` (never clamped)."""
    return float(
        sum(
            eval_poly(f.d, p.d) * eval_poly(f.w, p.w) * eval_poly(f.r, p.r)
            for f in m.factors
        )
    )


def eval_full(m: FullTensorMap, p: DimTriple) -> float:
    """Predicted accuracy of the dense polynomial at ``p``."""
    n = m.degree + 1
    pd = p.d ** np.arange(n)
    pw = p.w ** np.arange(n)
    pr = p.r ** np.arange(n)
    return float(np.einsum("ijk,i,j,k->", m.coefficients, pd, pw, pr))


def predict_many(m: AccuracyMap, d: np.ndarray, w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Vectorized surface evaluation over parallel coordinate arrays."""
    d = np.asarray(d, dtype=float)
    w = np.asarray(w, dtype=float)
    r = np.asarray(r, dtype=float)
    if isinstance(m, SeparableMap):
        out = np.zeros(np.broadcast(d, w, r).shape, dtype=float)
        for f in m.factors:
            out += _poly_many(f.d, d) * _poly_many(f.w, w) * _poly_many(f.r, r)
        return out
    n = m.degree + 1
    pd = d[..., None] ** np.arange(n)
    pw = w[..., None] ** np.arange(n)
    pr = r[..., None] ** np.arange(n)
    return np.einsum("ijk,...i,...j,...k->...", m.coefficients, pd, pw, pr)


def predict(m: AccuracyMap, p: DimTriple) -> float:
    """Evaluate either surface kind at a single point."""
    if isinstance(m, SeparableMap):
        return eval_separable(m, p)
    return eval_full(m, p)


def gradient(m: AccuracyMap, p: DimTriple) -> tuple[float, float, float]:
    """Analytic partial derivatives of the surface at ``p``."""
    if isinstance(m, SeparableMap):
        gd = gw = gr = 0.0
        for f in m.factors:
            hd, hw, hr = eval_poly(f.d, p.d), eval_poly(f.w, p.w), eval_poly(f.r, p.r)
            gd += eval_poly(poly_derivative(f.d), p.d) * hw * hr
            gw += hd * eval_poly(poly_derivative(f.w), p.w) * hr
            gr += hd * hw * eval_poly(poly_derivative(f.r), p.r)
        return (gd, gw, gr)
    n = m.degree + 1
    idx = np.arange(n)
    pd = p.d ** idx
    pw = p.w ** idx
    pr = p.r ** idx
    dpd = np.concatenate([[0.0], idx[1:] * p.d ** (idx[1:] - 1)])
    dpw = np.concatenate([[0.0], idx[1:] * p.w ** (idx[1:] - 1)])
    dpr = np.concatenate([[0.0], idx[1:] * p.r ** (idx[1:] - 1)])
    c = m.coefficients
    return (
        float(np.einsum("ijk,i,j,k->", c, dpd, pw, pr)),
        float(np.einsum("ijk,i,j,k->", c, pd, dpw, pr)),
        float(np.einsum("ijk,i,j,k->", c, pd, pw, dpr)),
    )


def separable_to_full(m: SeparableMap) -> FullTensorMap:
    """Assemble the dense coefficient tensor equivalent to a separable map."""
    s = np.array([f.d for f in m.factors])
    u = np.array([f.w for f in m.factors])
    v = np.array([f.r for f in m.factors])
    return FullTensorMap(m.degree, np.einsum("qi,qj,qk->ijk", s, u, v))


def canonicalize(m: SeparableMap) -> SeparableMap:
    """Rescale factors so width/resolution vectors have unit 2-norm.

    The overall magnitude moves into the depth vector, leaving every
    prediction unchanged. Rank components with a zero width or resolution
    vector are left as-is (their contribution is identically zero).
    """
    out = []
    for f in m.factors:
        s = np.array(f.d)
        u = np.array(f.w)
        v = np.array(f.r)
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu > 0.0:
            u = u / nu
            s = s * nu
        if nv > 0.0:
            v = v / nv
            s = s * nv
        out.append(FactorTriple(tuple(s), tuple(u), tuple(v)))
    return SeparableMap(m.rank, m.degree, tuple(out))


# ---------------------------------------------------------------------------
# cost model and reduction ratios
# ---------------------------------------------------------------------------

def cost(p: DimTriple) -> float:
    """Relative compute cost ``d * w**2 * r**2``, in ``(0, 1]``."""
    return p.d * p.w * p.w * p.r * p.r


def frr(p: DimTriple) -> float:
    """Model-estimated FLOPs-reduction ratio, ``1 - cost(p)``."""
    return 1.0 - cost(p)


def prr_estimate(p: DimTriple) -> float:
    """Approximate parameters-reduction ratio, ``1 - d * w**2``.

    Parameter count is modeled as proportional to depth and the square of
    width and independent of input resolution; this is an estimate, not an
    architecture-exact count.
    """
    return 1.0 - p.d * p.w * p.w


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def map_to_json_dict(m: AccuracyMap) -> dict:
    """Versioned JSON document for either surface kind (value-exact floats)."""
    if isinstance(m, SeparableMap):
        return {
            "format": MAP_FORMAT,
            "kind": "separable",
            "degree": m.degree,
            "rank": m.rank,
            "factors": [
                {"d": list(f.d), "w": list(f.w), "r": list(f.r)} for f in m.factors
            ],
        }
    return {
        "format": MAP_FORMAT,
        "kind": "full",
        "degree": m.degree,
        "coefficients": m.coefficients.tolist(),
    }


def map_from_json_dict(doc: dict) -> AccuracyMap:
    if not isinstance(doc, dict):
        raise ValueError("map document must be a JSON object")
    if doc.get("format") != MAP_FORMAT:
        raise ValueError(f"unsupported map format: {doc.get('format')!r}")
    kind = doc.get("kind")
    if kind == "separable":
        factors = tuple(
            FactorTriple(tuple(f["d"]), tuple(f["w"]), tuple(f["r"]))
            for f in doc["factors"]
        )
        return SeparableMap(int(doc["rank"]), int(doc["degree"]), factors)
    if kind == "full":
        return FullTensorMap(int(doc["degree"]), np.array(doc["coefficients"], dtype=float))
    raise ValueError(f"unknown map kind: {kind!r}")


def save_map(m: AccuracyMap, path) -> None:
    Path(path).write_text(json.dumps(map_to_json_dict(m), indent=2) + "\n")


def load_map(path) -> AccuracyMap:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"not a valid map JSON file: {path} ({exc})") from exc
    return map_from_json_dict(doc)
