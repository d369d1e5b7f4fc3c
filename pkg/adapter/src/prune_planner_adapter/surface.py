"""Built-in synthetic accuracy surface for trainer-free protocol runs.

A product of three cubic polynomials in the depth, width, and resolution
ratios, shaped like a real CIFAR-scale accuracy grid (~93.5% at the base
model, graceful decay toward the budget floors). Pure stdlib on purpose:
this package is meant to be vendored next to a training stack.
"""

from __future__ import annotations

DEPTH_COEFFS = (2.590267, 1.543532, -2.146383, 0.958919)
WIDTH_COEFFS = (0.622534, 0.505516, -0.553393, 0.22508)
RESOLUTION_COEFFS = (0.195805, 0.627176, -0.701648, 0.275682)


def _horner(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def synthetic_accuracy(d: float, w: float, r: float) -> float:
    """Accuracy fraction of the built-in surface at the given ratio triple."""
    return (
        _horner(DEPTH_COEFFS, d)
        * _horner(WIDTH_COEFFS, w)
        * _horner(RESOLUTION_COEFFS, r)
    )
