import numpy as np
import pytest

from prune_planner import Dataset, FactorTriple, SeparableMap, load_samples
from prune_planner.fixture_data import fixture_path


@pytest.fixture(scope="session")
def resnet_merged() -> Dataset:
    return load_samples(fixture_path("resnet_grid"))


@pytest.fixture(scope="session")
def densenet_merged() -> Dataset:
    return load_samples(fixture_path("densenet_grid"))


@pytest.fixture(scope="session")
def resnet_slice_b() -> Dataset:
    return load_samples(fixture_path("resnet_grid_w1"))


def random_separable_map(rng: np.random.Generator, degree: int = 3) -> SeparableMap:
    """A random smooth surface, positive over (0, 1]^3 with mild curvature."""

    def coeffs() -> tuple[float, ...]:
        c = [
            rng.uniform(0.55, 0.8),
            rng.uniform(0.05, 0.45),
            rng.uniform(-0.35, 0.10),
            rng.uniform(-0.12, 0.06),
        ]
        return tuple(c[: degree + 1])

    return SeparableMap(1, degree, (FactorTriple(coeffs(), coeffs(), coeffs()),))
