"""Shared instance generators for the test suite.

Everything is seeded: the same seed always yields the same instance.
"""

import numpy as np
import pytest

from beliefopt.beliefs import CostSpec, GaussianBelief, ObservationModel
from beliefopt.policies import NoiseGrid
from beliefopt.problems import BOProblem


def random_gaussian_belief(rng, m):
    a = rng.normal(size=(m, m))
    cov = a @ a.T + 0.3 * np.eye(m)
    return GaussianBelief(rng.normal(size=m), cov)


def random_direct_model(rng, m, zero_cost=False):
    noise = rng.uniform(0.3, 1.2, size=m)
    costs = np.zeros(m) if zero_cost else rng.choice([0.0, 0.2], size=m)
    return ObservationModel(np.eye(m), noise, costs)


def random_linear_model(rng, m, n_obs):
    directions = rng.normal(size=(n_obs, m))
    noise = rng.uniform(0.3, 1.2, size=n_obs)
    return ObservationModel(directions, noise, np.zeros(n_obs))


def random_bo_instance(seed, max_m=3, max_horizon=3, grid_size=None) -> BOProblem:
    """Seeded small enumerable instance for oracle-backed tests."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, max_m + 1))
    horizon = int(rng.integers(2, max_horizon + 1))
    g = grid_size if grid_size is not None else int(rng.choice([2, 3]))
    kind = str(rng.choice(["trace-covariance", "min-posterior-mean"]))
    return BOProblem(
        prior=random_gaussian_belief(rng, m),
        model=random_direct_model(rng, m),
        costs=CostSpec(kind),
        horizon=horizon,
        noise_grid=NoiseGrid.gauss_hermite(g),
        name=f"random-{seed}",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
