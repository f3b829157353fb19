"""Myopic acquisition policies and their exact/sampled cost-to-go.

The acquisition functions score candidate observation indices against the
current Gaussian belief; maximizing the score gives the myopic base policy
that rollout improves on. Sign convention: the hidden function is being
minimized, so every acquisition is written to be maximized (e.g. the
greedy score of index u is minus its posterior mean).

``base_policy_cost`` evaluates the expected cost of following a policy to
the horizon under one of three modes:

* ``exact-enumeration``: sums over the full observation tree induced by a
  finite standardized innovation grid (z = pred_mean + pred_std * xi).
* ``monte-carlo``: averages sampled trajectories (innovations drawn from
  the grid when one is given, else standard normal).
* ``certainty-equivalent``: a single deterministic path with every
  innovation at its mean, i.e. z equal to the predictive mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .beliefs import (
    CostSpec,
    GaussianBelief,
    ObservationModel,
    gaussian_predictive,
    gaussian_update,
    terminal_cost,
)

__all__ = [
    "AcquisitionKind",
    "BasePolicy",
    "NoiseGrid",
    "expected_improvement",
    "acquisition_value",
    "select_myopic",
    "rank_candidates",
    "base_policy_cost",
    "playout_cost",
    "grid_for",
    "xi_from_uniform",
    "MODES",
]

ACQUISITION_NAMES = (
    "posterior-mean-greedy",
    "lcb",
    "expected-improvement",
    "max-predictive-variance",
)

MODES = ("exact-enumeration", "monte-carlo", "certainty-equivalent")


@dataclass(frozen=True)
class AcquisitionKind:
    """Named acquisition function, e.g. ``lcb`` with its kappa parameter."""

    name: str
    kappa: float = 0.0

    def __post_init__(self):
        if self.name not in ACQUISITION_NAMES:
            raise ValueError(f"unknown acquisition kind {self.name!r}")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError("kappa must be finite and nonnegative")

    @classmethod
    def parse(cls, spec: str) -> "AcquisitionKind":
        """Parse the CLI/config grammar, e.g. ``greedy`` or ``lcb:2.0``."""
        name, _, arg = spec.partition(":")
        aliases = {
            "greedy": "posterior-mean-greedy",
            "ei": "expected-improvement",
            "variance": "max-predictive-variance",
        }
        name = aliases.get(name, name)
        kappa = float(arg) if arg else 0.0
        return cls(name, kappa)

    def __str__(self) -> str:
        if self.name == "lcb":
            return f"lcb:{self.kappa:g}"
        return self.name


@dataclass(frozen=True)
class NoiseGrid:
    """Standardized innovation grid: points and probabilities.

    Exact enumeration replaces the continuous observation law
    N(pred_mean, pred_var) by the finite set pred_mean + pred_std * points.
    Matched grids (mean 0, variance 1) come from Gauss-Hermite quadrature.
    """

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("noise grid must have at least one point")
        if pr.shape != pts.shape or np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("grid probabilities must be nonnegative and sum to 1")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def gauss_hermite(cls, n: int = 3) -> "NoiseGrid":
        """n-point grid matching the standard normal mean and variance."""
        pts, w = np.polynomial.hermite_e.hermegauss(n)
        return cls(pts, w / w.sum())

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.points, size=size, p=self.probs)

    def quantile(self, q: float) -> float:
        """Inverse CDF: maps a uniform draw to a grid point."""
        cum = np.cumsum(self.probs)
        idx = min(int(np.searchsorted(cum, q, side="left")), self.size - 1)
        return float(self.points[idx])


def grid_for(noise_grid, u: int) -> NoiseGrid | None:
    """Resolve a shared grid, a per-index grid sequence, or None."""
    if noise_grid is None or isinstance(noise_grid, NoiseGrid):
        return noise_grid
    return noise_grid[u]


def xi_from_uniform(grid: NoiseGrid | None, q: float) -> float:
    """Quantile transform of a shared uniform draw (the CRN mechanism)."""
    if grid is None:
        return float(norm.ppf(q))
    return grid.quantile(q)


def expected_improvement(incumbent: float, mean: float, sigma: float) -> float:
    """Closed-form EI for minimization at a point with the given moments.

    EI = (f* - mu) Phi(t) + sigma phi(t), t = (f* - mu)/sigma; at sigma = 0
    it degenerates to max(0, f* - mu).
    """
    gap = incumbent - mean
    if sigma <= 0.0:
        return max(0.0, gap)
    t = gap / sigma
    return float(gap * norm.cdf(t) + sigma * norm.pdf(t))


def acquisition_value(
    belief: GaussianBelief, model: ObservationModel, u: int, kind: AcquisitionKind
) -> float:
    """Score of observing index u; larger is better under every kind.

    Mean-based kinds read the candidate through its direction vector:
    mu_u = a_u'mean and sigma_u = sqrt(a_u'Sigma a_u), which reduce to the
    posterior mean component and sqrt(Sigma_uu) in the direct case.
    """
    model.check_index(u)
    name = kind.name
    a = model.directions[u]
    if name == "max-predictive-variance":
        return float(a @ belief.covariance @ a)
    mu_u = float(a @ belief.mean)
    if name == "posterior-mean-greedy":
        return -mu_u
    sigma_u = math.sqrt(max(float(a @ belief.covariance @ a), 0.0))
    if name == "lcb":
        return -(mu_u - kind.kappa * sigma_u)
    if name == "expected-improvement":
        incumbent = float(belief.mean.min())
        return expected_improvement(incumbent, mu_u, sigma_u)
    raise ValueError(f"unknown acquisition kind {name!r}")


def _scores(belief, model, kind):
    return np.array(
        [acquisition_value(belief, model, u, kind) for u in range(model.n_obs)]
    )


def select_myopic(
    belief: GaussianBelief, model: ObservationModel, kind: AcquisitionKind
) -> int:
    """Argmax of the acquisition over all indices, lowest index on ties."""
    return int(np.argmax(_scores(belief, model, kind)))


def rank_candidates(
    belief: GaussianBelief, model: ObservationModel, kind: AcquisitionKind, limit: int
) -> list[int]:
    """Top-`limit` indices by acquisition value, descending, stable ties."""
    if not 1 <= limit <= model.n_obs:
        raise ValueError(f"limit must be in [1, {model.n_obs}]")
    scores = _scores(belief, model, kind)
    order = sorted(range(model.n_obs), key=lambda u: (-scores[u], u))
    return order[:limit]


@dataclass(frozen=True)
class BasePolicy:
    """Deterministic acquisition policy: belief, stage -> observation index."""

    kind: AcquisitionKind

    def __call__(self, belief: GaussianBelief, model: ObservationModel, stage: int) -> int:
        return select_myopic(belief, model, self.kind)

    @classmethod
    def parse(cls, spec: str) -> "BasePolicy":
        return cls(AcquisitionKind.parse(spec))

    def __str__(self) -> str:
        return str(self.kind)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def base_policy_cost(
    belief: GaussianBelief,
    model: ObservationModel,
    costs: CostSpec,
    policy,
    start_stage: int,
    horizon: int,
    noise_grid: NoiseGrid | None,
    mode: str = "exact-enumeration",
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    depth_limit: int | None = None,
) -> float:
    """Expected cost of following `policy` from `start_stage` to the horizon.

    Accumulates the observation cost c(u) at each stage plus the terminal
    cost G at stage `horizon`. ``noise_grid`` may be a single NoiseGrid,
    a per-index sequence of grids, or None (continuous noise, monte-carlo
    only). ``depth_limit`` truncates the playout after that many stages
    and charges G of the truncation-point belief instead.
    """
    _check_mode(mode)
    if start_stage > horizon:
        raise ValueError("start_stage must be <= horizon")
    if mode == "exact-enumeration":
        if noise_grid is None:
            raise ValueError("exact enumeration requires a nonempty noise grid")
        return _exact_cost(belief, model, costs, policy, start_stage, horizon, noise_grid, depth_limit)
    if mode == "certainty-equivalent":
        return _ce_cost(belief, model, costs, policy, start_stage, horizon, depth_limit)
    if samples is None or samples < 1:
        raise ValueError("monte-carlo mode needs samples >= 1")
    if rng is None:
        raise ValueError("monte-carlo mode needs an explicit rng")
    total = 0.0
    for _ in range(samples):
        total += _sampled_cost(
            belief, model, costs, policy, start_stage, horizon, noise_grid, rng, depth_limit
        )
    return total / samples


def _stop(stage, start_stage, horizon, depth_limit):
    if stage >= horizon:
        return True
    return depth_limit is not None and (stage - start_stage) >= depth_limit


def _exact_cost(belief, model, costs, policy, stage, horizon, grids, depth_limit, start=None):
    start = stage if start is None else start
    if _stop(stage, start, horizon, depth_limit):
        return terminal_cost(belief, costs)
    u = policy(belief, model, stage)
    grid = grid_for(grids, u)
    pred_mean, pred_var = gaussian_predictive(belief, model, u)
    sd = math.sqrt(pred_var)
    value = float(model.costs[u])
    for xi, p in zip(grid.points, grid.probs):
        nxt = gaussian_update(belief, model, u, pred_mean + sd * xi)
        value += p * _exact_cost(nxt, model, costs, policy, stage + 1, horizon, grids, depth_limit, start)
    return value


def playout_cost(
    belief, model, costs, policy, start_stage, horizon, noise_grid, uniforms,
    depth_limit=None,
) -> float:
    """Cost of one policy playout driven by shared uniform draws.

    ``uniforms[t]`` feeds the quantile transform of the grid attached to
    whatever index the policy picks at stage start_stage + t; fixing the
    array fixes the path (the common-random-numbers hook). ``uniforms =
    None`` gives the certainty-equivalent path (every z at its predictive
    mean).
    """
    stage, value = start_stage, 0.0
    while not _stop(stage, start_stage, horizon, depth_limit):
        u = policy(belief, model, stage)
        pred_mean, pred_var = gaussian_predictive(belief, model, u)
        if uniforms is None:
            z = pred_mean
        else:
            xi = xi_from_uniform(grid_for(noise_grid, u), float(uniforms[stage - start_stage]))
            z = pred_mean + math.sqrt(pred_var) * xi
        value += float(model.costs[u])
        belief = gaussian_update(belief, model, u, z)
        stage += 1
    return value + terminal_cost(belief, costs)


def _ce_cost(belief, model, costs, policy, stage, horizon, depth_limit):
    return playout_cost(belief, model, costs, policy, stage, horizon, None, None, depth_limit)


def _sampled_cost(belief, model, costs, policy, stage, horizon, grids, rng, depth_limit):
    uniforms = rng.random(max(horizon - stage, 0))
    return playout_cost(belief, model, costs, policy, stage, horizon, grids, uniforms, depth_limit)
