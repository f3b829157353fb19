"""Exact recursive Bayesian beliefs and the cost structure built on them.

Two belief families are supported:

* ``GaussianBelief`` over a hidden real vector, updated in closed form from
  linear observations ``z = a'theta + w`` with independent Gaussian noise
  (direct component observations are the special case ``a = e_u``).
* ``DiscreteBelief`` over a finite hypothesis set, updated by Bayes' rule
  from arbitrary nonnegative likelihoods.

All belief values are immutable; every operation returns a new belief.
Only Gaussian noise (or its finite standardized-grid stand-in used by the
enumeration oracles) is implemented for the continuous case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussianBelief",
    "DiscreteBelief",
    "ObservationModel",
    "CostSpec",
    "ContradictoryObservationError",
    "InconsistentObservationError",
    "gaussian_update",
    "gaussian_predictive",
    "discrete_update",
    "terminal_cost",
    "best_point",
    "belief_to_text",
    "belief_from_text",
]

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
EXACT_OBS_TOL = 1e-9

TERMINAL_KINDS = ("min-posterior-mean", "trace-covariance", "entropy-discrete")


class ContradictoryObservationError(ValueError):
    """An exact (zero-noise) observation conflicts with a degenerate prior."""


class InconsistentObservationError(ValueError):
    """An observation has zero likelihood under every hypothesis."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian posterior over a hidden vector: mean and covariance.

    The covariance must be symmetric (to 1e-12) and positive semidefinite
    (smallest eigenvalue >= -1e-10).
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(self.mean))
        object.__setattr__(self, "covariance", _readonly(self.covariance))
        m = self.mean.shape
        c = self.covariance.shape
        if len(m) != 1 or len(c) != 2 or c[0] != c[1] or m[0] != c[0]:
            raise ValueError(f"mean shape {m} incompatible with covariance shape {c}")
        if not np.all(np.abs(self.covariance - self.covariance.T) <= SYMMETRY_TOL):
            raise ValueError("covariance is not symmetric within 1e-12")
        if m[0] and np.linalg.eigvalsh(self.covariance).min() < -PSD_TOL:
            raise ValueError("covariance is not PSD within tolerance")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class DiscreteBelief:
    """Probability vector over a finite hypothesis set."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _readonly(self.probs))
        p = self.probs
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty vector")
        if np.any(p < 0):
            raise ValueError("negative probability entry")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "DiscreteBelief":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class ObservationModel:
    """Observation menu: direction vectors, noise variances, and costs.

    ``directions[u]`` is the vector a_u of the linear observation
    ``z_u = a_u' theta + w_u``; identity basis rows reproduce the direct
    per-component case. ``noise_variances[u]`` may be zero (exact
    observation). ``costs[u]`` is the per-observation cost c(u) >= 0.
    """

    directions: np.ndarray         # (n_obs, m)
    noise_variances: np.ndarray    # (n_obs,)
    costs: np.ndarray              # (n_obs,)

    def __post_init__(self):
        object.__setattr__(self, "directions", _readonly(np.atleast_2d(self.directions)))
        object.__setattr__(self, "noise_variances", _readonly(self.noise_variances))
        object.__setattr__(self, "costs", _readonly(self.costs))
        n, m = self.directions.shape
        if n < 1:
            raise ValueError("need at least one observation index")
        if self.noise_variances.shape != (n,) or self.costs.shape != (n,):
            raise ValueError("noise_variances and costs must have one entry per observation")
        if not np.all(np.isfinite(self.noise_variances)) or np.any(self.noise_variances < 0):
            raise ValueError("noise variances must be finite and nonnegative")
        if np.any(self.costs < 0):
            raise ValueError("observation costs must be nonnegative")

    @property
    def n_obs(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @classmethod
    def direct(cls, m, noise_variances, costs=None) -> "ObservationModel":
        """Direct per-component observations: a_u = e_u for u = 0..m-1."""
        nv = np.broadcast_to(np.asarray(noise_variances, dtype=float), (m,))
        c = np.zeros(m) if costs is None else np.broadcast_to(np.asarray(costs, dtype=float), (m,))
        return cls(np.eye(m), nv, c)

    def check_index(self, u: int) -> None:
        if not 0 <= u < self.n_obs:
            raise IndexError(f"observation index {u} out of range [0, {self.n_obs})")

    def restrict(self, indices) -> "ObservationModel":
        """Sub-model containing only the listed observation indices."""
        idx = list(indices)
        return ObservationModel(
            self.directions[idx], self.noise_variances[idx], self.costs[idx]
        )


@dataclass(frozen=True)
class CostSpec:
    """Terminal cost selector; observation costs live on the model.

    Kinds: ``min-posterior-mean`` (min_u of the posterior mean),
    ``trace-covariance`` (tr Sigma), ``entropy-discrete`` (Shannon entropy
    in nats, 0 log 0 := 0).
    """

    terminal_kind: str = "trace-covariance"

    def __post_init__(self):
        if self.terminal_kind not in TERMINAL_KINDS:
            raise ValueError(f"unknown terminal kind {self.terminal_kind!r}")


def _check_dim(belief: GaussianBelief, model: ObservationModel) -> None:
    if belief.dim != model.dim:
        raise ValueError(f"belief dimension {belief.dim} != model dimension {model.dim}")


def gaussian_update(
    belief: GaussianBelief, model: ObservationModel, u: int, z: float, jitter: float = 0.0
) -> GaussianBelief:
    """Condition the Gaussian belief on one observation z = a_u'theta + w_u.

    Standard rank-one conditioning: with s = a'Sigma a + r and gain
    K = Sigma a / s, the posterior is mean + K (z - a'mean) and
    Sigma - (Sigma a)(Sigma a)'/s, symmetrized. ``jitter`` is added to the
    posterior diagonal (numerical hygiene, off by default).

    A zero-noise observation along a direction the prior already pins
    down (a'Sigma a = 0) is vacuous if z matches the degenerate mean and
    raises ContradictoryObservationError otherwise (tolerance 1e-9).
    """
    _check_dim(belief, model)
    model.check_index(u)
    a = model.directions[u]
    r = model.noise_variances[u]
    sigma_a = belief.covariance @ a
    s = float(a @ sigma_a) + r
    innovation = z - float(a @ belief.mean)
    # Degenerate direction: s indistinguishable from 0 at the scale of the
    # covariance (covers rounding residue left by a previous exact update).
    diag = np.abs(np.diag(belief.covariance))
    scale = 1.0 + float(a @ a) * (float(diag.max()) if diag.size else 0.0)
    if s <= SYMMETRY_TOL * scale:
        if abs(innovation) > EXACT_OBS_TOL:
            raise ContradictoryObservationError(
                f"exact observation z={z!r} contradicts degenerate prior along a_{u}"
            )
        return belief
    mean = belief.mean + sigma_a * (innovation / s)
    cov = belief.covariance - np.outer(sigma_a, sigma_a) / s
    cov = (cov + cov.T) / 2.0
    if jitter:
        cov = cov + jitter * np.eye(cov.shape[0])
    return GaussianBelief(mean, cov)


def gaussian_predictive(
    belief: GaussianBelief, model: ObservationModel, u: int
) -> tuple[float, float]:
    """Mean and variance of z_u before it is observed: (a'mu, a'Sigma a + r)."""
    _check_dim(belief, model)
    model.check_index(u)
    a = model.directions[u]
    pred_mean = float(a @ belief.mean)
    pred_var = float(a @ belief.covariance @ a) + model.noise_variances[u]
    return pred_mean, max(pred_var, 0.0)


def discrete_update(belief: DiscreteBelief, likelihoods) -> DiscreteBelief:
    """Bayes' rule: posterior_i proportional to belief_i * likelihoods_i.

    Zero-probability hypotheses stay at zero. Raises
    InconsistentObservationError when every hypothesis has zero posterior
    mass.
    """
    lik = np.asarray(likelihoods, dtype=float)
    if lik.shape != belief.probs.shape:
        raise ValueError("likelihood vector length must match belief")
    if np.any(lik < 0):
        raise ValueError("likelihoods must be nonnegative")
    unnorm = belief.probs * lik
    total = unnorm.sum()
    if total <= 0.0:
        raise InconsistentObservationError("observation inconsistent with every hypothesis")
    return DiscreteBelief(unnorm / total)


def terminal_cost(belief, spec: CostSpec) -> float:
    """Terminal cost G of the final belief under the given spec."""
    kind = spec.terminal_kind
    if kind == "min-posterior-mean":
        if not isinstance(belief, GaussianBelief):
            raise TypeError("min-posterior-mean needs a Gaussian belief")
        return float(belief.mean.min())
    if kind == "trace-covariance":
        if not isinstance(belief, GaussianBelief):
            raise TypeError("trace-covariance needs a Gaussian belief")
        return float(np.trace(belief.covariance))
    if kind == "entropy-discrete":
        if not isinstance(belief, DiscreteBelief):
            raise TypeError("entropy-discrete needs a discrete belief")
        p = belief.probs[belief.probs > 0]
        return float(-(p * np.log(p)).sum())
    raise ValueError(f"unknown terminal kind {kind!r}")


def best_point(belief: GaussianBelief) -> int:
    """Index of the minimum posterior mean; ties go to the lowest index."""
    if belief.dim == 0:
        raise ValueError("empty belief")
    return int(np.argmin(belief.mean))


# --- plain-text snapshots -------------------------------------------------
#
# Beliefs serialize to JSON with fields `mean`/`covariance` (Gaussian) or
# `probs` (discrete). Numbers are printed with 17 significant digits so a
# round trip is bit-exact.


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def belief_to_text(belief) -> str:
    if isinstance(belief, GaussianBelief):
        mean = "[" + ", ".join(_fmt(x) for x in belief.mean) + "]"
        rows = (
            "[" + ", ".join(_fmt(x) for x in row) + "]" for row in belief.covariance
        )
        cov = "[" + ", ".join(rows) + "]"
        return '{"mean": %s, "covariance": %s}' % (mean, cov)
    if isinstance(belief, DiscreteBelief):
        probs = "[" + ", ".join(_fmt(x) for x in belief.probs) + "]"
        return '{"probs": %s}' % probs
    raise TypeError(f"cannot serialize {type(belief).__name__}")


def belief_from_text(text: str):
    doc = json.loads(text)
    if "probs" in doc:
        return DiscreteBelief(np.asarray(doc["probs"], dtype=float))
    return GaussianBelief(
        np.asarray(doc["mean"], dtype=float), np.asarray(doc["covariance"], dtype=float)
    )
