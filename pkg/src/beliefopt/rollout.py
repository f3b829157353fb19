"""Approximation in value space for the belief-state problem.

A Q-factor of (belief, candidate index) is the candidate's observation
cost plus the expected tail value over the candidate's observation
outcome; the tail is the base policy's cost-to-go (rollout), an exact
value function supplied through ``tail_value`` (the oracle hook), or a
truncated playout closed with the terminal cost. ``select_rollout``
minimizes the Q-factor over candidates, optionally pruned to the base
acquisition's most promising indices.

Common random numbers: Q-factor comparisons across candidates share one
matrix of uniform draws at matched tree positions, each mapped through
the quantile function of whatever innovation grid applies at the index
actually observed. Every estimate carries a deterministic sub-seed
derived from (seed, stage[, agent, candidate]), so concurrent evaluation
cannot change results.

Multiagent selection picks one index per agent, one agent at a time:
agent j minimizes over single-index candidates with agents < j committed
and agents > j filled in by the base acquisition on a fantasy posterior
(covariance conditioned on the picks, mean unchanged). Per stage this
costs agents x candidates Q-factor evaluations instead of the
candidates^agents joint enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beliefs import (
    CostSpec,
    GaussianBelief,
    ObservationModel,
    best_point,
    gaussian_predictive,
    gaussian_update,
    terminal_cost,
)
from .policies import (
    MODES,
    BasePolicy,
    base_policy_cost,
    grid_for,
    playout_cost,
    rank_candidates,
    select_myopic,
    xi_from_uniform,
)
from .problems import BOProblem

__all__ = [
    "QFactorEstimate",
    "RolloutConfig",
    "q_factor",
    "select_rollout",
    "select_multiagent",
    "multiagent_base_choices",
    "run_episode",
    "EpisodeResult",
]


@dataclass(frozen=True)
class QFactorEstimate:
    """One candidate's estimated Q-factor with its sampling bookkeeping."""

    candidate: int | tuple[int, ...]
    value: float
    stderr: float
    samples: int
    mode: str

    def __post_init__(self):
        if self.mode == "exact-enumeration" and self.stderr != 0.0:
            raise ValueError("exact enumeration must report stderr 0")
        if self.mode != "exact-enumeration" and self.samples < 1:
            raise ValueError("sampled estimates need samples >= 1")


@dataclass(frozen=True)
class RolloutConfig:
    """Rollout knobs; maps one-to-one onto the CLI flags."""

    horizon: int
    truncation_depth: int | None = None
    samples_per_candidate: int = 64
    seed: int = 0
    common_random_numbers: bool = True
    prune_limit: int | None = None
    mode: str = "exact-enumeration"

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.samples_per_candidate < 1:
            raise ValueError("samples_per_candidate must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.truncation_depth is not None and self.truncation_depth < 0:
            raise ValueError("truncation_depth must be nonnegative")
        if self.prune_limit is not None and self.prune_limit < 1:
            raise ValueError("prune_limit must be >= 1")


def _sub_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _check_stage(stage: int, cfg: RolloutConfig) -> None:
    if not 0 <= stage < cfg.horizon:
        raise ValueError(f"stage {stage} out of range for horizon {cfg.horizon}")
    if cfg.truncation_depth is not None and cfg.truncation_depth > cfg.horizon - stage:
        raise ValueError("truncation_depth exceeds the remaining horizon")


def _tail(belief, model, costs, base, stage, cfg, noise_grid, tail_value, uniforms):
    """Tail value at a post-observation belief: hook, or base-policy cost.

    ``uniforms`` drives a single sampled playout; None means evaluate the
    tail under the configured deterministic semantics (exact enumeration
    or the certainty-equivalent path).
    """
    if tail_value is not None:
        return tail_value(belief, stage)
    if uniforms is not None:
        return playout_cost(
            belief, model, costs, base, stage, cfg.horizon, noise_grid, uniforms,
            depth_limit=cfg.truncation_depth,
        )
    mode = "exact-enumeration" if cfg.mode == "exact-enumeration" else "certainty-equivalent"
    return base_policy_cost(
        belief, model, costs, base, stage, cfg.horizon, noise_grid, mode,
        depth_limit=cfg.truncation_depth,
    )


def q_factor(
    belief: GaussianBelief,
    model: ObservationModel,
    costs: CostSpec,
    base: BasePolicy,
    candidate: int,
    stage: int,
    cfg: RolloutConfig,
    noise_grid=None,
    tail_value=None,
    uniforms: np.ndarray | None = None,
) -> QFactorEstimate:
    """Estimate c(u) + E_z[ tail(new belief) ] for one candidate index.

    exact-enumeration sums the candidate's innovation grid with exact
    base tails; certainty-equivalent keeps the stochastic first stage
    (grid-enumerated, or sampled when no grid exists) and runs one
    deterministic mean-noise tail per branch; monte-carlo averages
    ``cfg.samples_per_candidate`` full sampled playouts. ``uniforms``
    (samples x remaining-stages) injects shared draws for CRN;
    without it the estimate draws from its own (seed, stage, candidate)
    stream.
    """
    model.check_index(candidate)
    _check_stage(stage, cfg)
    c_u = float(model.costs[candidate])
    pred_mean, pred_var = gaussian_predictive(belief, model, candidate)
    sd = math.sqrt(pred_var)
    grid = grid_for(noise_grid, candidate)

    if cfg.mode in ("exact-enumeration", "certainty-equivalent") and grid is not None:
        value = c_u
        for xi, p in zip(grid.points, grid.probs):
            nxt = gaussian_update(belief, model, candidate, pred_mean + sd * xi)
            value += p * _tail(nxt, model, costs, base, stage + 1, cfg, noise_grid, tail_value, None)
        return QFactorEstimate(candidate, value, 0.0, grid.size, cfg.mode)
    if cfg.mode == "exact-enumeration":
        raise ValueError("exact enumeration requires a noise grid")

    n_samples = cfg.samples_per_candidate
    if uniforms is None:
        rng = _sub_rng(cfg.seed, stage, candidate)
        uniforms = rng.random((n_samples, cfg.horizon - stage))
    totals = np.empty(n_samples)
    for s in range(n_samples):
        xi = xi_from_uniform(grid, float(uniforms[s, 0]))
        nxt = gaussian_update(belief, model, candidate, pred_mean + sd * xi)
        tail_uniforms = uniforms[s, 1:] if cfg.mode == "monte-carlo" else None
        totals[s] = c_u + _tail(
            nxt, model, costs, base, stage + 1, cfg, noise_grid, tail_value, tail_uniforms
        )
    stderr = float(totals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return QFactorEstimate(candidate, float(totals.mean()), stderr, n_samples, cfg.mode)


def _candidates(belief, model, base, cfg):
    if cfg.prune_limit is not None and cfg.prune_limit < model.n_obs:
        return rank_candidates(belief, model, base.kind, cfg.prune_limit)
    return list(range(model.n_obs))


def select_rollout(
    belief: GaussianBelief,
    model: ObservationModel,
    costs: CostSpec,
    base: BasePolicy,
    stage: int,
    cfg: RolloutConfig,
    noise_grid=None,
    tail_value=None,
) -> tuple[int, list[QFactorEstimate]]:
    """Q-factor minimization over (possibly pruned) candidates.

    Returns the chosen index (lowest index on value ties) and every
    candidate's estimate. With common random numbers on, all candidates
    see the same uniform draws at matched positions.
    """
    _check_stage(stage, cfg)
    candidates = _candidates(belief, model, base, cfg)
    shared = None
    if cfg.mode == "monte-carlo" and cfg.common_random_numbers:
        rng = _sub_rng(cfg.seed, stage)
        shared = rng.random((cfg.samples_per_candidate, cfg.horizon - stage))
    estimates = [
        q_factor(belief, model, costs, base, u, stage, cfg, noise_grid, tail_value, shared)
        for u in candidates
    ]
    best = min(estimates, key=lambda e: (e.value, e.candidate))
    return best.candidate, estimates


# --- multiagent selection ---------------------------------------------------


def _fantasy_update(belief, model, u):
    """Posterior shape after observing index u at its predictive mean."""
    pred_mean, _ = gaussian_predictive(belief, model, u)
    return gaussian_update(belief, model, u, pred_mean)


def multiagent_base_choices(
    belief: GaussianBelief, model: ObservationModel, base: BasePolicy, count: int
) -> tuple[int, ...]:
    """The multiagent base policy: fill `count` slots by the acquisition,
    conditioning each pick on the previous ones through a fantasy update."""
    picks = []
    fantasy = belief
    for _ in range(count):
        u = select_myopic(fantasy, model, base.kind)
        picks.append(u)
        fantasy = _fantasy_update(fantasy, model, u)
    return tuple(picks)


def _expand_joint(belief, model, indices, pos, noise_grid, uniforms, upos, leaf):
    """Expectation over the joint observation of `indices`, sequentially.

    ``uniforms`` drives one sampled path; None enumerates the grids.
    ``leaf(belief)`` evaluates the continuation after all indices land.
    """
    if pos == len(indices):
        return leaf(belief)
    u = indices[pos]
    grid = grid_for(noise_grid, u)
    pred_mean, pred_var = gaussian_predictive(belief, model, u)
    sd = math.sqrt(pred_var)
    if uniforms is None:
        total = 0.0
        for xi, p in zip(grid.points, grid.probs):
            nxt = gaussian_update(belief, model, u, pred_mean + sd * xi)
            total += p * _expand_joint(nxt, model, indices, pos + 1, noise_grid, None, upos, leaf)
        return total
    xi = xi_from_uniform(grid, float(uniforms[upos + pos]))
    nxt = gaussian_update(belief, model, u, pred_mean + sd * xi)
    return _expand_joint(nxt, model, indices, pos + 1, noise_grid, uniforms, upos, leaf)


def _ma_stage_cost(model, indices):
    return float(sum(model.costs[u] for u in indices))


def _ma_tail(belief, model, costs, base, stage, cfg, agent_count, noise_grid, uniforms, qstage):
    """Cost-to-go of the multiagent base policy from `stage` onward.

    ``qstage`` is the stage the enclosing Q-factor was evaluated at; the
    truncation depth counts base stages after it, and uniform draws are
    indexed by slots since it.
    """
    tail_steps_done = stage - qstage - 1
    truncated = cfg.truncation_depth is not None and tail_steps_done >= cfg.truncation_depth
    if stage >= cfg.horizon or truncated:
        return terminal_cost(belief, costs)
    picks = multiagent_base_choices(belief, model, base, agent_count)
    stage_cost = _ma_stage_cost(model, picks)
    if cfg.mode == "certainty-equivalent":
        b = belief
        for u in picks:
            b = _fantasy_update(b, model, u)
        return stage_cost + _ma_tail(
            b, model, costs, base, stage + 1, cfg, agent_count, noise_grid, uniforms, qstage
        )

    def leaf(b):
        return _ma_tail(b, model, costs, base, stage + 1, cfg, agent_count, noise_grid, uniforms, qstage)

    upos = (stage - qstage) * agent_count
    sampled = uniforms if cfg.mode == "monte-carlo" else None
    return stage_cost + _expand_joint(belief, model, picks, 0, noise_grid, sampled, upos, leaf)


def _ma_q(belief, model, costs, base, first_stage_indices, stage, cfg, agent_count, noise_grid, uniforms):
    stage_cost = _ma_stage_cost(model, first_stage_indices)
    if cfg.mode == "monte-carlo":
        n = cfg.samples_per_candidate
        totals = np.empty(n)
        for s in range(n):
            def leaf(b, row=uniforms[s]):
                return _ma_tail(b, model, costs, base, stage + 1, cfg, agent_count, noise_grid, row, stage)

            totals[s] = stage_cost + _expand_joint(
                belief, model, first_stage_indices, 0, noise_grid, uniforms[s], 0, leaf
            )
        stderr = float(totals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return float(totals.mean()), stderr, n

    def leaf(b):
        return _ma_tail(b, model, costs, base, stage + 1, cfg, agent_count, noise_grid, None, stage)

    value = stage_cost + _expand_joint(belief, model, first_stage_indices, 0, noise_grid, None, 0, leaf)
    grid_sizes = [grid_for(noise_grid, u).size for u in first_stage_indices]
    return value, 0.0, int(np.prod(grid_sizes)) if grid_sizes else 1


def select_multiagent(
    belief: GaussianBelief,
    model: ObservationModel,
    costs: CostSpec,
    base: BasePolicy,
    stage: int,
    cfg: RolloutConfig,
    agent_count: int,
    noise_grid=None,
) -> tuple[tuple[int, ...], list[list[QFactorEstimate]]]:
    """One-agent-at-a-time rollout over a simultaneous observation stage.

    Agent j minimizes its Q-factor with agents < j fixed at their chosen
    indices and agents > j filled by the base acquisition; all chosen
    observations are applied jointly when the stage executes. Returns the
    index tuple and per-agent estimate lists (agents x candidates
    Q-factor evaluations in total).
    """
    if agent_count < 1:
        raise ValueError("agent_count must be >= 1")
    _check_stage(stage, cfg)
    if cfg.mode == "exact-enumeration" and noise_grid is None:
        raise ValueError("exact enumeration requires a noise grid")
    committed: list[int] = []
    all_estimates: list[list[QFactorEstimate]] = []
    for j in range(agent_count):
        candidates = _candidates(belief, model, base, cfg)
        uniforms = None
        if cfg.mode == "monte-carlo":
            key = (stage,) if cfg.common_random_numbers else (stage, j)
            rng = _sub_rng(cfg.seed, *key)
            uniforms = rng.random(
                (cfg.samples_per_candidate, (cfg.horizon - stage) * agent_count)
            )
        agent_estimates = []
        for u in candidates:
            fill = committed + [u]
            if len(fill) < agent_count:
                fantasy = belief
                for v in fill:
                    fantasy = _fantasy_update(fantasy, model, v)
                fill = fill + list(
                    multiagent_base_choices(fantasy, model, base, agent_count - len(fill))
                )
            value, stderr, samples = _ma_q(
                belief, model, costs, base, tuple(fill), stage, cfg, agent_count,
                noise_grid, uniforms,
            )
            agent_estimates.append(QFactorEstimate(u, value, stderr, samples, cfg.mode))
        best = min(agent_estimates, key=lambda e: (e.value, e.candidate))
        committed.append(best.candidate)
        all_estimates.append(agent_estimates)
    return tuple(committed), all_estimates


# --- closed-loop episode harness --------------------------------------------


@dataclass
class EpisodeResult:
    """One closed-loop run: choices, observations, beliefs, and cost."""

    chosen: list[int]
    observed: list[float]
    beliefs: list[GaussianBelief]
    realized_cost: float
    final_best_point: int
    estimates: list[list[QFactorEstimate]] = field(default_factory=list)


def default_observation_sampler(model: ObservationModel, u: int, truth: np.ndarray, rng):
    """Physical observation z = a_u' theta + sqrt(r_u) * N(0, 1)."""
    return float(model.directions[u] @ truth + math.sqrt(model.noise_variances[u]) * rng.standard_normal())


def run_episode(
    problem: BOProblem,
    base: BasePolicy,
    cfg: RolloutConfig,
    truth,
    observation_sampler=default_observation_sampler,
    controller: str = "rollout",
) -> EpisodeResult:
    """Simulate the closed loop against a fixed truth vector.

    At each stage the controller ("rollout" or "base") picks an index,
    the sampler draws z from the truth, and the belief is conditioned on
    it. The realized cost is the accumulated observation cost plus the
    terminal cost of the final belief.
    """
    if cfg.horizon < 1:
        raise ValueError("episodes need horizon >= 1")
    if controller not in ("rollout", "base"):
        raise ValueError(f"unknown controller {controller!r}")
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (problem.model.dim,):
        raise ValueError("truth vector does not match the model dimension")
    belief = problem.prior
    beliefs = [belief]
    chosen: list[int] = []
    observed: list[float] = []
    estimates: list[list[QFactorEstimate]] = []
    cost = 0.0
    for stage in range(cfg.horizon):
        if controller == "rollout":
            u, ests = select_rollout(
                belief, problem.model, problem.costs, base, stage, cfg, problem.noise_grid
            )
            estimates.append(ests)
        else:
            u = base(belief, problem.model, stage)
        obs_rng = _sub_rng(cfg.seed, 1_000_000 + stage)
        z = float(observation_sampler(problem.model, u, truth, obs_rng))
        cost += float(problem.model.costs[u])
        belief = gaussian_update(belief, problem.model, u, z)
        beliefs.append(belief)
        chosen.append(u)
        observed.append(z)
    cost += terminal_cost(belief, problem.costs)
    return EpisodeResult(chosen, observed, beliefs, cost, best_point(belief), estimates)
