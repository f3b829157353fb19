"""Brute-force exact dynamic programming on tiny discretized instances.

Everything here is ground truth for the tests: no sampling, no
approximation, explicit enumeration of the full observation tree. Two
independent recursions solve the observation-selection problem — one on
beliefs propagated by the recursive update, one on raw observation
histories whose beliefs are recomputed by one-shot batch conditioning —
and they must agree to 1e-12.

For adaptive systems the recursion runs over information vectors with
the hypothesis-mixture expectation, in two algebraic forms (iterated
expectation over hypotheses, or direct aggregation over next states).
Deterministic systems use an exact information-state lumping: the belief
is the prior renormalized over the consistent hypothesis set, so values
memoize on (remaining horizon, state, consistent set), optionally capped
by a problem-declared saturation depth.
"""

from __future__ import annotations

import math

import numpy as np

from .adaptive import BeliefState, ParametricSystem, belief_transition
from .beliefs import (
    DiscreteBelief,
    GaussianBelief,
    ObservationModel,
    gaussian_predictive,
    gaussian_update,
    terminal_cost,
)
from .policies import grid_for
from .problems import BOProblem

__all__ = [
    "GUARD_LEAVES",
    "EnumerationGuardError",
    "check_bo_guard",
    "check_adaptive_guard",
    "batch_conditioning",
    "exact_dp_value",
    "info_vector_dp_value",
    "policy_value",
    "exact_adaptive_dp",
    "adaptive_policy_value",
]

GUARD_LEAVES = 10**6

TIE_TOL = 1e-12


class EnumerationGuardError(ValueError):
    """The instance's observation tree is too large to enumerate."""


def _max_grid_size(problem: BOProblem) -> int:
    grids = problem.noise_grid
    if grids is None:
        raise EnumerationGuardError("exact enumeration needs a noise grid")
    if isinstance(grids, (list, tuple)):
        return max(g.size for g in grids)
    return grids.size


def check_bo_guard(problem: BOProblem, agent_count: int = 1) -> None:
    branching = problem.model.n_obs * _max_grid_size(problem) ** agent_count
    if branching ** problem.horizon > GUARD_LEAVES:
        raise EnumerationGuardError(
            f"observation tree has up to {branching ** problem.horizon} leaves (> {GUARD_LEAVES})"
        )


def check_adaptive_guard(system: ParametricSystem, initial_state) -> None:
    # worst-case branching at the root, taken as uniform over the tree
    b = 0
    for u in system.controls(0, initial_state):
        outcomes = set()
        for theta in system.hypotheses:
            for w, _ in system.disturbances(0, initial_state, theta, u):
                outcomes.add((system.transition(0, initial_state, theta, u, w)))
        b = max(b, len(outcomes))
    n_controls = len(list(system.controls(0, initial_state)))
    if (n_controls * max(b, 1)) ** system.horizon > GUARD_LEAVES and not system.deterministic:
        raise EnumerationGuardError("adaptive instance exceeds the enumeration guard")


def batch_conditioning(
    prior: GaussianBelief, model: ObservationModel, pairs
) -> GaussianBelief:
    """One-shot Gaussian conditioning on a batch of (index, value) pairs.

    Forms the joint Gaussian of (theta, z_batch) and conditions directly:
    an implementation independent of the recursive rank-one update, used
    as its oracle. Requires a nonsingular batch predictive covariance.
    """
    pairs = list(pairs)
    if not pairs:
        return prior
    A = np.stack([model.directions[u] for u, _ in pairs])
    R = np.diag([model.noise_variances[u] for u, _ in pairs])
    z = np.array([z for _, z in pairs], dtype=float)
    S = A @ prior.covariance @ A.T + R
    gain = np.linalg.solve(S, A @ prior.covariance).T
    mean = prior.mean + gain @ (z - A @ prior.mean)
    cov = prior.covariance - gain @ A @ prior.covariance
    return GaussianBelief(mean, (cov + cov.T) / 2.0)


def _argmin_set(values: dict) -> tuple[float, set]:
    best = min(values.values())
    return best, {u for u, v in values.items() if v <= best + TIE_TOL}


def exact_dp_value(problem: BOProblem) -> tuple[float, set[int]]:
    """Backward DP over beliefs: J*_N = G, J*_k = min_u [c(u) + E_z J*_{k+1}].

    Returns the root value and every minimizing first observation index.
    """
    check_bo_guard(problem)
    model, costs, grids = problem.model, problem.costs, problem.noise_grid

    def J(belief: GaussianBelief, k: int) -> float:
        if k == problem.horizon:
            return terminal_cost(belief, costs)
        return min(_stage_values(belief, k).values())

    def _stage_values(belief, k):
        values = {}
        for u in range(model.n_obs):
            grid = grid_for(grids, u)
            pred_mean, pred_var = gaussian_predictive(belief, model, u)
            sd = math.sqrt(pred_var)
            q = float(model.costs[u])
            for xi, p in zip(grid.points, grid.probs):
                q += p * J(gaussian_update(belief, model, u, pred_mean + sd * xi), k + 1)
            values[u] = q
        return values

    if problem.horizon == 0:
        return terminal_cost(problem.prior, costs), set()
    return _argmin_set(_stage_values(problem.prior, 0))


def info_vector_dp_value(problem: BOProblem) -> tuple[float, set[int]]:
    """The same DP on raw observation histories (information vectors).

    The belief at each node is recomputed from scratch by batch
    conditioning on the full history — a second, independent route to the
    same values as exact_dp_value.
    """
    check_bo_guard(problem)
    model, costs, grids = problem.model, problem.costs, problem.noise_grid

    def J(history: tuple, k: int) -> float:
        if k == problem.horizon:
            return terminal_cost(batch_conditioning(problem.prior, model, history), costs)
        return min(_stage_values(history, k).values())

    def _stage_values(history, k):
        belief = batch_conditioning(problem.prior, model, history)
        values = {}
        for u in range(model.n_obs):
            grid = grid_for(grids, u)
            pred_mean, pred_var = gaussian_predictive(belief, model, u)
            sd = math.sqrt(pred_var)
            q = float(model.costs[u])
            for xi, p in zip(grid.points, grid.probs):
                q += p * J(history + ((u, pred_mean + sd * xi),), k + 1)
            values[u] = q
        return values

    if problem.horizon == 0:
        return terminal_cost(problem.prior, costs), set()
    return _argmin_set(_stage_values((), 0))


def policy_value(problem: BOProblem, policy) -> float:
    """Exact expected closed-loop cost of a policy by forward enumeration.

    ``policy(belief, stage)`` returns an observation index, or an index
    tuple for a simultaneous (multiagent) stage; joint observations are
    expanded sequentially over their grids and their costs all accrue.
    """
    check_bo_guard(problem)
    model, costs, grids = problem.model, problem.costs, problem.noise_grid

    def expand(belief, indices, pos, k):
        if pos == len(indices):
            return V(belief, k + 1)
        u = indices[pos]
        grid = grid_for(grids, u)
        pred_mean, pred_var = gaussian_predictive(belief, model, u)
        sd = math.sqrt(pred_var)
        total = 0.0
        for xi, p in zip(grid.points, grid.probs):
            nxt = gaussian_update(belief, model, u, pred_mean + sd * xi)
            total += p * expand(nxt, indices, pos + 1, k)
        return total

    def V(belief, k):
        if k == problem.horizon:
            return terminal_cost(belief, costs)
        choice = policy(belief, k)
        indices = tuple(choice) if isinstance(choice, (tuple, list)) else (choice,)
        return float(sum(model.costs[u] for u in indices)) + expand(belief, indices, 0, k)

    return V(problem.prior, 0)


# --- adaptive DP -------------------------------------------------------------


def exact_adaptive_dp(
    system: ParametricSystem, initial_state, form: str = "iterated"
) -> tuple[float, set]:
    """Exact DP value J*_0(x_0, b_0) and the minimizing first controls.

    ``form`` picks the algebraic arrangement of the hypothesis mixture:
    "iterated" sums over hypotheses then disturbances; "direct"
    aggregates probability over distinct next states first. Both are the
    same recursion and must agree to 1e-12.
    """
    if form not in ("iterated", "direct"):
        raise ValueError(f"unknown DP form {form!r}")
    if system.deterministic:
        return _adaptive_dp_deterministic(system, initial_state)
    check_adaptive_guard(system, initial_state)

    def J(x, b: DiscreteBelief, k: int) -> float:
        if k == system.horizon:
            return float(system.final_cost(x))
        return min(_stage_values(x, b, k).values())

    def _stage_values(x, b, k):
        state = BeliefState(x, b)
        values = {}
        for u in system.controls(k, x):
            if form == "iterated":
                q = 0.0
                for i, theta in enumerate(system.hypotheses):
                    bi = float(b.probs[i])
                    if bi == 0.0:
                        continue
                    for w, p in system.disturbances(k, x, theta, u):
                        nxt = system.transition(k, x, theta, u, w)
                        b_next = belief_transition(state, u, nxt, system, k)
                        q += bi * p * (
                            float(system.stage_cost(k, x, theta, u, w)) + J(nxt, b_next, k + 1)
                        )
            else:
                # direct form: expected stage cost, then group by next state
                q = 0.0
                mass: dict = {}
                for i, theta in enumerate(system.hypotheses):
                    bi = float(b.probs[i])
                    if bi == 0.0:
                        continue
                    for w, p in system.disturbances(k, x, theta, u):
                        nxt = system.transition(k, x, theta, u, w)
                        q += bi * p * float(system.stage_cost(k, x, theta, u, w))
                        mass[nxt] = mass.get(nxt, 0.0) + bi * p
                for nxt, p_next in mass.items():
                    b_next = belief_transition(state, u, nxt, system, k)
                    q += p_next * J(nxt, b_next, k + 1)
            values[u] = q
        return values

    if system.horizon == 0:
        return float(system.final_cost(initial_state)), set()
    return _argmin_set(_stage_values(initial_state, system.prior, 0))


def _adaptive_dp_deterministic(system: ParametricSystem, initial_state) -> tuple[float, set]:
    """Deterministic fast path: memoize on (horizon key, state, consistent set).

    The belief after any history is the prior renormalized over the
    consistent hypotheses (likelihoods are 0/1), so (x, S) is a lossless
    information state. Time-invariant systems key on the remaining
    horizon; a declared saturation depth additionally caps that key.
    """
    prior = system.prior.probs
    memo: dict = {}

    def _mass(S):
        return sum(prior[i] for i in S)

    def _key(k, x, S):
        if not system.time_invariant:
            return (k, x, S)
        remaining = system.horizon - k
        if system.saturation_depth is not None:
            remaining = min(remaining, system.saturation_depth(x))
        return (remaining, x, S)

    def J(k: int, x, S: frozenset) -> float:
        if k == system.horizon:
            return float(system.final_cost(x))
        key = _key(k, x, S)
        if key in memo:
            return memo[key]
        v = min(_stage_values(k, x, S).values())
        memo[key] = v
        return v

    def _stage_values(k, x, S):
        total = _mass(S)
        values = {}
        for u in system.controls(k, x):
            groups: dict = {}
            gcost = 0.0
            for i in S:
                theta = system.hypotheses[i]
                w = system.single_disturbance(k, x, theta, u)
                nxt = system.transition(k, x, theta, u, w)
                gcost += prior[i] * float(system.stage_cost(k, x, theta, u, w))
                groups.setdefault(nxt, set()).add(i)
            q = gcost / total
            for nxt, S_next in groups.items():
                q += (_mass(S_next) / total) * J(k + 1, nxt, frozenset(S_next))
            values[u] = q
        return values

    S0 = frozenset(i for i in range(len(prior)) if prior[i] > 0)
    if system.horizon == 0:
        return float(system.final_cost(initial_state)), set()
    return _argmin_set(_stage_values(0, initial_state, S0))


def adaptive_policy_value(system: ParametricSystem, controller, initial_state) -> float:
    """Exact expected closed-loop cost of ``controller(BeliefState, stage)``.

    Forward enumeration over hypothesis/disturbance branches, with the
    belief propagated by belief_transition along each branch.
    """

    def V(x, b: DiscreteBelief, k: int) -> float:
        if k == system.horizon:
            return float(system.final_cost(x))
        state = BeliefState(x, b)
        u = controller(state, k)
        total = 0.0
        # group by next state so shared continuations are evaluated once
        groups: dict = {}
        for i, theta in enumerate(system.hypotheses):
            bi = float(b.probs[i])
            if bi == 0.0:
                continue
            for w, p in system.disturbances(k, x, theta, u):
                nxt = system.transition(k, x, theta, u, w)
                total += bi * p * float(system.stage_cost(k, x, theta, u, w))
                groups[nxt] = groups.get(nxt, 0.0) + bi * p
        for nxt, p_next in groups.items():
            b_next = belief_transition(state, u, nxt, system, k)
            total += p_next * V(nxt, b_next, k + 1)
        return total

    return V(initial_state, system.prior, 0)
