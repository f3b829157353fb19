"""Adaptive control with an unknown parameter from a finite hypothesis set.

The plant is x_{k+1} = f_k(x_k, theta, u_k, w_k) with theta fixed but
unknown among finitely many hypotheses. The observable state sequence
drives a discrete belief over the hypotheses; controls are chosen by
one-step lookahead against per-hypothesis tail values (either the exact
known-theta optimal values or the cost-to-go of per-hypothesis base
policies, which makes the scheme a rollout).

Deterministic systems get a dedicated no-sampling Q-factor: propagate the
base policy forward with theta pinned and read off the accumulated cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .beliefs import DiscreteBelief, discrete_update

__all__ = [
    "ParametricSystem",
    "BeliefState",
    "PerParameterValue",
    "belief_transition",
    "per_parameter_optimal",
    "per_parameter_policy_value",
    "lookahead_control",
    "deterministic_q_factor",
    "stochastic_q_factor",
    "lookahead_controller",
    "rollout_controller",
    "base_controller",
    "run_adaptive_episode",
    "AdaptiveTrajectory",
]

Control = Any
State = Any


@dataclass(frozen=True)
class ParametricSystem:
    """Finite-hypothesis controlled system with stage and terminal costs.

    Callables receive the stage index first; states must be hashable and
    comparable by equality. ``disturbances(k, x, theta, u)`` returns
    (w, prob) pairs whose probabilities sum to 1; a single pair means the
    transition is deterministic. ``deterministic`` declares that every
    disturbance support is a single point. ``time_invariant`` declares
    that controls, transitions, and costs do not depend on the stage, and
    ``saturation_depth(x)``, when given for such systems, promises that
    the optimal cost from x is unchanged once the remaining horizon
    reaches that depth (the oracle exploits both for memoization).
    """

    hypotheses: tuple
    prior: DiscreteBelief
    horizon: int
    controls: Callable[[int, State], Sequence[Control]]
    transition: Callable[[int, State, Any, Control, Any], State]
    disturbances: Callable[[int, State, Any, Control], Sequence[tuple[Any, float]]]
    stage_cost: Callable[[int, State, Any, Control, Any], float]
    final_cost: Callable[[State], float]
    deterministic: bool = False
    time_invariant: bool = False
    saturation_depth: Callable[[State], int] | None = None
    name: str = ""

    def __post_init__(self):
        if len(self.hypotheses) != self.prior.n:
            raise ValueError("prior length must match the hypothesis count")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypotheses)

    def single_disturbance(self, k, x, theta, u):
        branches = self.disturbances(k, x, theta, u)
        if len(branches) != 1:
            raise ValueError("system is not deterministic at this transition")
        return branches[0][0]


@dataclass(frozen=True)
class BeliefState:
    x: State
    b: DiscreteBelief


def belief_transition(
    state: BeliefState, u: Control, x_next: State, system: ParametricSystem, stage: int
) -> DiscreteBelief:
    """Posterior over hypotheses after observing the realized next state.

    Likelihoods are P(x_next | x, theta_i, u) read off the disturbance
    model; deterministic systems give 0/1 likelihoods, i.e. hypothesis
    elimination. Raises InconsistentObservationError when x_next is
    impossible under every hypothesis.
    """
    lik = np.zeros(system.n_hypotheses)
    for i, theta in enumerate(system.hypotheses):
        if state.b.probs[i] == 0.0:
            continue
        for w, p in system.disturbances(stage, state.x, theta, u):
            if system.transition(stage, state.x, theta, u, w) == x_next:
                lik[i] += p
    return discrete_update(state.b, lik)


class PerParameterValue:
    """Tail values J-hat^i_k(x), one evaluator per hypothesis.

    Evaluators are memoized callables (stage, x) -> float. The same
    evaluator may back every hypothesis (the shared-value variant).
    """

    def __init__(self, evaluators: dict[int, Callable[[int, State], float]]):
        self._evaluators = dict(evaluators)

    def value(self, i: int, stage: int, x: State) -> float:
        return self._evaluators[i](stage, x)

    @classmethod
    def optimal(cls, system: ParametricSystem) -> "PerParameterValue":
        return cls({i: per_parameter_optimal(system, i) for i in range(system.n_hypotheses)})

    @classmethod
    def from_base(cls, system: ParametricSystem, base) -> "PerParameterValue":
        return cls(
            {i: per_parameter_policy_value(system, i, base) for i in range(system.n_hypotheses)}
        )

    @classmethod
    def shared(cls, system: ParametricSystem, evaluator) -> "PerParameterValue":
        return cls({i: evaluator for i in range(system.n_hypotheses)})


def per_parameter_optimal(system: ParametricSystem, i: int):
    """Exact DP values of the perfect-information problem with theta_i known.

    Returns a memoized callable (stage, x) -> optimal cost-to-go.
    """
    theta = system.hypotheses[i]
    cache: dict = {}

    def value(stage: int, x: State) -> float:
        key = (stage, x)
        if key in cache:
            return cache[key]
        if stage >= system.horizon:
            v = float(system.final_cost(x))
        else:
            best = None
            for u in system.controls(stage, x):
                q = 0.0
                for w, p in system.disturbances(stage, x, theta, u):
                    nxt = system.transition(stage, x, theta, u, w)
                    q += p * (system.stage_cost(stage, x, theta, u, w) + value(stage + 1, nxt))
                if best is None or q < best:
                    best = q
            if best is None:
                raise ValueError(f"empty control set at stage {stage}")
            v = best
        cache[key] = v
        return v

    return value


def per_parameter_policy_value(system: ParametricSystem, i: int, base):
    """Cost-to-go of the base policy pi^i under theta pinned at theta_i.

    ``base(i, stage, x)`` gives the policy's control. Returns a memoized
    callable (stage, x) -> float; expectations over disturbances are
    exact (finite support).
    """
    theta = system.hypotheses[i]
    cache: dict = {}

    def value(stage: int, x: State) -> float:
        key = (stage, x)
        if key in cache:
            return cache[key]
        if stage >= system.horizon:
            v = float(system.final_cost(x))
        else:
            u = base(i, stage, x)
            v = 0.0
            for w, p in system.disturbances(stage, x, theta, u):
                nxt = system.transition(stage, x, theta, u, w)
                v += p * (system.stage_cost(stage, x, theta, u, w) + value(stage + 1, nxt))
        cache[key] = v
        return v

    return value


def lookahead_control(
    state: BeliefState, stage: int, values: PerParameterValue, system: ParametricSystem
) -> Control:
    """One-step lookahead against the per-hypothesis tail values.

    Minimizes sum_i b_i E_w[ g_k(x, theta_i, u, w) +
    J-hat^i_{k+1}(f_k(x, theta_i, u, w)) ] over the canonical control
    order; the first control attaining the minimum wins.
    """
    controls = list(system.controls(stage, state.x))
    if not controls:
        raise ValueError(f"empty control set at stage {stage}")
    best_u, best_q = None, None
    for u in controls:
        q = 0.0
        for i, theta in enumerate(system.hypotheses):
            bi = float(state.b.probs[i])
            if bi == 0.0:
                continue
            for w, p in system.disturbances(stage, state.x, theta, u):
                nxt = system.transition(stage, state.x, theta, u, w)
                q += bi * p * (
                    system.stage_cost(stage, state.x, theta, u, w)
                    + values.value(i, stage + 1, nxt)
                )
        if best_q is None or q < best_q:
            best_u, best_q = u, q
    return best_u


def deterministic_q_factor(
    state: BeliefState, u: Control, i: int, stage: int, base, system: ParametricSystem
) -> float:
    """Q_k(u, theta_i) for a deterministic system: apply u, then follow pi^i.

    Pure forward propagation with theta pinned at theta_i until the end of
    the horizon; no sampling anywhere.
    """
    if not system.deterministic:
        raise ValueError("deterministic_q_factor requires a deterministic system")
    theta = system.hypotheses[i]
    w = system.single_disturbance(stage, state.x, theta, u)
    total = float(system.stage_cost(stage, state.x, theta, u, w))
    x = system.transition(stage, state.x, theta, u, w)
    for k in range(stage + 1, system.horizon):
        uk = base(i, k, x)
        wk = system.single_disturbance(k, x, theta, uk)
        total += float(system.stage_cost(k, x, theta, uk, wk))
        x = system.transition(k, x, theta, uk, wk)
    return total + float(system.final_cost(x))


def stochastic_q_factor(
    state: BeliefState,
    u: Control,
    i: int,
    w,
    stage: int,
    base,
    system: ParametricSystem,
    mode: str = "exact-enumeration",
    samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Q_k(u, theta_i, w): first transition under (u, theta_i, w) plus the
    base-policy cost-to-go with theta pinned at theta_i.

    The tail is evaluated exactly (enumeration over future disturbances),
    by Monte Carlo, or by certainty equivalence (each future disturbance
    replaced by its representative: the support mean for numeric supports,
    else the most probable outcome).
    """
    theta = system.hypotheses[i]
    first = float(system.stage_cost(stage, state.x, theta, u, w))
    x_next = system.transition(stage, state.x, theta, u, w)
    if mode == "exact-enumeration":
        tail = per_parameter_policy_value(system, i, base)(stage + 1, x_next)
    elif mode == "certainty-equivalent":
        tail = _ce_tail(system, theta, i, base, stage + 1, x_next)
    elif mode == "monte-carlo":
        if not samples or rng is None:
            raise ValueError("monte-carlo mode needs samples >= 1 and an rng")
        total = 0.0
        for _ in range(samples):
            total += _sampled_tail(system, theta, i, base, stage + 1, x_next, rng)
        tail = total / samples
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return first + tail


def _representative(branches):
    values = [w for w, _ in branches]
    probs = [p for _, p in branches]
    if all(isinstance(w, (int, float, np.integer, np.floating)) for w in values):
        return float(np.dot(values, probs))
    return values[int(np.argmax(probs))]


def _ce_tail(system, theta, i, base, stage, x):
    total = 0.0
    for k in range(stage, system.horizon):
        u = base(i, k, x)
        w = _representative(system.disturbances(k, x, theta, u))
        total += float(system.stage_cost(k, x, theta, u, w))
        x = system.transition(k, x, theta, u, w)
    return total + float(system.final_cost(x))


def _sample_branch(branches, rng):
    probs = np.array([p for _, p in branches])
    idx = rng.choice(len(branches), p=probs / probs.sum())
    return branches[idx][0]


def _sampled_tail(system, theta, i, base, stage, x, rng):
    total = 0.0
    for k in range(stage, system.horizon):
        u = base(i, k, x)
        w = _sample_branch(system.disturbances(k, x, theta, u), rng)
        total += float(system.stage_cost(k, x, theta, u, w))
        x = system.transition(k, x, theta, u, w)
    return total + float(system.final_cost(x))


# --- closed-loop controllers and the episode harness -----------------------


def lookahead_controller(system: ParametricSystem, values: PerParameterValue | None = None):
    """Controller applying one-step lookahead with known-theta optimal tails."""
    vals = values if values is not None else PerParameterValue.optimal(system)

    def controller(state: BeliefState, stage: int) -> Control:
        return lookahead_control(state, stage, vals, system)

    return controller


def rollout_controller(system: ParametricSystem, base):
    """Controller applying one-step lookahead with base-policy tails.

    This is the adaptive rollout: per-hypothesis Q-factors of the base
    policies, averaged under the current belief, minimized over controls.
    """
    vals = PerParameterValue.from_base(system, base)

    def controller(state: BeliefState, stage: int) -> Control:
        return lookahead_control(state, stage, vals, system)

    return controller


def base_controller(base):
    """Closed-loop base policy: follow pi^i for the MAP hypothesis.

    Ties in the belief go to the lowest hypothesis index.
    """

    def controller(state: BeliefState, stage: int) -> Control:
        i_map = int(np.argmax(state.b.probs))
        return base(i_map, stage, state.x)

    return controller


@dataclass
class AdaptiveTrajectory:
    states: list
    controls: list
    beliefs: list[DiscreteBelief]
    realized_cost: float
    identified_at: int | None  # first stage with belief mass ~1 on the truth


def run_adaptive_episode(
    system: ParametricSystem,
    controller,
    truth: int,
    initial_state: State,
    seed: int = 0,
) -> AdaptiveTrajectory:
    """Simulate the closed loop with theta fixed at hypothesis `truth`.

    The belief is tracked by belief_transition; the trajectory records
    when (if ever) the belief concentrates on the truth.
    """
    if not 0 <= truth < system.n_hypotheses:
        raise ValueError(f"truth index {truth} out of range")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    theta = system.hypotheses[truth]
    state = BeliefState(initial_state, system.prior)
    states, controls, beliefs = [state.x], [], [state.b]
    cost = 0.0
    identified_at = 0 if state.b.probs[truth] >= 1.0 - 1e-12 else None
    for k in range(system.horizon):
        u = controller(state, k)
        w = _sample_branch(system.disturbances(k, state.x, theta, u), rng)
        cost += float(system.stage_cost(k, state.x, theta, u, w))
        x_next = system.transition(k, state.x, theta, u, w)
        b_next = belief_transition(state, u, x_next, system, k)
        state = BeliefState(x_next, b_next)
        states.append(x_next)
        controls.append(u)
        beliefs.append(b_next)
        if identified_at is None and b_next.probs[truth] >= 1.0 - 1e-12:
            identified_at = k + 1
    cost += float(system.final_cost(state.x))
    return AdaptiveTrajectory(states, controls, beliefs, cost, identified_at)
