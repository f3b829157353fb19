#!/usr/bin/env python3
"""
Adaptive control with an unknown parameter
==========================================

The plant dynamics depend on a parameter theta that is one of finitely
many hypotheses. Controls both steer the system and reveal information;
the belief over hypotheses updates from each observed transition. The
controller minimizes belief-averaged Q-factors built from per-hypothesis
tail values (known-theta optimal values, or base-policy costs — rollout).
"""

from importlib import resources

from beliefopt.adaptive import (
    base_controller,
    lookahead_controller,
    rollout_controller,
    run_adaptive_episode,
)
from beliefopt.cli import _tabular_base
from beliefopt.oracle import adaptive_policy_value, exact_adaptive_dp
from beliefopt.problems import load_problem

path = resources.files("beliefopt").joinpath("instances", "adaptive_chain.json")
system, x0 = load_problem(path)
print(f"instance {system.name}: {system.n_hypotheses} hypotheses,"
      f" horizon {system.horizon}, start at {x0!r}")

base = _tabular_base(system, "myopic")
controllers = {
    "base (myopic)": base_controller(base),
    "rollout over base": rollout_controller(system, base),
    "lookahead (optimal tails)": lookahead_controller(system),
}

v_star, first = exact_adaptive_dp(system, x0)
print(f"\nexact DP optimum {v_star:.4f}, optimal first controls {sorted(first)}")
for name, controller in controllers.items():
    v = adaptive_policy_value(system, controller, x0)
    print(f"  {name:>26}: exact expected cost {v:.4f}")

print("\nclosed-loop episodes under the rollout controller:")
controller = controllers["rollout over base"]
for truth in range(system.n_hypotheses):
    traj = run_adaptive_episode(system, controller, truth, x0, seed=1)
    ident = traj.identified_at if traj.identified_at is not None else "never"
    print(f"  truth {system.hypotheses[truth]!r}: controls {traj.controls},"
          f" cost {traj.realized_cost:.2f}, identified at stage {ident}")
