#!/usr/bin/env python3
"""
Rollout versus the myopic acquisition policy
============================================

The base policy picks observation points by maximizing an acquisition
function one step at a time. Rollout evaluates each candidate by playing
the base policy to the end of the horizon and picks the candidate with
the smallest total expected cost. On small discretized instances both
policies can be scored exactly, and rollout is never worse.
"""

import numpy as np

from beliefopt import (
    BasePolicy,
    BOProblem,
    CostSpec,
    GaussianBelief,
    NoiseGrid,
    ObservationModel,
    RolloutConfig,
    select_rollout,
)
from beliefopt.oracle import exact_dp_value, policy_value
from beliefopt.rollout import run_episode

prior = GaussianBelief(
    np.array([0.4, -0.2, 0.1]),
    np.array([[1.2, 0.2, 0.0], [0.2, 0.9, -0.1], [0.0, -0.1, 1.5]]),
)
model = ObservationModel.direct(3, noise_variances=[0.5, 0.8, 0.4])
problem = BOProblem(prior, model, CostSpec("min-posterior-mean"), horizon=3,
                    noise_grid=NoiseGrid.gauss_hermite(3))
base = BasePolicy.parse("greedy")
cfg = RolloutConfig(horizon=3, mode="exact-enumeration")

# Q-factors of every candidate at the root
choice, estimates = select_rollout(
    problem.prior, problem.model, problem.costs, base, 0, cfg, problem.noise_grid
)
print("rollout Q-factors at the root:")
for est in estimates:
    marker = "  <- chosen" if est.candidate == choice else ""
    print(f"  u = {est.candidate}: {est.value:+.6f}{marker}")

# exact closed-loop comparison: optimal <= rollout <= base
def rollout_policy(belief, k):
    u, _ = select_rollout(belief, problem.model, problem.costs, base, k, cfg, problem.noise_grid)
    return u

v_star, optimal_actions = exact_dp_value(problem)
v_base = policy_value(problem, lambda b, k: base(b, problem.model, k))
v_roll = policy_value(problem, rollout_policy)
print(f"\nexact expected costs: optimal {v_star:.6f} <= rollout {v_roll:.6f} <= greedy {v_base:.6f}")
print(f"optimal first actions: {sorted(optimal_actions)}")

# a closed-loop episode against a sampled truth
truth = np.array([0.5, -1.0, 0.3])
episode = run_episode(problem, base, RolloutConfig(horizon=3, seed=7), truth)
print(f"\nepisode vs truth {truth}: chose {episode.chosen},"
      f" final best point {episode.final_best_point}, cost {episode.realized_cost:.4f}")
