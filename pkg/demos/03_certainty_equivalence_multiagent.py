#!/usr/bin/env python3
"""
Cheaper rollout: certainty equivalence, truncation, multiagent selection
=========================================================================

Exact rollout enumerates a tree that grows with the horizon. Two standard
economies:

* certainty equivalence keeps the first observation stochastic but lands
  every later observation on its predictive mean — one deterministic tail
  per first-stage branch;
* truncation cuts the tail after a few steps and charges the terminal
  cost of the truncation-point belief.

For simultaneous observations, one-agent-at-a-time selection needs
agents x candidates Q-factors instead of candidates^agents.
"""

import time

import numpy as np

from beliefopt import (
    BasePolicy,
    BOProblem,
    CostSpec,
    GaussianBelief,
    NoiseGrid,
    ObservationModel,
    RolloutConfig,
    select_multiagent,
    select_rollout,
)
from beliefopt.oracle import policy_value
from beliefopt.rollout import multiagent_base_choices

prior = GaussianBelief(np.array([0.4, -0.6, 0.2, 0.1]), np.diag([1.4, 1.0, 0.9, 1.2]))
model = ObservationModel.direct(4, noise_variances=[0.4, 0.9, 0.6, 0.5], costs=0.05)
problem = BOProblem(prior, model, CostSpec("min-posterior-mean"), horizon=2,
                    noise_grid=NoiseGrid.gauss_hermite(2))
base = BasePolicy.parse("variance")

for mode in ("exact-enumeration", "certainty-equivalent"):
    cfg = RolloutConfig(horizon=2, mode=mode)
    t0 = time.perf_counter()
    choice, ests = select_rollout(problem.prior, model, problem.costs, base, 0, cfg, problem.noise_grid)
    dt = time.perf_counter() - t0
    values = [round(float(e.value), 5) for e in ests]
    print(f"{mode:>22}: choice {choice}, values {values} ({dt*1e3:.1f} ms)")

# truncated rollout: cut the tail after one base step
cfg = RolloutConfig(horizon=2, truncation_depth=1)
choice, _ = select_rollout(problem.prior, model, problem.costs, base, 0, cfg, problem.noise_grid)
print(f"{'truncated (depth 1)':>22}: choice {choice}")

# two observations per stage, chosen one agent at a time
cfg = RolloutConfig(horizon=2, mode="exact-enumeration")
pair, per_agent = select_multiagent(problem.prior, model, problem.costs, base, 0, cfg, 2, problem.noise_grid)
evals = sum(len(a) for a in per_agent)
print(f"\nmultiagent pair {pair} from {evals} Q-factor evaluations (vs {model.n_obs ** 2} all-at-once)")

def ma_rollout(belief, k):
    c, _ = select_multiagent(belief, model, problem.costs, base, k, cfg, 2, problem.noise_grid)
    return c

def ma_base(belief, k):
    return multiagent_base_choices(belief, model, base, 2)

print(f"exact expected cost: multiagent rollout {policy_value(problem, ma_rollout):.6f}"
      f" <= multiagent base {policy_value(problem, ma_base):.6f}")
