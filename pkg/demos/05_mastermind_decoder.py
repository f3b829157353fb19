#!/usr/bin/env python3
"""
Sequential decoding: Mastermind with rollout over simple heuristics
===================================================================

The state is the mystery list of codes consistent with all feedback so
far. A guess costs 1; the episode ends on the correct code. Rollout
scores each candidate guess u by playing a cheap heuristic to completion
against every hypothesis theta in the list and averaging the guess
counts Q(u, theta) — deterministic playouts, no sampling.
"""

import numpy as np

from beliefopt.decoder import (
    DecodingProblem,
    HEURISTICS,
    compute_feedback,
    playout_length,
    rollout_guess,
    rollout_values,
    shrink,
    to_parametric_system,
)
from beliefopt.oracle import exact_adaptive_dp

problem = DecodingProblem.all_codes("012", 3, rule="mastermind")
print(f"Mastermind with {len(problem.codes)} codes over alphabet '012'")

# what rollout thinks of the first guess
top = rollout_values(problem.codes, problem, "first-consistent")[:5]
print("top first guesses by averaged Q-factor (base = first-consistent):")
for guess, q in top:
    print(f"  {guess}: expected {q:.4f} guesses")

# exhaustive self-play over all 27 truths, base vs rollout
print("\nexhaustive averages over all truths:")
for heuristic in HEURISTICS:
    base_counts = [playout_length(problem.codes, t, problem, heuristic) for t in problem.codes]
    cache = {}
    rollout_counts = []
    for truth in problem.codes:
        mystery, n = problem.codes, 0
        while True:
            if mystery not in cache:
                cache[mystery] = rollout_guess(mystery, problem, heuristic)
            guess = cache[mystery]
            n += 1
            if guess == truth:
                break
            mystery = shrink(mystery, guess, compute_feedback(guess, truth, "mastermind"), "mastermind")
        rollout_counts.append(n)
    print(f"  {heuristic:>20}: base {np.mean(base_counts):.4f} -> rollout {np.mean(rollout_counts):.4f}"
          f" (worst case {max(rollout_counts)})")

# the exact optimum for reference (DP over mystery lists)
v_star, _ = exact_adaptive_dp(to_parametric_system(problem), problem.codes)
print(f"\nexact optimal average guesses: {v_star:.4f}")

# a single decode trace
truth = "201"
mystery = problem.codes
print(f"\ndecoding truth {truth} with rollout over max-expected-shrink:")
while True:
    guess = rollout_guess(mystery, problem, "max-expected-shrink")
    fb = compute_feedback(guess, truth, "mastermind")
    print(f"  guess {guess} -> feedback {fb}, list size {len(mystery)}")
    if guess == truth:
        break
    mystery = shrink(mystery, guess, fb, "mastermind")
