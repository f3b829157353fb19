"""Sequential decoding: guess a hidden code, shrink the consistent list.

The state is the mystery list (candidates consistent with all feedback so
far, kept in the initial-list order). Two feedback rules are implemented
bit-exactly:

* ``wordle``: per-position marks G/Y/-; greens are assigned first and
  consume their truth letters, then yellows are assigned left to right
  against the remaining unmatched truth letters (duplicate guesses beyond
  the remaining count go gray).
* ``mastermind``: black = positional matches, white = multiset
  intersection size minus black.

Guessing costs 1 per guess and ends on the correct code, so the rollout
Q-factor of (guess, hypothesis) is simply the number of guesses the base
heuristic needs to finish from the shrunken list — a deterministic
playout, no sampling.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .adaptive import ParametricSystem
from .beliefs import DiscreteBelief

__all__ = [
    "DecodingProblem",
    "InconsistentFeedbackError",
    "compute_feedback",
    "parse_feedback",
    "format_feedback",
    "is_decoded",
    "shrink",
    "feedback_buckets",
    "heuristic_score",
    "rank_guesses",
    "base_guess",
    "rollout_guess",
    "rollout_values",
    "playout_length",
    "to_parametric_system",
    "SOLVED",
    "HEURISTICS",
]

RULES = ("wordle", "mastermind")
HEURISTICS = ("max-expected-shrink", "max-entropy", "first-consistent")

SOLVED = "<solved>"


class InconsistentFeedbackError(ValueError):
    """Feedback that leaves no candidate code (corrupted input)."""


@dataclass(frozen=True)
class DecodingProblem:
    """Alphabet, candidate codes, feedback rule, guess set, and prior.

    ``guess_mode`` is "hard" (guesses must come from the current mystery
    list) or "full" (any code from the initial list may be guessed).
    ``prior`` is None for uniform, else positive weights over the codes.
    """

    codes: tuple[str, ...]
    rule: str = "mastermind"
    alphabet: str = ""
    guess_mode: str = "hard"
    prior: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown feedback rule {self.rule!r}")
        if self.guess_mode not in ("hard", "full"):
            raise ValueError(f"unknown guess mode {self.guess_mode!r}")
        codes = tuple(self.codes)
        if not codes:
            raise ValueError("candidate list must be nonempty")
        length = len(codes[0])
        alphabet = self.alphabet or "".join(sorted(set("".join(codes))))
        for c in codes:
            if len(c) != length:
                raise ValueError(f"code {c!r} does not have length {length}")
            if any(ch not in alphabet for ch in c):
                raise ValueError(f"code {c!r} uses symbols outside the alphabet")
        if len(set(codes)) != len(codes):
            raise ValueError("candidate list contains duplicates")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "alphabet", alphabet)
        if self.prior is not None:
            pr = tuple(float(p) for p in self.prior)
            if len(pr) != len(codes) or any(p <= 0 for p in pr):
                raise ValueError("prior needs one positive weight per code")
            total = sum(pr)
            object.__setattr__(self, "prior", tuple(p / total for p in pr))

    @property
    def length(self) -> int:
        return len(self.codes[0])

    @classmethod
    def all_codes(cls, alphabet: str, length: int, rule: str = "mastermind", **kw):
        """Every code of the given length over the alphabet, lexicographic."""
        codes = [""]
        for _ in range(length):
            codes = [c + ch for c in codes for ch in alphabet]
        return cls(tuple(codes), rule=rule, alphabet=alphabet, **kw)

    def weight(self, code: str) -> float:
        if self.prior is None:
            return 1.0
        return self.prior[self.codes.index(code)]

    def allowed_guesses(self, mystery: tuple[str, ...]) -> tuple[str, ...]:
        return mystery if self.guess_mode == "hard" else self.codes


def compute_feedback(guess: str, truth: str, rule: str):
    """Deterministic feedback of a guess against a truth code."""
    if len(guess) != len(truth):
        raise ValueError("guess and truth must have equal lengths")
    if rule == "wordle":
        marks = ["-"] * len(guess)
        remaining = Counter()
        for i, (g, t) in enumerate(zip(guess, truth)):
            if g == t:
                marks[i] = "G"
            else:
                remaining[t] += 1
        for i, g in enumerate(guess):
            if marks[i] == "-" and remaining[g] > 0:
                marks[i] = "Y"
                remaining[g] -= 1
        return "".join(marks)
    if rule == "mastermind":
        black = sum(g == t for g, t in zip(guess, truth))
        gc, tc = Counter(guess), Counter(truth)
        overlap = sum(min(gc[ch], tc[ch]) for ch in gc)
        return (black, overlap - black)
    raise ValueError(f"unknown feedback rule {rule!r}")


def is_decoded(feedback, rule: str, length: int) -> bool:
    if rule == "wordle":
        return feedback == "G" * length
    return feedback == (length, 0)


def parse_feedback(text: str, rule: str, length: int):
    """Parse the wire encoding: marks over {G,Y,-} or "black,white" counts."""
    if rule == "wordle":
        marks = text.strip().upper()
        if len(marks) != length or any(ch not in "GY-" for ch in marks):
            raise ValueError(f"wordle feedback must be {length} marks over G/Y/-")
        return marks
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise ValueError("mastermind feedback must be 'black,white'")
    black, white = int(parts[0]), int(parts[1])
    if black < 0 or white < 0 or black + white > length:
        raise ValueError("peg counts out of range")
    return (black, white)


def format_feedback(feedback, rule: str) -> str:
    if rule == "wordle":
        return feedback
    return f"{feedback[0]},{feedback[1]}"


def shrink(mystery: tuple[str, ...], guess: str, feedback, rule: str) -> tuple[str, ...]:
    """Candidates whose feedback against the guess matches; order kept."""
    out = tuple(c for c in mystery if compute_feedback(guess, c, rule) == feedback)
    if not out:
        raise InconsistentFeedbackError(
            f"feedback {format_feedback(feedback, rule)} on {guess!r} eliminates every candidate"
        )
    return out


def feedback_buckets(mystery: tuple[str, ...], guess: str, rule: str) -> dict:
    """Partition of the list by the feedback the guess would receive."""
    buckets: dict = {}
    for c in mystery:
        buckets.setdefault(compute_feedback(guess, c, rule), []).append(c)
    return buckets


def heuristic_score(mystery: tuple[str, ...], guess: str, rule: str, heuristic: str) -> float:
    """Score of a guess under a heuristic; larger is better."""
    if heuristic == "max-expected-shrink":
        sizes = [len(b) for b in feedback_buckets(mystery, guess, rule).values()]
        n = len(mystery)
        return -sum(s * s for s in sizes) / n  # minus expected posterior size
    if heuristic == "max-entropy":
        sizes = [len(b) for b in feedback_buckets(mystery, guess, rule).values()]
        n = len(mystery)
        return -sum((s / n) * math.log(s / n) for s in sizes)
    if heuristic == "first-consistent":
        # rank: list members in list order, then any remaining guesses
        if guess in mystery:
            return float(len(mystery) - mystery.index(guess))
        return 0.0
    raise ValueError(f"unknown heuristic {heuristic!r}")


def rank_guesses(
    mystery: tuple[str, ...], problem: DecodingProblem, heuristic: str, limit: int | None = None
) -> tuple[str, ...]:
    """Allowed guesses ordered best-first by the heuristic, stable ties."""
    allowed = problem.allowed_guesses(mystery)
    scored = sorted(
        range(len(allowed)),
        key=lambda j: (-heuristic_score(mystery, allowed[j], problem.rule, heuristic), j),
    )
    order = tuple(allowed[j] for j in scored)
    return order if limit is None else order[:limit]


def base_guess(mystery: tuple[str, ...], problem: DecodingProblem, heuristic: str) -> str:
    """The heuristic's guess; ties go to the earlier allowed guess."""
    if not mystery:
        raise ValueError("mystery list is empty")
    if len(mystery) == 1:
        return mystery[0]
    if heuristic == "first-consistent":
        return mystery[0]
    return rank_guesses(mystery, problem, heuristic, limit=1)[0]


def playout_length(
    mystery: tuple[str, ...], truth: str, problem: DecodingProblem, heuristic: str
) -> int:
    """Guesses the base heuristic needs to decode `truth` from this list."""
    count = 0
    while True:
        g = base_guess(mystery, problem, heuristic)
        count += 1
        if g == truth:
            return count
        mystery = shrink(mystery, g, compute_feedback(g, truth, problem.rule), problem.rule)


def rollout_values(
    mystery: tuple[str, ...],
    problem: DecodingProblem,
    heuristic: str,
    prune_limit: int | None = None,
) -> list[tuple[str, float]]:
    """Belief-averaged Q-factors of candidate guesses, best first.

    Q(u, theta) = 1 if u == theta, else 1 + base-heuristic guesses from
    the shrunken list; values average Q over the hypotheses in the list
    (uniformly, or by renormalized prior weight). Ordered ascending by
    value with ties in initial-list order.
    """
    if not mystery:
        raise ValueError("mystery list is empty")
    candidates = rank_guesses(mystery, problem, heuristic, prune_limit)
    weights = np.array([problem.weight(c) for c in mystery])
    weights = weights / weights.sum()
    canonical = {c: j for j, c in enumerate(problem.codes)}
    results = []
    for u in candidates:
        value = 0.0
        for theta, w in zip(mystery, weights):
            if u == theta:
                q = 1
            else:
                nxt = shrink(mystery, u, compute_feedback(u, theta, problem.rule), problem.rule)
                q = 1 + playout_length(nxt, theta, problem, heuristic)
            value += w * q
        results.append((u, value))
    results.sort(key=lambda uv: (uv[1], canonical[uv[0]]))
    return results


def rollout_guess(
    mystery: tuple[str, ...],
    problem: DecodingProblem,
    heuristic: str,
    prune_limit: int | None = None,
) -> str:
    """Rollout guess: argmin of the belief-averaged Q-factors."""
    if len(mystery) == 1:
        return mystery[0]
    return rollout_values(mystery, problem, heuristic, prune_limit)[0][0]


def to_parametric_system(problem: DecodingProblem, horizon: int | None = None) -> ParametricSystem:
    """The decoding puzzle as a deterministic finite-hypothesis system.

    States are mystery lists (tuples in canonical order) plus an absorbing
    SOLVED state; controls are the allowed guesses; each guess costs 1
    until solved. The terminal cost penalizes undecoded states so the DP
    never prefers running out the clock; with the default horizon (the
    initial list size) the penalty is unreachable for any sensible policy.
    """
    n = len(problem.codes)
    horizon = n if horizon is None else horizon
    penalty = float(n + 1)
    prior = (
        DiscreteBelief.uniform(n)
        if problem.prior is None
        else DiscreteBelief(np.asarray(problem.prior))
    )

    def controls(k, x):
        if x == SOLVED:
            return ("-",)
        return problem.allowed_guesses(x)

    def transition(k, x, theta, u, w):
        if x == SOLVED:
            return SOLVED
        if u == theta:
            return SOLVED
        return shrink(x, u, compute_feedback(u, theta, problem.rule), problem.rule)

    def disturbances(k, x, theta, u):
        return ((None, 1.0),)

    def stage_cost(k, x, theta, u, w):
        return 0.0 if x == SOLVED else 1.0

    def final_cost(x):
        return 0.0 if x == SOLVED else penalty

    def saturation_depth(x):
        return 0 if x == SOLVED else len(x)

    return ParametricSystem(
        hypotheses=problem.codes,
        prior=prior,
        horizon=horizon,
        controls=controls,
        transition=transition,
        disturbances=disturbances,
        stage_cost=stage_cost,
        final_cost=final_cost,
        deterministic=True,
        time_invariant=True,
        saturation_depth=saturation_depth,
        name=f"decoder-{problem.rule}-{n}",
    )
