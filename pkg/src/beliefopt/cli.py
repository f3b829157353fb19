"""Batch command line: episodes, benchmarks, and oracle cross-checks.

Subcommands

* ``bo-run``: replicated closed-loop episodes on a Gaussian
  observation-selection problem, base policy vs rollout, with exact
  expected-cost cross-checks when the instance is enumerable.
* ``adaptive-run``: closed-loop adaptive-control episodes on a tabular
  finite-hypothesis problem.
* ``decode``: trace one decoding episode against a known truth.
* ``bench``: exhaustive decoder self-play over all truths, base
  heuristics vs rollout.
* ``oracle-check``: run every bundled tiny instance through the exact-DP
  oracle and verify the rollout invariants; nonzero exit on violation.

Every subcommand is a pure function of its flags and input files: no
environment variables, no timestamps, derived seeds only. Results print
as a table on stdout and, with ``--out``, as a JSON document.

Exit codes: 0 ok, 1 invariant violation, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import adaptive as ad
from . import decoder as dec
from . import oracle
from .beliefs import belief_to_text, best_point
from .policies import BasePolicy
from .problems import (
    BOProblem,
    ProblemFormatError,
    load_problem,
    load_word_list,
)
from .rollout import RolloutConfig, run_episode, select_multiagent, select_rollout

__all__ = ["main", "bo_run", "adaptive_run", "decode", "decode_bench", "oracle_check"]

IMPROVE_TOL = 1e-9


def _write_results(out: str | None, doc: dict) -> None:
    if out:
        Path(out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _rollout_config(args, horizon: int) -> RolloutConfig:
    return RolloutConfig(
        horizon=horizon,
        truncation_depth=args.truncate,
        samples_per_candidate=args.samples,
        seed=args.seed,
        common_random_numbers=not args.no_crn,
        prune_limit=args.prune,
        mode=args.mode,
    )


def _add_rollout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, default=None, help="override the problem horizon")
    p.add_argument("--samples", type=int, default=64, help="Monte Carlo samples per candidate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truncate", type=int, default=None, help="truncation depth for rollout tails")
    p.add_argument("--prune", type=int, default=None, help="evaluate only the top-K candidates")
    p.add_argument(
        "--mode",
        default="exact-enumeration",
        choices=["exact-enumeration", "monte-carlo", "certainty-equivalent"],
    )
    p.add_argument("--agents", type=int, default=1, help="simultaneous observations per stage")
    p.add_argument("--no-crn", action="store_true", help="disable common random numbers")
    p.add_argument("--out", default=None, help="write structured JSON results here")
    p.add_argument("--reps", type=int, default=1, help="replication count")


def bo_run(args) -> int:
    problem = load_problem(args.problem)
    if not isinstance(problem, BOProblem):
        raise ProblemFormatError(f"{args.problem}: bo-run needs a 'bo' problem")
    horizon = args.horizon if args.horizon is not None else problem.horizon
    base = BasePolicy.parse(args.base)
    cfg = _rollout_config(args, horizon)
    if args.reps < 1:
        raise ProblemFormatError("--reps must be >= 1")

    rows = []
    for rep in range(args.reps):
        rep_seed = np.random.SeedSequence(args.seed, spawn_key=(rep,))
        truth = np.random.default_rng(rep_seed).multivariate_normal(
            problem.prior.mean, problem.prior.covariance
        )
        rep_cfg = RolloutConfig(
            horizon=cfg.horizon,
            truncation_depth=cfg.truncation_depth,
            samples_per_candidate=cfg.samples_per_candidate,
            seed=args.seed + rep,
            common_random_numbers=cfg.common_random_numbers,
            prune_limit=cfg.prune_limit,
            mode=cfg.mode,
        )
        for controller in ("base", "rollout"):
            ep = run_episode(problem, base, rep_cfg, truth, controller=controller)
            rows.append(
                {
                    "rep": rep,
                    "policy": controller,
                    "cost": ep.realized_cost,
                    "chosen": ep.chosen,
                    "best_point": ep.final_best_point,
                    "final_belief": belief_to_text(ep.beliefs[-1]),
                }
            )

    summary = {}
    for pol in ("base", "rollout"):
        costs = np.array([r["cost"] for r in rows if r["policy"] == pol])
        summary[pol] = {
            "mean_cost": float(costs.mean()),
            "stderr": float(costs.std(ddof=1) / np.sqrt(len(costs))) if len(costs) > 1 else 0.0,
        }

    exact = None
    if cfg.mode == "exact-enumeration" and problem.noise_grid is not None:
        def base_pol(bel, k):
            return base(bel, problem.model, k)

        def rollout_pol(bel, k):
            if args.agents > 1:
                choice, _ = select_multiagent(
                    bel, problem.model, problem.costs, base, k, cfg, args.agents, problem.noise_grid
                )
                return choice
            choice, _ = select_rollout(
                bel, problem.model, problem.costs, base, k, cfg, problem.noise_grid
            )
            return choice

        exact = {
            "base": oracle.policy_value(problem, base_pol),
            "rollout": oracle.policy_value(problem, rollout_pol),
        }

    print(f"bo-run {problem.name or args.problem}  base={base}  mode={cfg.mode}  reps={args.reps}")
    print(f"{'rep':>4} {'policy':>8} {'cost':>14} {'u*':>4}  chosen")
    for r in rows:
        print(f"{r['rep']:>4} {r['policy']:>8} {r['cost']:>14.6f} {r['best_point']:>4}  {r['chosen']}")
    for pol, s in summary.items():
        print(f"{pol:>8}: mean cost {s['mean_cost']:.6f} +/- {s['stderr']:.6f}")
    if exact is not None:
        print(f"exact expected cost: base {exact['base']:.12g}, rollout {exact['rollout']:.12g}")

    _write_results(
        args.out,
        {
            "command": "bo-run",
            "problem": problem.name or str(args.problem),
            "base": str(base),
            "mode": cfg.mode,
            "seed": args.seed,
            "replications": rows,
            "summary": summary,
            "exact_expected_cost": exact,
        },
    )
    return 0


def _tabular_base(system: ad.ParametricSystem, name: str):
    """Named base heuristics for tabular adaptive problems."""
    if name == "first":
        def first(i, k, x):
            return system.controls(k, x)[0]

        return first
    if name == "myopic":
        # prior-weighted one-step cost: a pure function of (stage, state),
        # so the closed-loop base value decomposes over hypotheses and the
        # rollout cost-improvement guarantee applies
        def myopic(i, k, x):
            best_u, best_c = None, None
            for u in system.controls(k, x):
                c = 0.0
                for j, theta in enumerate(system.hypotheses):
                    pj = float(system.prior.probs[j])
                    if pj == 0.0:
                        continue
                    c += pj * sum(
                        p * float(system.stage_cost(k, x, theta, u, w))
                        for w, p in system.disturbances(k, x, theta, u)
                    )
                if best_c is None or c < best_c:
                    best_u, best_c = u, c
            return best_u

        return myopic
    raise ProblemFormatError(f"unknown adaptive base heuristic {name!r}")


def adaptive_run(args) -> int:
    loaded = load_problem(args.problem)
    if not (isinstance(loaded, tuple) and isinstance(loaded[0], ad.ParametricSystem)):
        raise ProblemFormatError(f"{args.problem}: adaptive-run needs an 'adaptive' problem")
    system, x0 = loaded
    base = _tabular_base(system, args.base)
    if args.controller == "rollout":
        controller = ad.rollout_controller(system, base)
    elif args.controller == "lookahead":
        controller = ad.lookahead_controller(system)
    else:
        controller = ad.base_controller(base)

    truths = range(system.n_hypotheses) if args.truth is None else [args.truth]
    rows = []
    for truth in truths:
        for rep in range(args.reps):
            traj = ad.run_adaptive_episode(
                system, controller, truth, x0, seed=args.seed + rep
            )
            rows.append(
                {
                    "truth": truth,
                    "rep": rep,
                    "cost": traj.realized_cost,
                    "controls": [str(u) for u in traj.controls],
                    "identified_at": traj.identified_at,
                }
            )
    costs = np.array([r["cost"] for r in rows])
    expected = oracle.adaptive_policy_value(system, controller, x0)

    print(f"adaptive-run {system.name or args.problem}  controller={args.controller}  base={args.base}")
    print(f"{'truth':>6} {'rep':>4} {'cost':>12} {'identified':>11}  controls")
    for r in rows:
        ident = "-" if r["identified_at"] is None else str(r["identified_at"])
        print(f"{r['truth']:>6} {r['rep']:>4} {r['cost']:>12.6f} {ident:>11}  {' '.join(r['controls'])}")
    print(f"mean realized cost {costs.mean():.6f}; exact expected cost {expected:.12g}")

    _write_results(
        args.out,
        {
            "command": "adaptive-run",
            "problem": system.name or str(args.problem),
            "controller": args.controller,
            "base": args.base,
            "seed": args.seed,
            "episodes": rows,
            "mean_cost": float(costs.mean()),
            "exact_expected_cost": expected,
        },
    )
    return 0


def _decoding_problem(args) -> dec.DecodingProblem:
    if args.problem:
        loaded = load_problem(args.problem)
        if not isinstance(loaded, dec.DecodingProblem):
            raise ProblemFormatError(f"{args.problem}: not a decoding problem")
        return loaded
    if args.words:
        codes = load_word_list(args.words)
        return dec.DecodingProblem(codes, rule=args.rule, guess_mode=args.guess_mode)
    if args.alphabet and args.length:
        return dec.DecodingProblem.all_codes(
            args.alphabet, args.length, rule=args.rule, guess_mode=args.guess_mode
        )
    raise ProblemFormatError("need --problem, --words, or --alphabet with --length")


def decode(args) -> int:
    problem = _decoding_problem(args)
    truth = args.truth.upper()
    if truth not in problem.codes:
        raise ProblemFormatError(f"truth {truth!r} is not in the candidate list")
    mystery = problem.codes
    stages = []
    while True:
        guess = dec.rollout_guess(mystery, problem, args.heuristic, args.prune)
        feedback = dec.compute_feedback(guess, truth, problem.rule)
        stages.append(
            {
                "guess": guess,
                "feedback": dec.format_feedback(feedback, problem.rule),
                "list_size": len(mystery),
            }
        )
        if guess == truth:
            break
        mystery = dec.shrink(mystery, guess, feedback, problem.rule)

    print(f"decode rule={problem.rule} truth={truth} heuristic={args.heuristic}")
    for i, s in enumerate(stages):
        print(f"  guess {i + 1}: {s['guess']}  feedback {s['feedback']}  (list size {s['list_size']})")
    print(f"decoded in {len(stages)} guesses")
    _write_results(
        args.out,
        {
            "command": "decode",
            "rule": problem.rule,
            "truth": truth,
            "heuristic": args.heuristic,
            "stages": stages,
            "guesses": len(stages),
        },
    )
    return 0


def decode_bench(args) -> int:
    problem = _decoding_problem(args)
    heuristics = [args.heuristic] if args.heuristic else list(dec.HEURISTICS)
    table = {}
    for heuristic in heuristics:
        base_counts = [
            dec.playout_length(problem.codes, truth, problem, heuristic)
            for truth in problem.codes
        ]
        cache: dict = {}

        def rollout_for(mystery, heuristic=heuristic):
            if mystery not in cache:
                cache[mystery] = dec.rollout_guess(mystery, problem, heuristic, args.prune)
            return cache[mystery]

        rollout_counts = []
        for truth in problem.codes:
            mystery, n = problem.codes, 0
            while True:
                g = rollout_for(mystery)
                n += 1
                if g == truth:
                    break
                mystery = dec.shrink(
                    mystery, g, dec.compute_feedback(g, truth, problem.rule), problem.rule
                )
            rollout_counts.append(n)
        table[heuristic] = {
            "base_avg": float(np.mean(base_counts)),
            "base_worst": int(np.max(base_counts)),
            "rollout_avg": float(np.mean(rollout_counts)),
            "rollout_worst": int(np.max(rollout_counts)),
            "per_truth": [
                {"truth": t, "base": int(b), "rollout": int(r)}
                for t, b, r in zip(problem.codes, base_counts, rollout_counts)
            ],
        }

    print(f"bench rule={problem.rule} codes={len(problem.codes)} guess_mode={problem.guess_mode}")
    print(f"{'heuristic':>20} {'base avg':>9} {'base max':>9} {'roll avg':>9} {'roll max':>9}")
    violations = 0
    for h, row in table.items():
        print(
            f"{h:>20} {row['base_avg']:>9.4f} {row['base_worst']:>9} "
            f"{row['rollout_avg']:>9.4f} {row['rollout_worst']:>9}"
        )
        if row["rollout_avg"] > row["base_avg"] + IMPROVE_TOL:
            violations += 1
    _write_results(
        args.out,
        {
            "command": "bench",
            "rule": problem.rule,
            "codes": len(problem.codes),
            "guess_mode": problem.guess_mode,
            "prune": args.prune,
            "table": table,
        },
    )
    if violations:
        print(f"FAIL: rollout above base on {violations} heuristic(s)", file=sys.stderr)
        return 1
    return 0


def bundled_instances() -> list:
    """Paths of the tiny instances shipped inside the package."""
    root = resources.files("beliefopt").joinpath("instances")
    return sorted(p for p in root.iterdir() if p.name.endswith(".json"))


def _check_bo_instance(problem: BOProblem, report: list) -> int:
    failures = 0
    v_belief, acts_belief = oracle.exact_dp_value(problem)
    v_info, acts_info = oracle.info_vector_dp_value(problem)
    ok = abs(v_belief - v_info) <= 1e-12
    report.append((f"{problem.name}: DP forms agree ({v_belief:.12g})", ok))
    failures += not ok

    base = BasePolicy.parse("greedy")
    cfg = RolloutConfig(horizon=problem.horizon, mode="exact-enumeration")

    def base_pol(bel, k):
        return base(bel, problem.model, k)

    def rollout_pol(bel, k):
        choice, _ = select_rollout(
            bel, problem.model, problem.costs, base, k, cfg, problem.noise_grid
        )
        return choice

    v_base = oracle.policy_value(problem, base_pol)
    v_roll = oracle.policy_value(problem, rollout_pol)
    ok = v_roll <= v_base + IMPROVE_TOL
    report.append((f"{problem.name}: rollout {v_roll:.9g} <= base {v_base:.9g}", ok))
    failures += not ok

    ok = v_roll >= v_belief - IMPROVE_TOL
    report.append((f"{problem.name}: rollout >= exact DP optimum", ok))
    failures += not ok

    def jstar(bel, k):
        sub = BOProblem(bel, problem.model, problem.costs, problem.horizon - k, problem.noise_grid)
        return oracle.exact_dp_value(sub)[0]

    choice, _ = select_rollout(
        problem.prior, problem.model, problem.costs, base, 0, cfg, problem.noise_grid,
        tail_value=jstar,
    )
    ok = choice in acts_belief
    report.append((f"{problem.name}: rollout with J* tail picks a DP-optimal action", ok))
    failures += not ok
    return failures


def _check_adaptive_instance(system: ad.ParametricSystem, x0, name: str, report: list) -> int:
    failures = 0
    v_it, _ = oracle.exact_adaptive_dp(system, x0, form="iterated")
    v_dir, _ = oracle.exact_adaptive_dp(system, x0, form="direct")
    ok = abs(v_it - v_dir) <= 1e-12
    report.append((f"{name}: adaptive DP forms agree ({v_it:.12g})", ok))
    failures += not ok

    base = _tabular_base(system, "myopic")
    v_base = oracle.adaptive_policy_value(system, ad.base_controller(base), x0)
    v_roll = oracle.adaptive_policy_value(system, ad.rollout_controller(system, base), x0)
    v_look = oracle.adaptive_policy_value(system, ad.lookahead_controller(system), x0)
    for label, v in (("base", v_base), ("rollout", v_roll), ("lookahead", v_look)):
        ok = v >= v_it - IMPROVE_TOL
        report.append((f"{name}: {label} value {v:.9g} >= exact DP {v_it:.9g}", ok))
        failures += not ok
    ok = v_roll <= v_base + IMPROVE_TOL
    report.append((f"{name}: rollout {v_roll:.9g} <= base {v_base:.9g}", ok))
    failures += not ok
    return failures


def oracle_check(args) -> int:
    paths = list(bundled_instances())
    if args.problem:
        paths.extend(Path(p) for p in args.problem)
    report: list[tuple[str, bool]] = []
    failures = 0
    for path in paths:
        with resources.as_file(path) if not isinstance(path, Path) else _nullcontext(path) as p:
            loaded = load_problem(p)
        if isinstance(loaded, BOProblem):
            if loaded.noise_grid is None:
                continue
            failures += _check_bo_instance(loaded, report)
        elif isinstance(loaded, tuple):
            failures += _check_adaptive_instance(loaded[0], loaded[1], loaded[0].name, report)
    for line, ok in report:
        print(f"[{'PASS' if ok else 'FAIL'}] {line}")
    print(f"oracle-check: {len(report) - failures}/{len(report)} checks passed")
    _write_results(
        args.out,
        {
            "command": "oracle-check",
            "checks": [{"check": line, "ok": bool(ok)} for line, ok in report],
            "failures": int(failures),
        },
    )
    return 1 if failures else 0


class _nullcontext:
    def __init__(self, value):
        self.value = value

    def __enter__(self):
        return self.value

    def __exit__(self, *exc):
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefopt",
        description="Rollout-based sequential estimation: episodes, benchmarks, oracle checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bo-run", help="closed-loop Bayesian-optimization episodes")
    p.add_argument("--problem", required=True, help="bo problem-definition JSON")
    p.add_argument("--base", default="posterior-mean-greedy", help="acquisition, e.g. lcb:2.0")
    _add_rollout_flags(p)
    p.set_defaults(func=bo_run)

    p = sub.add_parser("adaptive-run", help="closed-loop adaptive-control episodes")
    p.add_argument("--problem", required=True, help="adaptive problem-definition JSON")
    p.add_argument("--controller", default="rollout", choices=["rollout", "lookahead", "base"])
    p.add_argument("--base", default="myopic", choices=["myopic", "first"])
    p.add_argument("--truth", type=int, default=None, help="hypothesis index (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=adaptive_run)

    for cmd, help_text, fn in (
        ("decode", "trace one decoding episode", decode),
        ("bench", "exhaustive decoder self-play benchmark", decode_bench),
    ):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("--problem", default=None, help="decoding problem-definition JSON")
        p.add_argument("--words", default=None, help="newline-delimited candidate codes")
        p.add_argument("--rule", default="mastermind", choices=["wordle", "mastermind"])
        p.add_argument("--alphabet", default=None)
        p.add_argument("--length", type=int, default=None)
        p.add_argument("--guess-mode", default="hard", choices=["hard", "full"])
        p.add_argument("--prune", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        if cmd == "decode":
            p.add_argument("--truth", required=True, help="the hidden code to decode")
            p.add_argument("--heuristic", default="max-expected-shrink", choices=list(dec.HEURISTICS))
        else:
            p.add_argument("--heuristic", default=None, choices=list(dec.HEURISTICS))
        p.set_defaults(func=fn)

    p = sub.add_parser("oracle-check", help="verify rollout invariants against exact DP")
    p.add_argument("--problem", nargs="*", default=None, help="extra instance files")
    p.add_argument("--out", default=None)
    p.set_defaults(func=oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
