"""Problem containers and the declarative problem-definition files.

Three kinds load from JSON documents (the same files the CLI, the oracle
checks, and the tests use):

* ``"kind": "bo"`` — Gaussian-belief observation-selection problems:
  prior, observation model, terminal cost, horizon, and optional
  standardized innovation grid(s) for exact enumeration.
* ``"kind": "adaptive"`` — finite tabular systems with per-hypothesis
  transition/cost tables.
* ``"kind": "decoding"`` — alphabet/length/rule puzzles, with the
  candidate codes inline, enumerated, or in a newline-delimited file.

Word lists are plain text, one uppercase alphanumeric code per line;
blank lines and ``#`` comments are skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .adaptive import ParametricSystem
from .beliefs import CostSpec, DiscreteBelief, GaussianBelief, ObservationModel
from .decoder import DecodingProblem
from .policies import NoiseGrid

__all__ = [
    "BOProblem",
    "load_problem",
    "load_bo_problem",
    "load_adaptive_problem",
    "load_decoding_problem",
    "load_word_list",
    "ProblemFormatError",
]


class ProblemFormatError(ValueError):
    """A problem-definition document is malformed."""


@dataclass(frozen=True)
class BOProblem:
    """A finite-domain Bayesian-optimization / sequential-estimation problem.

    ``noise_grid`` may be a single NoiseGrid shared by all observation
    indices, a per-index list, or None (continuous noise; exact
    enumeration unavailable).
    """

    prior: GaussianBelief
    model: ObservationModel
    costs: CostSpec
    horizon: int
    noise_grid: object = None
    name: str = ""

    def __post_init__(self):
        if self.prior.dim != self.model.dim:
            raise ValueError("prior and observation model dimensions differ")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    def with_model(self, model: ObservationModel) -> "BOProblem":
        return replace(self, model=model)


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ProblemFormatError(f"{where}: missing field {key!r}")
    return doc[key]


def _parse_grid(node) -> NoiseGrid:
    if isinstance(node, dict) and "gauss_hermite" in node:
        return NoiseGrid.gauss_hermite(int(node["gauss_hermite"]))
    if isinstance(node, dict):
        return NoiseGrid(np.asarray(node["points"], float), np.asarray(node["probs"], float))
    raise ProblemFormatError(f"bad noise grid entry: {node!r}")


def load_bo_problem(doc: dict, name: str = "") -> BOProblem:
    where = name or "bo problem"
    prior = _require(doc, "prior", where)
    try:
        belief = GaussianBelief(
            np.asarray(prior["mean"], float), np.asarray(prior["covariance"], float)
        )
    except (KeyError, ValueError, TypeError) as e:
        raise ProblemFormatError(f"{where}: bad prior ({e})") from e
    obs = _require(doc, "observations", where)
    m = belief.dim
    try:
        if obs.get("directions") in (None, "direct"):
            directions = np.eye(m)
        else:
            directions = np.asarray(obs["directions"], float)
        n_obs = directions.shape[0]
        nv = np.broadcast_to(np.asarray(obs.get("noise_variances", 1.0), float), (n_obs,))
        cc = np.broadcast_to(np.asarray(obs.get("costs", 0.0), float), (n_obs,))
        model = ObservationModel(directions, nv, cc)
    except (ValueError, TypeError) as e:
        raise ProblemFormatError(f"{where}: bad observation model ({e})") from e
    grid_node = doc.get("noise_grid")
    if grid_node is None:
        grid = None
    elif isinstance(grid_node, list):
        grid = [_parse_grid(g) for g in grid_node]
        if len(grid) != model.n_obs:
            raise ProblemFormatError(f"{where}: need one grid per observation index")
    else:
        grid = _parse_grid(grid_node)
    try:
        costs = CostSpec(doc.get("terminal_cost", "trace-covariance"))
        horizon = int(_require(doc, "horizon", where))
        return BOProblem(belief, model, costs, horizon, grid, name=doc.get("name", name))
    except ValueError as e:
        raise ProblemFormatError(f"{where}: {e}") from e


def load_adaptive_problem(doc: dict, name: str = "") -> tuple[ParametricSystem, object]:
    """Build a tabular ParametricSystem; returns (system, initial_state).

    Table layout: ``transitions[hypothesis][state][control]`` is a list of
    branches ``{"next": state, "prob": p, "cost": g, "w": label}``; probs
    must sum to 1 per cell. Controls are listed per state (or under "*");
    their listed order is the canonical tie-break order.
    """
    where = name or "adaptive problem"
    hypotheses = tuple(_require(doc, "hypotheses", where))
    states = tuple(_require(doc, "states", where))
    horizon = int(_require(doc, "horizon", where))
    initial_state = _require(doc, "initial_state", where)
    prior_node = doc.get("prior")
    prior = (
        DiscreteBelief.uniform(len(hypotheses))
        if prior_node is None
        else DiscreteBelief(np.asarray(prior_node, float))
    )
    controls_node = _require(doc, "controls", where)
    transitions = _require(doc, "transitions", where)
    terminal = doc.get("terminal_costs", {})

    table: dict = {}
    deterministic = True
    for h, per_state in transitions.items():
        if h not in hypotheses:
            raise ProblemFormatError(f"{where}: unknown hypothesis {h!r} in transitions")
        for s, per_control in per_state.items():
            if s not in states:
                raise ProblemFormatError(f"{where}: unknown state {s!r} in transitions")
            for u, branches in per_control.items():
                total = 0.0
                cell = []
                for b in branches:
                    nxt = _require(b, "next", f"{where}: branch {h}/{s}/{u}")
                    if nxt not in states:
                        raise ProblemFormatError(f"{where}: unknown next state {nxt!r}")
                    p = float(b.get("prob", 1.0))
                    cell.append((b.get("w", len(cell)), p, nxt, float(b.get("cost", 0.0))))
                    total += p
                if abs(total - 1.0) > 1e-9:
                    raise ProblemFormatError(
                        f"{where}: branch probabilities for {h}/{s}/{u} sum to {total}"
                    )
                if len(cell) > 1:
                    deterministic = False
                table[(h, s, u)] = tuple(cell)

    def controls(k, x):
        node = controls_node.get(x, controls_node.get("*"))
        if not node:
            raise ProblemFormatError(f"{where}: no controls for state {x!r}")
        return tuple(node)

    def _cell(x, theta, u):
        try:
            return table[(theta, x, u)]
        except KeyError:
            raise ProblemFormatError(
                f"{where}: no transition entry for {theta!r}/{x!r}/{u!r}"
            ) from None

    def transition(k, x, theta, u, w):
        for label, _, nxt, _ in _cell(x, theta, u):
            if label == w:
                return nxt
        raise ProblemFormatError(f"{where}: unknown disturbance {w!r} at {theta}/{x}/{u}")

    def disturbances(k, x, theta, u):
        return tuple((label, p) for label, p, _, _ in _cell(x, theta, u))

    def stage_cost(k, x, theta, u, w):
        for label, _, _, cost in _cell(x, theta, u):
            if label == w:
                return cost
        raise ProblemFormatError(f"{where}: unknown disturbance {w!r} at {theta}/{x}/{u}")

    def final_cost(x):
        return float(terminal.get(x, 0.0))

    system = ParametricSystem(
        hypotheses=hypotheses,
        prior=prior,
        horizon=horizon,
        controls=controls,
        transition=transition,
        disturbances=disturbances,
        stage_cost=stage_cost,
        final_cost=final_cost,
        deterministic=deterministic,
        time_invariant=True,
        name=doc.get("name", name),
    )
    return system, initial_state


def load_word_list(path) -> tuple[str, ...]:
    out = []
    for line in Path(path).read_text().splitlines():
        word = line.strip().upper()
        if not word or word.startswith("#"):
            continue
        if not word.isalnum():
            raise ProblemFormatError(f"{path}: bad code {line.strip()!r}")
        out.append(word)
    if not out:
        raise ProblemFormatError(f"{path}: empty word list")
    return tuple(out)


def load_decoding_problem(doc: dict, name: str = "", base_dir: Path | None = None) -> DecodingProblem:
    where = name or "decoding problem"
    rule = doc.get("rule", "mastermind")
    try:
        if "codes" in doc:
            codes = tuple(str(c).upper() for c in doc["codes"])
        elif "words_file" in doc:
            path = Path(doc["words_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            codes = load_word_list(path)
        elif "alphabet" in doc and "length" in doc:
            return DecodingProblem.all_codes(
                str(doc["alphabet"]),
                int(doc["length"]),
                rule=rule,
                guess_mode=doc.get("guess_mode", "hard"),
                prior=tuple(doc["prior"]) if doc.get("prior") else None,
            )
        else:
            raise ProblemFormatError(f"{where}: need codes, words_file, or alphabet+length")
        return DecodingProblem(
            codes,
            rule=rule,
            alphabet=doc.get("alphabet", ""),
            guess_mode=doc.get("guess_mode", "hard"),
            prior=tuple(doc["prior"]) if doc.get("prior") else None,
        )
    except ValueError as e:
        raise ProblemFormatError(f"{where}: {e}") from e


def load_problem(path):
    """Load any problem-definition file; dispatch on its "kind" field."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ProblemFormatError(f"{path}: {e}") from e
    kind = doc.get("kind")
    if kind == "bo":
        return load_bo_problem(doc, name=path.stem)
    if kind == "adaptive":
        return load_adaptive_problem(doc, name=path.stem)
    if kind == "decoding":
        return load_decoding_problem(doc, name=path.stem, base_dir=path.parent)
    raise ProblemFormatError(f"{path}: unknown problem kind {kind!r}")
