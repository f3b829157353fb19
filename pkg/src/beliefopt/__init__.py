"""Rollout and exact-DP engines for belief-state sequential decision problems.

Subpackages cover Gaussian/discrete belief recursion (``beliefs``),
acquisition base policies (``policies``), rollout selection and episodes
(``rollout``), brute-force DP oracles (``oracle``), adaptive control with
finite hypothesis sets (``adaptive``), sequential decoding puzzles
(``decoder``), problem-definition files (``problems``), a batch CLI
(``cli``), and an HTTP decoding-assistant facade (``service``).
"""

from .beliefs import (
    CostSpec,
    DiscreteBelief,
    GaussianBelief,
    ObservationModel,
    best_point,
    discrete_update,
    gaussian_predictive,
    gaussian_update,
    terminal_cost,
)
from .policies import AcquisitionKind, BasePolicy, NoiseGrid
from .problems import BOProblem
from .rollout import QFactorEstimate, RolloutConfig, select_multiagent, select_rollout

__all__ = [
    "CostSpec",
    "DiscreteBelief",
    "GaussianBelief",
    "ObservationModel",
    "best_point",
    "discrete_update",
    "gaussian_predictive",
    "gaussian_update",
    "terminal_cost",
    "AcquisitionKind",
    "BasePolicy",
    "NoiseGrid",
    "BOProblem",
    "QFactorEstimate",
    "RolloutConfig",
    "select_rollout",
    "select_multiagent",
]

__version__ = "0.1.0"
