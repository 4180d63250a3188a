"""Entropy-payoff trade-off toolkit for zero-sum games.

Computes the exact min-entropy curve of a payoff guarantee (and all of
its closed-form and LP bounds), certifies randomness extraction and
source simulation exactly, simulates repeated games played from limited
or leaked randomness, and searches the team secret-correlation value.
"""

__version__ = "0.1.0"

from .game import PayoffMatrix, ProbVector, direct_sum, in_polytope, security_level, validate_game
from .info import JointPmf, conditional_entropy, entropy, renyi_entropy, tv_distance
from .lp import game_value, incentive_value, max_linear_over_polytope
from .minentropy import (
    bounds_report,
    min_entropy,
    payoff_at_entropy,
    payoff_envelope,
    polytope_vertices,
)
from .repeated import RepeatedGameConfig, run, theoretical_maxmin
from .team import TeamGameSpec, team_maxmin_search

__all__ = [
    "PayoffMatrix",
    "ProbVector",
    "JointPmf",
    "RepeatedGameConfig",
    "TeamGameSpec",
    "bounds_report",
    "conditional_entropy",
    "direct_sum",
    "entropy",
    "game_value",
    "in_polytope",
    "incentive_value",
    "max_linear_over_polytope",
    "min_entropy",
    "payoff_at_entropy",
    "payoff_envelope",
    "polytope_vertices",
    "renyi_entropy",
    "run",
    "security_level",
    "team_maxmin_search",
    "theoretical_maxmin",
    "tv_distance",
    "validate_game",
]
