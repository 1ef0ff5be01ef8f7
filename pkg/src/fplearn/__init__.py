"""Fictitious play learning in large populations: agent-based, mean-field and reduced models."""

from .abm import LearningParams, Population, init_population, play_round, run_abm
from .distributions import InitialDistribution
from .game import Game, TieRule, best_response, mixed_ne_2x2, miscoordination_game
from .meanfield import Ensemble, init_ensemble, run_meanfield
from .series import ObservableSeries

__version__ = "0.1.0"

__all__ = [
    "Ensemble",
    "Game",
    "InitialDistribution",
    "LearningParams",
    "ObservableSeries",
    "Population",
    "TieRule",
    "best_response",
    "init_ensemble",
    "init_population",
    "miscoordination_game",
    "mixed_ne_2x2",
    "play_round",
    "run_abm",
    "run_meanfield",
]
