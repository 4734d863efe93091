"""Simulator and analytics for a spatial, multi-stop variant of the Kolkata Paise Restaurant game."""
from .analytics import (
    DayStats,
    DegenerateDayError,
    ModelParams,
    Trajectory,
    approx_stats,
    day1_utilization_exact,
    trajectory,
    vacancy_probability,
)
from .game import GameConfig, InvalidConfigError, new_game, play_day, revise, run_game, utilization
from .harness import ExperimentConfig, RunReport, compare, run_monte_carlo
from .spatial import make_partition, sample_uniform_points
from .tsp import TspInstance, Tour, solve_exact, solve_metaheuristic

__version__ = "0.1.0"
