"""Movable-antenna ISAC sum-rate optimization and experiment harness."""

from .driver import AoParams, AoResult, run_ao, run_fpa, run_rpa, sweep_antennas, sweep_power
from .pso import PsoParams
from .rate_model import BeamformingSolution
from .scenario import Scenario, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "AoParams", "AoResult", "BeamformingSolution", "PsoParams", "Scenario",
    "load_scenario", "save_scenario", "run_ao", "run_fpa", "run_rpa",
    "sweep_antennas", "sweep_power", "__version__",
]
