"""Islanded inverter microgrid simulation with Q-omega droop and distributed
secondary frequency/voltage control."""

from mgsim.engine import NumericalAbort, Simulation, run_case
from mgsim.kernel import BACKEND
from mgsim.metrics import compare_cases
from mgsim.scenario import ConfigError, ScenarioConfig, load_scenario

__version__ = "0.1.0"

__all__ = ["Simulation", "NumericalAbort", "run_case", "compare_cases", "load_scenario", "ScenarioConfig",
           "ConfigError", "BACKEND"]
