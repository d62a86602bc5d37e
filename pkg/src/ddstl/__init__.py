"""Data-driven control synthesis for signal temporal logic specifications."""
from .behavior import HankelSystem, assemble, build_hankel, check_pe
from .lti import StateSpaceModel, Trajectory, builtin_model, generate_data, simulate
from .scenarios import SCENARIOS, load_scenario
from .stl import StlSyntaxError, monitor, parse
from .synthesis import (SynthesisConfig, SynthesisResult, Satisfied, Violated, compute_L, synthesize,
                        verify_closed_loop)

__version__ = "0.1.0"

__all__ = [
    "HankelSystem", "assemble", "build_hankel", "check_pe", "StateSpaceModel", "Trajectory", "builtin_model",
    "generate_data", "simulate", "SCENARIOS", "load_scenario", "StlSyntaxError", "monitor", "parse",
    "SynthesisConfig", "SynthesisResult", "Satisfied", "Violated", "compute_L", "synthesize", "verify_closed_loop",
]
