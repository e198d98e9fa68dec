"""Simulation and inverse design of pH-swing semi-batch precipitation."""

from .params import ModelParams, preset
from .psd import Grid
from .simulator import ControlSignal, Ensemble, RunConfig, simulate

__all__ = [
    "ModelParams", "preset", "Grid", "ControlSignal", "Ensemble",
    "RunConfig", "simulate",
]

__version__ = "0.1.0"
