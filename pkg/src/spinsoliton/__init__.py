"""Asymptotic stability of a rotating charged soliton coupled to the 2D Maxwell field.

Desk-scale numerics: a pseudo-spectral solver for the reduced field + spin
dynamics, Laplace-domain boundary values, the free wave group, threshold
resolvent asymptotics and the experiment runner tying them together.
"""

from .charge import ChargeModel, build_charge, named_charge, reference_charge
from .dynamics import DynamicsConfig, SimState, run
from .experiments import ExperimentConfig, load_config, main
from .fitting import DecayFit, fit_power_law
from .grid import Field, FieldPair, SpectralGrid, make_grid
from .laplace import NuEvaluator, SeparableData, check_nondegeneracy, kappa_line
from .soliton import build_soliton, kappa_zero, limit_frequency

__version__ = "0.1.0"

__all__ = [
    "ChargeModel", "build_charge", "named_charge", "reference_charge",
    "DynamicsConfig", "SimState", "run",
    "ExperimentConfig", "load_config", "main",
    "DecayFit", "fit_power_law",
    "Field", "FieldPair", "SpectralGrid", "make_grid",
    "NuEvaluator", "SeparableData", "check_nondegeneracy", "kappa_line",
    "build_soliton", "kappa_zero", "limit_frequency",
]
