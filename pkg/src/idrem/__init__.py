"""Identification of time-varying regression parameters.

Piecewise first-order expansion of the parameters on a time grid, interval-reset
exponentially weighted filters, determinant/adjugate mixing, and a switching
estimation law, with excitation checks, error-bound audits and a simulation CLI.
"""
from .bounds import BoundConstants, BoundInputs, compute_constants
from .estimator import Branch, EstimatorGains, EstimatorState, estimator_step, rhs
from .excitation import ExcitationReport, check_fe, gram
from .filters import FilterState, GridCrossingError, filter_reset, filter_step
from .harness import Trace, audit_bounds, preset, run_scenario, sweep, write_csv, read_csv
from .lift import TimeGridConfig, interval_index, lift
from .linalg import NumericalInconsistencyError, adjugate, determinant, mix
from .model import IDREMRegressor
from .pipeline import ConfigurationError, identify
from .signals import Disturbance, Scenario, signal_from_dict

__version__ = "0.1.0"

__all__ = [
    "BoundConstants", "BoundInputs", "Branch", "ConfigurationError", "Disturbance",
    "EstimatorGains", "EstimatorState", "ExcitationReport", "FilterState", "GridCrossingError",
    "IDREMRegressor", "NumericalInconsistencyError", "Scenario", "TimeGridConfig", "Trace",
    "adjugate", "audit_bounds", "check_fe", "compute_constants", "determinant", "estimator_step",
    "filter_reset", "filter_step", "gram", "identify", "interval_index", "lift", "mix", "preset",
    "read_csv", "rhs", "run_scenario", "signal_from_dict", "sweep", "write_csv",
]
