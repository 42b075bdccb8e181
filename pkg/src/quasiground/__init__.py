"""Normalized ground states of a quasilinear Schroedinger energy on the unit-mass sphere."""

__version__ = "0.1.0"

from .asymptotics import (GapRecord, ProbeReport, SweepOptions, SweepRecord, ThresholdOptions,
                          concentration_track, energy_gap, multiplier_track, nonexistence_probe,
                          sweep, threshold_bisect)
from .constants import (GNConstants, ProblemParams, blowup_level, blowup_scale, critical_exponent,
                        energy_asymptote, existence_threshold, gn_constants, lambda_factor, theta)
from .energy import EnergyBreakdown, auxiliary_F, evaluate, gradient, multiplier, trial_family
from .errors import QuasigroundError
from .field import Geometry, GridField
from .minimizer import MinimizationResult, MinimizerOptions, minimize
from .potentials import Potential
from .profile import RadialProfile, critical_profile, gn_equality_ratio, pohozaev_residuals, solve_profile

__all__ = [
    "GapRecord", "ProbeReport", "SweepOptions", "SweepRecord", "ThresholdOptions",
    "concentration_track", "energy_gap", "multiplier_track", "nonexistence_probe", "sweep",
    "threshold_bisect", "GNConstants", "ProblemParams", "blowup_level", "blowup_scale",
    "critical_exponent", "energy_asymptote", "existence_threshold", "gn_constants",
    "lambda_factor", "theta", "EnergyBreakdown", "auxiliary_F", "evaluate", "gradient",
    "multiplier", "trial_family", "QuasigroundError", "Geometry", "GridField",
    "MinimizationResult", "MinimizerOptions", "minimize", "Potential", "RadialProfile",
    "critical_profile", "gn_equality_ratio", "pohozaev_residuals", "solve_profile",
]
