"""Verification harness: power-law fits, regularity estimators and named suites."""

from .estimates import (DIRECTIONS, boundary_decay_fit, decay_profile, default_separations,
                        energy_scaling, fit_window, holder_continuity_check, inward_normal,
                        norm_scaling_suite, scalar_bounds_check, weak_tail_fit)
from .fits import FitResult, fit_power_law
from .regularity import (PropertyHReport, local_boundary_mask, property_bh_estimate,
                         property_h_estimate)
from .report import (CheckResult, EstimateReport, bound_check, failed_check, fit_check, fmt,
                     load_report)
from .suites import SUITE_NAMES, SUITES, SuiteContext, run_suite, suite_members

__all__ = [
    "DIRECTIONS", "boundary_decay_fit", "decay_profile", "default_separations", "energy_scaling",
    "fit_window", "holder_continuity_check", "inward_normal", "norm_scaling_suite",
    "scalar_bounds_check", "weak_tail_fit", "FitResult", "fit_power_law", "PropertyHReport",
    "local_boundary_mask", "property_bh_estimate", "property_h_estimate", "CheckResult",
    "EstimateReport", "bound_check", "failed_check", "fit_check", "fmt", "load_report",
    "SUITE_NAMES", "SUITES", "SuiteContext", "run_suite", "suite_members",
]
