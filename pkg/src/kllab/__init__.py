"""Numerical laboratory for radial Loewner growth in circularly slit disks."""

__version__ = "0.1.0"

from .canonical import CanonicalMap, canonical_map, conformal_radius_at
from .domain import DISK, Hull, Moduli, StandardDomain, random_moduli, validate_moduli
from .errors import (BranchFailure, ConvergenceError, DegeneratePeriodsError, DomainError,
                     IncrementUnderflow, InsufficientPaths, KllabError, LeftDomainError,
                     PoleCollisionError, PoleProximityError, StepCollapse, StepRejected,
                     TraceUnresolved)
from .kernel import (DomainFunctionSet, PsiEvaluator, build_domain_functions, conformal_radius,
                     domain_constant, drift_coefficient, green, harmonic_measure, period_matrix,
                     psi_field, solve_psi)
from .loewner import (ChainConfig, LoewnerChain, advance_chain, flow_point, increment_check,
                      moduli_rhs, run_chain, trace, trace_point)
from .sle import SdeConfig, SlePath, run_batch, run_sle, sample_driver_step

__all__ = [
    "BranchFailure", "CanonicalMap", "ChainConfig", "ConvergenceError", "DISK", "DegeneratePeriodsError",
    "DomainError", "DomainFunctionSet", "Hull", "IncrementUnderflow", "InsufficientPaths", "KllabError",
    "LeftDomainError", "LoewnerChain", "Moduli", "PoleCollisionError", "PoleProximityError", "PsiEvaluator",
    "SdeConfig", "SlePath", "StandardDomain", "StepCollapse", "StepRejected", "TraceUnresolved",
    "advance_chain", "build_domain_functions", "canonical_map", "conformal_radius", "conformal_radius_at",
    "domain_constant", "drift_coefficient", "flow_point", "green", "harmonic_measure", "increment_check",
    "moduli_rhs", "period_matrix", "psi_field", "random_moduli", "run_batch", "run_chain", "run_sle",
    "sample_driver_step", "solve_psi", "trace", "trace_point", "validate_moduli",
]
