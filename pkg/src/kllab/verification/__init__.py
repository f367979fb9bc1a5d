"""Independent oracles and verification experiments."""

from .brownian import HittingFrequencies, brownian_harmonic_measure
from .closed_form import radial_loewner_closed_form
from .fd import FdSolution, SingularSystem, fd_green, fd_laplace_oracle, fd_period_matrix
from .hadamard import hadamard_ratio_experiment
from .identities import AnalyticMap, minus_three_phi_identity
from .locality import locality_experiment
from .report import Check, ExperimentReport
from .suites import SUITES

__all__ = ["Check", "ExperimentReport", "FdSolution", "HittingFrequencies", "AnalyticMap", "SingularSystem",
           "SUITES", "brownian_harmonic_measure", "fd_green", "fd_laplace_oracle", "fd_period_matrix",
           "hadamard_ratio_experiment", "locality_experiment", "minus_three_phi_identity",
           "radial_loewner_closed_form"]
