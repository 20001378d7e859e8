"""TDS learners for intersections of halfspaces under Gaussian training data."""

from .concepts import (HalfspaceIntersection, check_non_degeneracy, estimate_balance, label,
                       random_balanced_intersection)
from .covers import build_candidate_set, build_sphere_cover, build_threshold_grid
from .errors import (BudgetExceeded, ConfigError, DegenerateInput, EmptyCandidateSet, GenerationFailed,
                     Infeasible, InsufficientData, RegionTooThin, TdsError)
from .gaussian import SeededSampler, gaussian_moment_1d, gaussian_moment_multi, sample_gaussian
from .hard_instances import (Discrete1D, build_hard_instance_1d, build_mass_relocated_1d, discretize_1d,
                             embed_hidden_direction, exact_moment_match_lp, make_scenario)
from .linalg import OrthonormalBasis, orthonormalize
from .retrieval import retrieve_subspace_pca
from .tds import RejectReason, TdsOutcome, TdsParams, tds_learn, tds_learn_general, tds_learn_homogeneous
from .testers import (MomentTestParams, TestVerdict, band_test_general, band_test_homogeneous,
                      discrepancy_test, moment_test, spectral_test)

__version__ = "0.1.0"

__all__ = [
    "HalfspaceIntersection", "label", "estimate_balance", "check_non_degeneracy",
    "random_balanced_intersection", "build_sphere_cover", "build_threshold_grid", "build_candidate_set",
    "TdsError", "DegenerateInput", "InsufficientData", "BudgetExceeded", "RegionTooThin",
    "GenerationFailed", "EmptyCandidateSet", "Infeasible", "ConfigError", "SeededSampler",
    "gaussian_moment_1d", "gaussian_moment_multi", "sample_gaussian", "Discrete1D",
    "build_mass_relocated_1d", "build_hard_instance_1d", "discretize_1d", "exact_moment_match_lp",
    "embed_hidden_direction", "make_scenario", "OrthonormalBasis", "orthonormalize",
    "retrieve_subspace_pca", "TdsParams", "TdsOutcome", "RejectReason", "tds_learn",
    "tds_learn_homogeneous", "tds_learn_general", "MomentTestParams", "TestVerdict", "spectral_test",
    "band_test_homogeneous", "band_test_general", "moment_test", "discrepancy_test",
]
