"""sparselab: a laboratory for exact sparse recovery with heavy-tailed
measurement matrices.

Sub-exponential i.i.d. entry ensembles, an equality-constrained l1
solver with an independent brute-force oracle, restricted-uniform-
boundedness certificates, epsilon-nets of the sparse sphere, and
seeded Monte Carlo experiments for concentration and phase-transition
behaviour.
"""

__version__ = "0.1.0"

from .ensembles import (EntryDistribution, MeasurementMatrix, SparseSignal,
                        entry_distribution, matrix_from_entries, measure,
                        sample_matrix, sample_sparse_signal)
from .experiments import (ConcentrationReport, PhaseDiagram, ThresholdFit,
                          concentration_experiment, contour_crossings,
                          fit_threshold, phase_diagram, scaling_exponent,
                          std_scaling_check)
from .nets import (EpsilonNet, build_sparse_net, build_support_net,
                   densify_net, verify_covering)
from .rub import (BlockDecomposition, NspResult, RubEstimate, block_decompose,
                  certificate_level, cone_constraint_holds, nsp_oracle,
                  opnorm_l2_to_l1_exact, rub_constants, sphere_min_l1,
                  recovery_certificate)
from .solver import (OracleResult, RecoveryResult, check_exact_recovery,
                     l1_minimize, l1_oracle)

__all__ = [
    "EntryDistribution", "MeasurementMatrix", "SparseSignal",
    "entry_distribution", "matrix_from_entries", "measure", "sample_matrix",
    "sample_sparse_signal",
    "RecoveryResult", "OracleResult", "l1_minimize", "l1_oracle",
    "check_exact_recovery",
    "RubEstimate", "BlockDecomposition", "NspResult", "opnorm_l2_to_l1_exact",
    "sphere_min_l1", "rub_constants", "recovery_certificate",
    "certificate_level", "block_decompose", "cone_constraint_holds",
    "nsp_oracle",
    "EpsilonNet", "build_support_net", "build_sparse_net", "verify_covering",
    "densify_net",
    "ConcentrationReport", "PhaseDiagram", "ThresholdFit",
    "concentration_experiment", "std_scaling_check", "phase_diagram",
    "contour_crossings", "fit_threshold", "scaling_exponent",
]
