"""Point-interaction spectral toolkit for half-line Sturm-Liouville problems.

Forward direction: first eigenvalues of -y'' + q y = lambda y on [0, inf)
with a Dirichlet condition at 0, unperturbed or carrying an attractive
delta coupling at a movable point.  Inverse direction: reconstruction of q
from samples of the first eigenvalue function lambda(t, r).
"""

from .errors import (
    BracketFailure,
    ConfigError,
    DeltaspecError,
    InconsistentTable,
    NoEigenvalueBelowFloor,
    NonConvergentTruncation,
    OverflowInForbiddenRegion,
    PoleAtLambda,
    PotentialParseError,
    UnsupportedPotentialError,
    WindowEmpty,
)
from .model import (
    HypothesisClass,
    Potential,
    SolverConfig,
    classify,
    parse_potential,
    potential_from_knots,
)
from .propagate import (
    PruferSummary,
    SolutionTrace,
    TwoPieceTrace,
    propagate,
    prufer_count,
    wronskian,
)
from .weyl import WeylEval, m_truncated, psi_weyl, u_of_lambda
from .spectrum import EigenResult, eigen_truncated, essential_floor, first_eigenvalue
from .interaction import (
    PerturbedEigen,
    dlambda_dr_formula,
    lambda_tr,
    matching_residual,
    oracle_fd,
)
from .lctransform import WeightedProblem, transform, weighted_eigen
from .inverse import (
    ReconstructionResult,
    RoundtripReport,
    SampleTable,
    read_sample_table,
    reconstruct,
    roundtrip,
    sample,
    slope_at_zero,
    table_from_entries,
    write_reconstruction,
    write_sample_table,
)
from .estimator import PotentialReconstructor

__version__ = "0.1.0"

__all__ = [
    "BracketFailure", "ConfigError", "DeltaspecError", "InconsistentTable",
    "NoEigenvalueBelowFloor", "NonConvergentTruncation",
    "OverflowInForbiddenRegion", "PoleAtLambda", "PotentialParseError",
    "UnsupportedPotentialError", "WindowEmpty",
    "HypothesisClass", "Potential", "SolverConfig", "classify",
    "parse_potential", "potential_from_knots",
    "PruferSummary", "SolutionTrace", "TwoPieceTrace", "propagate",
    "prufer_count", "wronskian",
    "WeylEval", "m_truncated", "psi_weyl", "u_of_lambda",
    "EigenResult", "eigen_truncated", "essential_floor", "first_eigenvalue",
    "PerturbedEigen", "dlambda_dr_formula", "lambda_tr",
    "matching_residual", "oracle_fd",
    "WeightedProblem", "transform", "weighted_eigen",
    "ReconstructionResult", "RoundtripReport", "SampleTable",
    "read_sample_table", "reconstruct", "roundtrip", "sample",
    "slope_at_zero", "table_from_entries", "write_reconstruction",
    "write_sample_table",
    "PotentialReconstructor",
    "__version__",
]
