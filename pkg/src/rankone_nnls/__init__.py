"""Sparse nonnegative recovery from rank-one matrix observations.

Library layout:

* ``numerics``     dense complex kernels and the off-diagonal embedding
* ``ensemble``     measurement ensembles, forward/adjoint maps, Phi matrix
* ``solver``       tuning-free NNLS (active set and projected gradient)
* ``certificates`` closed-form recovery-guarantee constant chains
* ``diagnostics``  brute-force and Monte-Carlo verifiers
* ``experiments``  phase transition, noise linearity, covariance matching
* ``cli``          command-line front end
"""

__version__ = "0.1.0"

from .certificates import (
    BoundBreakdown,
    MPlusCertificate,
    NspCertificate,
    cd_constants,
    constant_chain,
    mplus_certificate,
    random_model_bound,
    random_model_constants,
    rip_to_nsp,
    sparsity_threshold,
    deterministic_error_bound,
    weighted_nsp,
)
from .ensemble import (
    MeasurementEnsemble,
    SparseNonnegSignal,
    SubgaussianLaw,
    adjoint,
    build_phi,
    forward,
    load_ensemble,
    sample_ensemble,
    save_ensemble,
)
from .numerics import best_s_term_residual, frobenius_inner, lp_norm, p_vectorize
from .solver import RecoveryReport, SolverConfig, kkt_residual, solve_nnls

__all__ = [
    "__version__",
    "BoundBreakdown",
    "MPlusCertificate",
    "MeasurementEnsemble",
    "NspCertificate",
    "RecoveryReport",
    "SolverConfig",
    "SparseNonnegSignal",
    "SubgaussianLaw",
    "adjoint",
    "best_s_term_residual",
    "build_phi",
    "cd_constants",
    "constant_chain",
    "forward",
    "frobenius_inner",
    "kkt_residual",
    "load_ensemble",
    "lp_norm",
    "mplus_certificate",
    "p_vectorize",
    "random_model_bound",
    "random_model_constants",
    "rip_to_nsp",
    "sample_ensemble",
    "save_ensemble",
    "solve_nnls",
    "sparsity_threshold",
    "deterministic_error_bound",
    "weighted_nsp",
]
