"""Numerical laboratory for CHSH correlations: singlet spin algebra, Bell
operators on one and four pairs, and finite-N local hidden-variable ensembles."""

from .eprb import Direction, correlation_E, correlation_observable, embed_left, embed_right, singlet, spin_observable
from .lhv import (
    ChshEstimate,
    Ensemble,
    LhvModel,
    builtin_models,
    convergence_sweep,
    mean_correlation_M,
    sample_ensemble,
    s_strong,
    s_weak_lhv,
)
from .operators import (
    AngleConfig,
    FactorabilityVerdict,
    bell_operator_strong,
    embed_pair_observable,
    four_pair_state,
    generalized_correlation_Ekl,
    pairwise_commutators,
    product_eigenvector_analysis,
    s_weak_quantum,
)
from .optimize import optimize_angles

__version__ = "0.1.0"
