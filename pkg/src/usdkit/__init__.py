"""Singular-value analysis of lossy operators for unambiguous state
discrimination and entanglement distillation."""

from .distill import BipartiteState, plan_distillation, schmidt, usd_density_matrix
from .errors import UsdkitError
from .families import (
    apply_degenerate_mixer,
    apply_phase_family,
    degeneracy_structure,
    distillation_family,
    inconclusive_analysis,
)
from .numkernel import gram, hermitian_eig, inverse, psd_sqrt, spectral_norm, svd
from .simulate import dilate, measure_distillation, measure_usd
from .usd import (
    LossyOperator,
    StateSet,
    analyze,
    are_usd_equivalent,
    angle_bounds,
    best_angle,
    min_pairwise_angle,
    optimal_pair,
    population_report,
    synthesize_discriminator,
)

__version__ = "0.1.0"
