"""Algebraic coordinates on barcode space, with image pipelines for classification."""

from .algebra import (
    GeneratorIndex,
    PowerSumIndex,
    basis_monomials,
    check_derivation_condition,
    check_free_generation,
    count_generators_in_degree,
    eval_generator,
    eval_orbit_sum,
    eval_power_sum,
    hilbert_coefficients,
    to_xi_eta,
)
from .features import FeatureMatrix, apply_scale, digit_features, digit_vector, fit_scale, lesion_features
from .filtrations import (
    BinaryImage,
    GrayImage,
    SweepDirection,
    binarize,
    border_distance,
    intensity_filtration,
    slice_filtrations,
    sweep_filtration,
)
from .learn import KernelParams, cross_validate, kernel_eval, loocv, predict, train_svc
from .persistence import (
    Bar,
    Cell,
    FilteredComplex,
    betti_at,
    cap_barcode,
    compute_persistence,
    persistence_pairs,
)

__version__ = "0.1.0"
