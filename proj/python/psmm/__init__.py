"""Sufficient dimension reduction for matrix- and tensor-valued predictors."""

from ._core import (
    PsmmError,
    fit_psmm,
    fit_pstm,
    fit_psvm,
    flipflop_fit,
    gen_model,
    projector_distance,
    reduce,
    select_dimension_bic,
    slice_labels,
    solve_svm_dual,
    subspace_distance,
)

__all__ = [
    "PsmmError",
    "fit_psmm",
    "fit_pstm",
    "fit_psvm",
    "flipflop_fit",
    "gen_model",
    "projector_distance",
    "reduce",
    "select_dimension_bic",
    "slice_labels",
    "solve_svm_dual",
    "subspace_distance",
]
