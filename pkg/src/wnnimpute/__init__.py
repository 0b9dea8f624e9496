"""Association-weighted nearest-neighbour imputation for categorical data."""

__version__ = "0.1.0"

from .association import (association_matrix, chi_square, cohens_kappa,
                           contingency_table, cramers_v, dummy_pearson_matrix,
                           pcc, phi)
from .data import (MISSING, AttributeSpec, CategoricalMatrix, DummyMatrix,
                   encode_dummies, missing_mask, read_csv, write_csv)
from .imputation import (ImputationConfig, ImputationResult, impute_matrix,
                         initial_impute_5nn, knn_cat_impute, mode_impute)
from .neighbors import (d_cat_sel, kernel_value, minkowski_cat,
                        neighbor_weights, smc_distance)
from .tuning import CVPlan, CVResult, cross_validate, pfc, tune_and_impute

__all__ = [
    "MISSING", "AttributeSpec", "CategoricalMatrix", "DummyMatrix", "encode_dummies",
    "missing_mask", "read_csv", "write_csv", "association_matrix", "chi_square",
    "cohens_kappa", "contingency_table", "cramers_v", "dummy_pearson_matrix", "pcc",
    "phi", "ImputationConfig", "ImputationResult", "impute_matrix", "initial_impute_5nn",
    "knn_cat_impute", "mode_impute", "d_cat_sel", "kernel_value", "minkowski_cat",
    "neighbor_weights", "smc_distance", "CVPlan", "CVResult", "cross_validate", "pfc",
    "tune_and_impute",
]
