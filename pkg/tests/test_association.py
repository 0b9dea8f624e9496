import math

import numpy as np
import pytest

import oracles
from wnnimpute.association import (association_matrix, chi_square, cohens_kappa,
                                   contingency_table, cramers_v, dummy_pearson_matrix,
                                   pcc, phi)
from wnnimpute.data import MISSING, CategoricalMatrix, encode_dummies
from wnnimpute.errors import DegenerateMarginError, EmptyTableError, WrongShapeError
from wnnimpute.simulation import discretize, sample_mvn_ar1


def test_contingency_counts():
    Z = CategoricalMatrix.from_codes([[1, 1], [1, 1], [2, 2], [2, 2]])
    assert contingency_table(Z, 0, 1).counts.tolist() == [[2, 0], [0, 2]]


def test_contingency_pairwise_complete():
    Z = CategoricalMatrix.from_codes([[MISSING, 1], [1, 1], [2, 2], [2, 2]], 2)
    assert contingency_table(Z, 0, 1).total == 3


def test_contingency_disjoint_missingness():
    Z = CategoricalMatrix.from_codes([[MISSING, 1], [1, MISSING], [MISSING, 2], [2, MISSING]], 2)
    with pytest.raises(EmptyTableError):
        contingency_table(Z, 0, 1)


def test_chi_square_values():
    assert chi_square([[5, 5], [5, 5]]) == 0.0
    assert chi_square([[10, 0], [0, 10]]) == pytest.approx(20.0, rel=1e-14)
    t = [[8, 2], [3, 7], [5, 5]]
    assert chi_square(t) == pytest.approx(oracles.chi2(t), rel=1e-12)


def test_chi_square_zero_margin():
    with pytest.raises(DegenerateMarginError):
        chi_square([[0, 0], [3, 4]])


def test_cramers_v_extremes():
    assert cramers_v([[10, 0], [0, 10]]) == pytest.approx(1.0)
    assert cramers_v([[5, 5], [5, 5]]) == 0.0


def test_kappa_values():
    assert cohens_kappa([[4, 0, 0], [0, 3, 0], [0, 0, 5]]) == pytest.approx(1.0)
    # p0 = 12/16, pe = (8*8 + 8*8)/256 = 0.5
    assert cohens_kappa([[6, 2], [2, 6]]) == pytest.approx((0.75 - 0.5) / 0.5, rel=1e-14)


def test_kappa_degenerate():
    with pytest.raises(DegenerateMarginError):
        cohens_kappa([[5, 0], [0, 0]])


def test_pcc_correction():
    t = [[6, 1, 1], [1, 5, 2], [0, 2, 7]]
    x2 = oracles.chi2(t)
    c = math.sqrt(x2 / (x2 + 25))
    assert pcc(t) == pytest.approx(c / math.sqrt(2 / 3), rel=1e-12)


def test_shape_errors():
    with pytest.raises(WrongShapeError):
        phi([[1, 2, 3], [3, 2, 1]])
    with pytest.raises(WrongShapeError):
        pcc([[1, 2, 3], [3, 2, 1]])
    with pytest.raises(WrongShapeError):
        cohens_kappa([[1, 2, 3], [3, 2, 1]])


def test_measures_match_oracles_on_random_tables(rng):
    for _ in range(250):
        a, b = rng.integers(2, 6, size=2)
        t = rng.integers(1, 15, size=(a, b)).tolist()
        assert chi_square(t) == pytest.approx(oracles.chi2(t), rel=1e-10)
        assert cramers_v(t) == pytest.approx(oracles.cramers_v(t), rel=1e-10)
        if a == b:
            assert pcc(t) == pytest.approx(oracles.pcc(t), rel=1e-10)
            assert cohens_kappa(t) == pytest.approx(oracles.kappa(t), rel=1e-10, abs=1e-13)
        if a == b == 2:
            assert phi(t) == pytest.approx(oracles.phi(t), rel=1e-10)
            assert cramers_v(t) == pytest.approx(abs(phi(t)), rel=1e-12)


# ------------------------------------------------------------------ matrices

def test_redundant_columns():
    col = [1, 2, 3, 1, 2, 3, 1]
    Z = CategoricalMatrix.from_codes(np.column_stack([col, col]))
    A = association_matrix(Z)
    assert A[0, 1] == pytest.approx(1.0)
    assert np.array_equal(A, A.T)


def test_single_column_matrix():
    Z = CategoricalMatrix.from_codes([[1], [2]])
    assert association_matrix(Z).tolist() == [[1.0]]


def test_independent_columns_weakly_associated():
    X = sample_mvn_ar1(1000, 2, 0.0, 3)
    Z = discretize(X, [[0.5, 0.5], [1 / 3] * 3])
    assert association_matrix(Z)[0, 1] < 0.1


def test_association_matrix_matches_oracle(rng):
    from conftest import random_matrix
    for _ in range(10):
        Z = random_matrix(rng, 20, 5, miss=0.15)
        A = association_matrix(Z)
        O = oracles.association(Z.codes.tolist(), Z.num_categories.tolist())
        assert np.allclose(A, O, rtol=1e-10, atol=1e-14)


def test_dummy_pearson_basics():
    Z = CategoricalMatrix.from_codes([[1, 1], [2, 2], [1, 2], [2, 1], [1, 1]])
    R = dummy_pearson_matrix(encode_dummies(Z), Z.observed)
    assert np.allclose(np.diag(R), 1.0)
    assert R[0, 1] == pytest.approx(-1.0)


def test_dummy_pearson_matches_oracle(rng):
    from conftest import random_matrix
    for _ in range(10):
        Z = random_matrix(rng, 15, 4, miss=0.2)
        R = dummy_pearson_matrix(encode_dummies(Z), Z.observed)
        ks = Z.num_categories.tolist()
        O = oracles.dummy_corr(Z.codes.tolist(), ks)
        cols = [(l, c) for l in range(len(ks)) for c in range(ks[l])]
        for a, ca in enumerate(cols):
            for b, cb in enumerate(cols):
                assert R[a, b] == pytest.approx(O[ca, cb], abs=1e-12)


def test_dummy_pearson_zero_variance_pair():
    # column 0 constant where column 1 is observed
    Z = CategoricalMatrix.from_codes([[1, 1], [1, 2], [2, MISSING], [1, 1]], 2)
    R = dummy_pearson_matrix(encode_dummies(Z), Z.observed)
    assert R[0, 2] == 0.0
