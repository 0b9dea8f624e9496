"""The compiled and numpy kernels must agree; the engine must give identical
imputations on either backend."""
import numpy as np
import pytest

from conftest import random_matrix
from wnnimpute import _core
from wnnimpute.association import association_matrix, dummy_pearson_matrix
from wnnimpute.data import encode_dummies
from wnnimpute.imputation import ImputationConfig, impute_matrix
from wnnimpute.neighbors import attribute_weights

needs_cy = pytest.mark.skipif(_core._fast is None, reason="compiled extension not built")


def _queries(Z):
    rows, attrs = np.nonzero(~Z.observed)
    return rows.astype(np.int64), attrs.astype(np.int64)


def test_backend_names():
    assert _core.BACKEND in ("cython", "numpy")
    assert _core.backend_module("numpy") is _core._numpy
    with pytest.raises(ValueError):
        _core.backend_module("fortran")


def test_catsel_sums_match_direct_formula(rng):
    from wnnimpute.neighbors import d_cat_sel
    Z = random_matrix(rng, 15, 5, miss=0.25)
    A = association_matrix(Z)
    W = attribute_weights(A, 2.0)
    rows, attrs = _queries(Z)
    S = _core.catsel_sums(Z.codes, W, rows, attrs, backend="numpy")
    Zd = encode_dummies(Z)
    for t, (i, s) in enumerate(zip(rows, attrs)):
        for j in range(Z.n):
            cand = j != i and Z.observed[j, s] and (Z.observed[i] & Z.observed[j]).any()
            if not cand:
                assert np.isinf(S[t, j])
            else:
                assert S[t, j] == pytest.approx(
                    d_cat_sel(Zd, Z.observed, i, j, s, A, q=1, omega=2.0), rel=1e-12, abs=1e-15)


@needs_cy
@pytest.mark.parametrize("seed", range(5))
def test_sums_backends_agree(seed):
    rng = np.random.default_rng(seed)
    Z = random_matrix(rng, 30, 7, miss=0.3)
    rows, attrs = _queries(Z)
    W = attribute_weights(association_matrix(Z), 1.5)
    a = _core.catsel_sums(Z.codes, W, rows, attrs, backend="numpy")
    b = _core.catsel_sums(Z.codes, W, rows, attrs, backend="cython")
    assert np.array_equal(np.isinf(a), np.isinf(b))
    assert np.allclose(a[np.isfinite(a)], b[np.isfinite(b)], rtol=1e-12, atol=1e-15)

    Zd = encode_dummies(Z)
    R = attribute_weights(dummy_pearson_matrix(Zd, Z.observed), 2.0)
    k = Z.num_categories
    qr, qa = np.repeat(rows, k[attrs]), np.repeat(attrs, k[attrs])
    cols = np.concatenate([Zd.offsets[s] + np.arange(k[s]) for s in attrs])
    a = _core.dummy_sums(Zd.values, Zd.col_attr, Z.codes, R[cols], qr, qa, backend="numpy")
    b = _core.dummy_sums(Zd.values, Zd.col_attr, Z.codes, R[cols], qr, qa, backend="cython")
    assert np.array_equal(np.isinf(a), np.isinf(b))
    assert np.allclose(a[np.isfinite(a)], b[np.isfinite(b)], rtol=1e-12, atol=1e-15)


@needs_cy
@pytest.mark.parametrize("kernel", [_core.GAUSSIAN, _core.TRIANGULAR])
def test_vote_backends_agree(rng, kernel):
    n, m, ncls = 40, 25, 4
    D = rng.uniform(0, 1, size=(m, n))
    D[rng.random((m, n)) < 0.2] = np.inf
    D[3] = np.inf                                  # a query without candidates
    values = rng.integers(0, ncls, size=(n, 3)).astype(np.int32)
    cols = rng.integers(0, 3, size=m)
    for lam in (0.01, 0.3, 5.0):
        a = _core.kernel_vote(D, values, cols, ncls, lam, kernel, backend="numpy")
        b = _core.kernel_vote(D, values, cols, ncls, lam, kernel, backend="cython")
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)
        assert np.all(a[3] == 0)
        assert np.allclose(a[np.arange(m) != 3].sum(axis=1), 1.0)


@needs_cy
@pytest.mark.parametrize("method", ["wnnsel_cat", "wnnsel_dum"])
def test_engine_identical_across_backends(method):
    rng = np.random.default_rng(99)
    Z = random_matrix(rng, 40, 6, miss=0.2)
    cfg = ImputationConfig(method=method, lam=0.2, omega=3.0, q=2, seed=4)
    a = impute_matrix(Z, cfg, backend="numpy")
    b = impute_matrix(Z, cfg, backend="cython")
    assert np.array_equal(a.completed.codes, b.completed.codes)
