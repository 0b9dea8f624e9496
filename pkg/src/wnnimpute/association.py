"""Chi-square based association between categorical attributes.

The measures here feed the attribute weights of the selective distance. Pairs
whose contingency table is empty or has a zero margin carry no evidence of
association and map to 0 in :func:`association_matrix`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import CategoricalMatrix, DummyMatrix
from .errors import DegenerateMarginError, EmptyTableError, WrongShapeError

log = logging.getLogger(__name__)

MEASURES = ("cramers_v", "phi", "pcc", "kappa")


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        if counts.ndim != 2:
            raise WrongShapeError(f"contingency table must be 2-D, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("contingency counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def shape(self):
        return self.counts.shape


def _as_table(T) -> ContingencyTable:
    return T if isinstance(T, ContingencyTable) else ContingencyTable(T)


def contingency_table(Z: CategoricalMatrix, s: int, l: int) -> ContingencyTable:
    """Cross-tabulate attributes ``s`` and ``l`` over pairwise-complete rows."""
    if s == l:
        raise ValueError("contingency_table needs two distinct attributes")
    ks, kl = int(Z.num_categories[s]), int(Z.num_categories[l])
    both = Z.observed[:, s] & Z.observed[:, l]
    if not both.any():
        raise EmptyTableError(f"attributes {s} and {l} share no observed rows")
    a = Z.codes[both, s].astype(np.int64) - 1
    b = Z.codes[both, l].astype(np.int64) - 1
    counts = np.bincount(a * kl + b, minlength=ks * kl).reshape(ks, kl)
    return ContingencyTable(counts)


def chi_square(T) -> float:
    T = _as_table(T)
    n = T.total
    if n <= 0:
        raise EmptyTableError("empty contingency table")
    r, c = T.row_totals, T.col_totals
    if (r <= 0).any() or (c <= 0).any():
        raise DegenerateMarginError("contingency table has a zero row or column total")
    expected = np.outer(r, c) / n
    return float(((T.counts - expected) ** 2 / expected).sum())


def phi(T) -> float:
    T = _as_table(T)
    if T.shape != (2, 2):
        raise WrongShapeError(f"phi needs a 2x2 table, got {T.shape}")
    return float(np.sqrt(chi_square(T) / T.total))


def pcc(T) -> float:
    """Pearson's contingency coefficient corrected to reach 1 (square tables)."""
    T = _as_table(T)
    k, k2 = T.shape
    if k != k2:
        raise WrongShapeError(f"pcc needs a square table, got {T.shape}")
    x2 = chi_square(T)
    c = np.sqrt(x2 / (x2 + T.total))
    return float(c / np.sqrt((k - 1) / k))


def cohens_kappa(T) -> float:
    T = _as_table(T)
    k, k2 = T.shape
    if k != k2:
        raise WrongShapeError(f"kappa needs a square table, got {T.shape}")
    n = T.total
    if n <= 0:
        raise EmptyTableError("empty contingency table")
    p0 = np.trace(T.counts) / n
    pe = float(np.dot(T.row_totals, T.col_totals)) / n**2
    if pe >= 1.0:
        raise DegenerateMarginError("kappa undefined: expected agreement is 1")
    return float((p0 - pe) / (1.0 - pe))


def cramers_v(T) -> float:
    """Cramer's V with ``n`` the number of observations in the table."""
    T = _as_table(T)
    ks, kl = T.shape
    m = min(ks - 1, kl - 1)
    if m < 1:
        raise WrongShapeError(f"Cramer's V needs at least 2 rows and columns, got {T.shape}")
    v = np.sqrt(chi_square(T) / T.total / m)
    # chi2/n is bounded by m; guard the last ulp
    return float(min(v, 1.0))


_MEASURE_FN = {"cramers_v": cramers_v, "phi": phi, "pcc": pcc, "kappa": cohens_kappa}


def association_matrix(Z: CategoricalMatrix, measure: str = "cramers_v") -> np.ndarray:
    """Symmetric ``p x p`` association matrix with unit diagonal.

    Degenerate pairs (no shared rows, zero margins) get 0. Shape violations
    of the chosen measure propagate as :class:`WrongShapeError`.
    """
    try:
        fn = _MEASURE_FN[measure]
    except KeyError:
        raise ValueError(f"unknown association measure {measure!r}") from None
    p = Z.p
    out = np.eye(p)
    for s in range(p):
        for l in range(s + 1, p):
            try:
                v = fn(contingency_table(Z, s, l))
            except (EmptyTableError, DegenerateMarginError):
                v = 0.0
            out[s, l] = out[l, s] = v
    return out


def dummy_pearson_matrix(Zd: DummyMatrix, observed: np.ndarray) -> np.ndarray:
    """Pearson correlation between dummy columns over pairwise-complete rows.

    Row ``i`` enters the correlation of columns ``a`` and ``b`` when the
    attributes behind both columns are observed in row ``i``. Columns with zero
    variance on that subset get correlation 0.
    """
    Z = np.asarray(Zd.values, dtype=np.float64)
    O = np.asarray(observed, dtype=np.float64)[:, Zd.col_attr]
    N = O.T @ O                      # pairwise-complete counts
    S = Z.T @ O                      # S[a, b]: sum of column a where b's attribute observed
    P = Z.T @ Z                      # cross products (0/1 so also squares)
    with np.errstate(invalid="ignore", divide="ignore"):
        ma = S / N
        mb = S.T / N
        cov = P / N - ma * mb
        va = S / N - ma**2           # binary: E[z^2] = E[z]
        vb = S.T / N - mb**2
        r = cov / np.sqrt(va * vb)
    tiny = 1e-12
    degenerate = (N == 0) | (va <= tiny) | (vb <= tiny)
    if degenerate.any():
        log.debug("dummy correlation: %d zero-variance pairs set to 0", int(degenerate.sum()))
    r = np.where(degenerate, 0.0, r)
    r = np.clip(r, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    r = 0.5 * (r + r.T)
    return r
