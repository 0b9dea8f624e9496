"""Distances between rows of categorical data and kernel neighbour weights.

Row-pair functions here are the readable reference path; the imputation
engine evaluates the same quantities in batch through :mod:`wnnimpute._core`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import CategoricalMatrix, DummyMatrix
from .errors import NoCandidatesError, NoOverlapError

KERNELS = ("gaussian", "triangular")


def attribute_weights(assoc: np.ndarray, omega: float) -> np.ndarray:
    """Convex transform ``|delta|**omega`` of an association matrix (0**0 == 1)."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    return np.abs(np.asarray(assoc, dtype=np.float64)) ** float(omega)


def smc_distance(Z: CategoricalMatrix, i: int, j: int) -> int:
    """Number of attributes observed in both rows whose values differ."""
    a, b = Z.codes[i], Z.codes[j]
    both = Z.observed[i] & Z.observed[j]
    return int((both & (a != b)).sum())


def _check_q(q):
    if q not in (1, 2):
        raise ValueError(f"Minkowski order q must be 1 or 2, got {q}")


def minkowski_cat(Zd: DummyMatrix, i: int, j: int, q: int = 2,
                  observed: np.ndarray | None = None) -> float:
    """Minkowski distance of order ``q`` between dummy rows.

    Only blocks observed in both rows contribute; when ``observed`` is not
    given it is read off the dummy blocks themselves.
    """
    _check_q(q)
    v = Zd.values
    if observed is None:
        p = len(Zd.offsets) - 1
        observed = np.stack(
            [v[:, Zd.block(s)].sum(axis=1) > 0 for s in range(p)], axis=1
        )
    both = (observed[i] & observed[j])[Zd.col_attr]
    terms = np.abs(v[i] - v[j])[both] ** q
    return float(terms.sum() ** (1.0 / q))


def d_cat_sel(Zd: DummyMatrix, observed: np.ndarray, i: int, j: int, s: int,
              assoc: np.ndarray, q: int = 2, omega: float = 1.0) -> float:
    """Association-weighted selective distance between rows ``i`` and ``j``
    for imputing attribute ``s``.

    Dummy differences of attribute ``l`` are scaled by ``|assoc[s, l]|**omega``
    and the sum is divided by the number of attributes observed in both rows.
    """
    _check_q(q)
    if omega < 0:
        raise ValueError("omega must be >= 0")
    observed = np.asarray(observed, dtype=bool)
    both = observed[i] & observed[j]
    a_ij = int(both.sum())
    if a_ij == 0:
        raise NoOverlapError(f"rows {i} and {j} share no observed attribute")
    w = attribute_weights(assoc[s], omega)
    col_w = (w * both)[Zd.col_attr]
    terms = np.abs(Zd.values[i] - Zd.values[j]) ** q * col_w
    return float((terms.sum() / a_ij) ** (1.0 / q))


def kernel_value(kind: str, u):
    """Unnormalised kernel: Gaussian ``exp(-u^2/2)`` or triangular ``max(0, 1-u)``."""
    u = np.asarray(u, dtype=np.float64)
    if kind == "gaussian":
        out = np.exp(-0.5 * u * u)
    elif kind == "triangular":
        out = np.maximum(0.0, 1.0 - u)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class NeighborWeights:
    neighbor_rows: np.ndarray
    distances: np.ndarray
    weights: np.ndarray


def neighbor_weights(distances: Sequence[tuple[int, float]], lam: float,
                     kind: str = "gaussian") -> NeighborWeights:
    """Normalised kernel weights ``K(d/lam) / sum K(d/lam)``, sorted by distance.

    If every kernel value is zero (triangular kernel, all candidates beyond
    ``lam``) the nearest candidate(s) share the full weight.
    """
    if lam <= 0:
        raise ValueError(f"bandwidth must be > 0, got {lam}")
    if len(distances) == 0:
        raise NoCandidatesError("no candidate neighbours")
    rows = np.array([r for r, _ in distances], dtype=np.int64)
    d = np.array([x for _, x in distances], dtype=np.float64)
    order = np.lexsort((rows, d))
    rows, d = rows[order], d[order]
    u = d / lam
    if kind == "gaussian":
        # constant rescaling by K(u_min)^-1 keeps far candidates from underflowing
        k = np.exp(-0.5 * (u - u[0]) * (u + u[0]))
    else:
        k = kernel_value(kind, u)
    if k.sum() <= 0.0:
        k = (d == d[0]).astype(np.float64)
    return NeighborWeights(rows, d, k / k.sum())
