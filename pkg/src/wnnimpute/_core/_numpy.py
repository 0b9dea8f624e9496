"""Pure numpy implementation of the batch kernels.

Layout shared with the compiled module:

* ``codes``: ``n x p`` int32, ``-1`` for missing.
* ``rows``/``attrs``: one query per missing cell (query row, target attribute).
* The "sum" kernels return ``S[t, j]``, the normalised weighted mismatch sum
  whose ``1/q``-th power is the distance. Non-candidate rows get ``inf``.
"""
import numpy as np

GAUSSIAN = 0
TRIANGULAR = 1


def catsel_sums(codes, weights, rows, attrs):
    codes = np.asarray(codes)
    n = codes.shape[0]
    m = len(rows)
    obs = codes >= 0
    out = np.full((m, n), np.inf)
    if m == 0:
        return out
    order = np.argsort(rows, kind="stable")
    rows_sorted = rows[order]
    starts = np.flatnonzero(np.r_[True, rows_sorted[1:] != rows_sorted[:-1]])
    bounds = np.r_[starts, m]
    for a, b in zip(bounds[:-1], bounds[1:]):
        idx = order[a:b]
        i = int(rows_sorted[a])
        both = obs & obs[i]
        cnt = both.sum(axis=1)
        mism = (both & (codes != codes[i])).astype(np.float64)
        tgt = attrs[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = 2.0 * (mism @ weights[tgt].T) / cnt[:, None]
        cand = obs[:, tgt] & (cnt > 0)[:, None]
        cand[i, :] = False
        out[idx] = np.where(cand, s, np.inf).T
    return out


def dummy_sums(dummies, col_attr, codes, weights, rows, attrs):
    dummies = np.asarray(dummies, dtype=np.float64)
    codes = np.asarray(codes)
    n = dummies.shape[0]
    m = len(rows)
    obs = codes >= 0
    colobs = obs[:, col_attr]
    out = np.full((m, n), np.inf)
    if m == 0:
        return out
    order = np.argsort(rows, kind="stable")
    rows_sorted = rows[order]
    starts = np.flatnonzero(np.r_[True, rows_sorted[1:] != rows_sorted[:-1]])
    bounds = np.r_[starts, m]
    for a, b in zip(bounds[:-1], bounds[1:]):
        idx = order[a:b]
        i = int(rows_sorted[a])
        cnt = (obs & obs[i]).sum(axis=1)
        diff = np.abs(dummies - dummies[i]) * (colobs & colobs[i])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (diff @ weights[idx].T) / cnt[:, None]
        tgt = attrs[idx]
        cand = obs[:, tgt] & (cnt > 0)[:, None]
        cand[i, :] = False
        out[idx] = np.where(cand, s, np.inf).T
    return out


def kernel_vote(dist, values, cols, n_classes, lam, kernel):
    """Kernel-weighted class frequencies for each query row of ``dist``.

    Neighbour ``j`` of query ``t`` votes for class ``values[j, cols[t]]``.
    Queries with no finite distance get an all-zero row.
    """
    dist = np.asarray(dist, dtype=np.float64)
    m, n = dist.shape
    probs = np.zeros((m, n_classes))
    if m == 0:
        return probs
    finite = np.isfinite(dist)
    has = finite.any(axis=1)
    dmin = np.where(has, np.min(np.where(finite, dist, np.inf), axis=1), 0.0)
    # masked entries take the nearest distance so the shifted exponent stays finite
    u = np.where(finite, dist, dmin[:, None]) / lam
    if kernel == GAUSSIAN:
        umin = dmin / lam
        # shifting by the nearest distance rescales every weight of the query
        # by the same constant, which normalisation removes
        K = np.exp(-0.5 * (u - umin[:, None]) * (u + umin[:, None]))
    else:
        K = np.maximum(0.0, 1.0 - u)
    K = np.where(finite, K, 0.0)
    tot = K.sum(axis=1)
    dead = has & (tot <= 0.0)
    if dead.any():
        K[dead] = (finite[dead] & (dist[dead] == dmin[dead, None])).astype(np.float64)
        tot = K.sum(axis=1)
    W = np.divide(K, tot[:, None], out=np.zeros_like(K), where=tot[:, None] > 0)
    labels = np.asarray(values)[:, cols].T
    for c in range(n_classes):
        probs[:, c] = (W * (labels == c)).sum(axis=1)
    return probs
