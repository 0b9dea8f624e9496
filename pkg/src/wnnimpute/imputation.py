"""Nearest-neighbour imputation engines and baselines.

``wnnsel_cat``
    Kernel-weighted neighbours under the association-weighted selective
    distance; attribute weights are ``|V_sl|**omega`` with Cramer's V by
    default.
``wnnsel_dum``
    The same weighting scheme on the dummy representation, with Pearson
    correlations between dummy columns as association and one distance per
    target dummy column.
``mode`` / ``knn_cat``
    Column-mode and inverse-distance k-NN baselines.

Every missing cell is imputed from the originally observed data only, so the
result does not depend on the scan order.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _core
from .association import association_matrix, dummy_pearson_matrix
from .data import MISSING, CategoricalMatrix, encode_dummies
from .errors import DegenerateColumnError, MethodNotApplicableError
from .neighbors import KERNELS, attribute_weights

log = logging.getLogger(__name__)

METHODS = ("wnnsel_cat", "wnnsel_dum", "mode", "knn_cat")
KNN_DISTANCES = ("smc", "cohen", "pcc")
TIE_TOL = 1e-12

_KERNEL_CODE = {"gaussian": _core.GAUSSIAN, "triangular": _core.TRIANGULAR}


@dataclass(frozen=True)
class ImputationConfig:
    method: str = "wnnsel_cat"
    kernel: str = "gaussian"
    q: int = 2
    lam: float = 0.5
    omega: float = 2.0
    neighbor_count: Optional[int] = None     # None: every candidate row
    association: str = "cramers_v"
    knn_distance: str = "smc"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.q not in (1, 2):
            raise ValueError(f"q must be 1 or 2, got {self.q}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not self.omega >= 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.neighbor_count is not None and self.neighbor_count < 1:
            raise ValueError("neighbor_count must be >= 1")
        if self.method == "knn_cat" and self.neighbor_count is None:
            raise ValueError("knn_cat needs an explicit neighbor_count")
        if self.knn_distance not in KNN_DISTANCES:
            raise ValueError(f"unknown knn distance {self.knn_distance!r}")
        if self.method == "wnnsel_dum" and (self.kernel != "gaussian" or self.q != 2):
            raise ValueError("wnnsel_dum always uses the Gaussian kernel with q=2")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def tunable(self) -> bool:
        return self.method in ("wnnsel_cat", "wnnsel_dum")

    def label(self) -> str:
        if self.method == "wnnsel_cat":
            return f"wnnsel_cat.{'gauss' if self.kernel == 'gaussian' else 'tri'}.q{self.q}"
        if self.method == "knn_cat":
            return f"knn_cat.{self.knn_distance}.k{self.neighbor_count}"
        return self.method


@dataclass
class Diagnostics:
    fallback_cells: list = field(default_factory=list)
    ties: int = 0
    short_neighborhoods: int = 0

    @property
    def fallbacks(self) -> int:
        return len(self.fallback_cells)


@dataclass(eq=False)
class ImputationResult:
    completed: CategoricalMatrix
    cell_probabilities: dict
    diagnostics: Diagnostics


def cell_rng(seed: int, i: int, s: int) -> np.random.Generator:
    """Tie-break generator for cell ``(i, s)``; independent of scan order."""
    return np.random.default_rng([int(seed), int(i), int(s)])


def _pick(probs: np.ndarray, seed: int, i: int, s: int) -> tuple[int, bool]:
    """0-based argmax with uniform random tie-break."""
    top = np.flatnonzero(probs >= probs.max() - TIE_TOL)
    if len(top) == 1:
        return int(top[0]), False
    return int(cell_rng(seed, i, s).choice(top)), True


def column_modes(Z: CategoricalMatrix, seed: int = 0, strict: bool = False) -> np.ndarray:
    """Most frequent observed code per column; ties broken by ``seed``.

    A column without observed cells raises when ``strict``; otherwise it gets
    the most frequent admissible code of the whole matrix (global mode).
    """
    k = Z.num_categories
    modes = np.full(Z.p, MISSING, dtype=np.int64)
    obs = Z.codes[Z.observed]
    glob = np.bincount(obs, minlength=int(k.max()) + 1) if obs.size else None
    for s in range(Z.p):
        col = Z.codes[Z.observed[:, s], s]
        if col.size == 0:
            if strict:
                raise DegenerateColumnError(f"column {s} has no observed values")
            counts = (glob[1:k[s] + 1] if glob is not None
                      else np.zeros(k[s])).astype(np.float64)
            log.warning("column %d has no observed values; using global mode", s)
        else:
            counts = np.bincount(col, minlength=k[s] + 1)[1:].astype(np.float64)
        top = np.flatnonzero(counts == counts.max())
        choice = top[0] if len(top) == 1 else np.random.default_rng([seed, s]).choice(top)
        modes[s] = int(choice) + 1
    return modes


def _row_chunks(rows: np.ndarray, threads: int) -> list[np.ndarray]:
    """Split query indices (rows sorted ascending) into contiguous chunks that
    never cut a row's queries apart."""
    m = len(rows)
    if threads <= 1 or m == 0:
        return [np.arange(m)]
    starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    groups = np.array_split(np.arange(len(starts)), threads)
    bounds = [starts[g[0]] for g in groups if len(g)] + [m]
    return [np.arange(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def _run_chunked(fn, chunks, threads):
    if len(chunks) == 1:
        return fn(chunks[0])
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(fn, chunks))
    return np.concatenate(parts, axis=0)


class _WnnModel:
    """Shared state for the kernel-weighted engines on one dataset.

    Distance sums depend on ``omega`` only and are cached; bandwidth, kernel,
    ``q`` and neighbour count act at voting time. Cross-validation sweeps the
    bandwidth grid against one cached sum matrix.
    """

    def __init__(self, Z: CategoricalMatrix, threads: int = 1, backend=None):
        self.Z = Z
        self.codes = np.ascontiguousarray(Z.codes, dtype=np.int32)
        self.k = Z.num_categories
        self.kmax = int(self.k.max()) if Z.p else 0
        rows, attrs = np.nonzero(~Z.observed)
        self.rows = rows.astype(np.int64)
        self.attrs = attrs.astype(np.int64)
        self.threads = threads
        self.backend = backend
        self._cache: dict = {}

    @property
    def n_cells(self) -> int:
        return len(self.rows)

    def sums(self, omega: float) -> np.ndarray:
        key = float(omega)
        if key not in self._cache:
            self._cache[key] = self._compute_sums(key)
        return self._cache[key]

    def _distances(self, omega, q, neighbor_count, qrows):
        key = (float(omega), q)
        if key not in self._cache:
            self._cache[key] = np.sqrt(self.sums(omega)) if q == 2 else self.sums(omega)
        D = self._cache[key]
        if neighbor_count is not None and neighbor_count < D.shape[1]:
            D = D.copy()
            order = np.argsort(D, axis=1, kind="stable")[:, neighbor_count:]
            np.put_along_axis(D, order, np.inf, axis=1)
        return D

    def _vote(self, D, values, cols, n_classes, lam, kernel, qrows):
        code = _KERNEL_CODE[kernel]
        chunks = _row_chunks(qrows, self.threads)
        return _run_chunked(
            lambda idx: _core.kernel_vote(D[idx], values, cols[idx], n_classes,
                                          lam, code, backend=self.backend),
            chunks, self.threads)

    def decide(self, probs: np.ndarray, has: np.ndarray, seed: int, fallback_modes):
        """Turn per-cell probability rows into codes; returns (codes, diag)."""
        diag = Diagnostics()
        valid = np.arange(self.kmax)[None, :] < self.k[self.attrs][:, None]
        P = np.where(valid, probs, -np.inf)
        top = P >= P.max(axis=1, keepdims=True) - TIE_TOL
        out = P.argmax(axis=1) + 1
        for t in np.flatnonzero(has & (top.sum(axis=1) > 1)):
            i, s = int(self.rows[t]), int(self.attrs[t])
            out[t] = int(cell_rng(seed, i, s).choice(np.flatnonzero(top[t]))) + 1
            diag.ties += 1
        for t in np.flatnonzero(~has):
            s = int(self.attrs[t])
            out[t] = fallback_modes[s]
            diag.fallback_cells.append((int(self.rows[t]), s))
        return out, diag


class CatModel(_WnnModel):
    def __init__(self, Z, association="cramers_v", threads=1, backend=None, assoc=None):
        super().__init__(Z, threads, backend)
        self.assoc = association_matrix(Z, association) if assoc is None else assoc
        self.labels = np.where(self.codes >= 0, self.codes - 1, -1).astype(np.int32)

    def _compute_sums(self, omega):
        W = attribute_weights(self.assoc, omega)
        chunks = _row_chunks(self.rows, self.threads)
        return _run_chunked(
            lambda idx: _core.catsel_sums(self.codes, W, self.rows[idx], self.attrs[idx],
                                          backend=self.backend),
            chunks, self.threads)

    def probabilities(self, omega, q, lam, kernel="gaussian", neighbor_count=None):
        """Return (probs ``m x kmax``, has_candidates ``m``)."""
        D = self._distances(omega, q, neighbor_count, self.rows)
        has = np.isfinite(D).any(axis=1)
        P = self._vote(D, self.labels, self.attrs, self.kmax, lam, kernel, self.rows)
        return P, has


class DumModel(_WnnModel):
    """Dummy-column engine: one query per (missing cell, category)."""

    def __init__(self, Z, threads=1, backend=None, corr=None):
        super().__init__(Z, threads, backend)
        self.Zd = encode_dummies(Z)
        self.corr = dummy_pearson_matrix(self.Zd, Z.observed) if corr is None else corr
        self.dvalues = np.ascontiguousarray(self.Zd.values, dtype=np.int32)
        ks = self.k[self.attrs]
        self.q_cell = np.repeat(np.arange(self.n_cells), ks)
        self.q_rows = np.repeat(self.rows, ks)
        self.q_attrs = np.repeat(self.attrs, ks)
        within = np.arange(len(self.q_cell)) - np.repeat(np.cumsum(ks) - ks, ks)
        self.q_cat = within
        self.q_cols = (self.Zd.offsets[self.q_attrs] + within).astype(np.int64)

    def _compute_sums(self, omega):
        Wall = attribute_weights(self.corr, omega)
        chunks = _row_chunks(self.q_rows, self.threads)
        return _run_chunked(
            lambda idx: _core.dummy_sums(self.Zd.values, self.Zd.col_attr, self.codes,
                                         Wall[self.q_cols[idx]], self.q_rows[idx],
                                         self.q_attrs[idx], backend=self.backend),
            chunks, self.threads)

    def probabilities(self, omega, q=2, lam=1.0, kernel="gaussian", neighbor_count=None):
        D = self._distances(omega, 2, neighbor_count, self.q_rows)
        qhas = np.isfinite(D).any(axis=1)
        V = self._vote(D, self.dvalues, self.q_cols, 2, lam, "gaussian", self.q_rows)
        pi_hat = V[:, 1]
        P = np.zeros((self.n_cells, self.kmax))
        P[self.q_cell, self.q_cat] = pi_hat
        tot = P.sum(axis=1)
        has = np.zeros(self.n_cells, dtype=bool)
        np.logical_or.at(has, self.q_cell, qhas)
        has &= tot > 0
        P = np.divide(P, tot[:, None], out=np.zeros_like(P), where=tot[:, None] > 0)
        return P, has


def build_model(Z: CategoricalMatrix, config: ImputationConfig, backend=None) -> _WnnModel:
    if config.method == "wnnsel_cat":
        return CatModel(Z, config.association, config.threads, backend)
    if config.method == "wnnsel_dum":
        return DumModel(Z, config.threads, backend)
    raise ValueError(f"{config.method} has no kernel model")


def _assemble(Z, model, codes, probs, diag, k) -> ImputationResult:
    out = np.array(Z.codes, copy=True)
    out[model.rows, model.attrs] = codes
    cellp = {
        (int(i), int(s)): probs[t, :k[s]].copy()
        for t, (i, s) in enumerate(zip(model.rows, model.attrs))
    }
    return ImputationResult(Z.with_codes(out), cellp, diag)


def impute_with_model(model: _WnnModel, config: ImputationConfig,
                      fallback_modes=None) -> ImputationResult:
    Z = model.Z
    if fallback_modes is None:
        fallback_modes = column_modes(Z, config.seed)
    P, has = model.probabilities(config.omega, config.q, config.lam, config.kernel,
                                 config.neighbor_count)
    codes, diag = model.decide(P, has, config.seed, fallback_modes)
    return _assemble(Z, model, codes, P, diag, model.k)


def impute_matrix(Z: CategoricalMatrix, config: ImputationConfig, backend=None) -> ImputationResult:
    """Fill every missing cell of ``Z`` with the configured method."""
    if config.method == "mode":
        return mode_impute(Z, config.seed)
    if config.method == "knn_cat":
        return knn_cat_impute(Z, config.neighbor_count, config.knn_distance, config.seed)
    if Z.n_missing == 0:
        return ImputationResult(Z, {}, Diagnostics())
    model = build_model(Z, config, backend)
    res = impute_with_model(model, config)
    if res.diagnostics.fallbacks:
        log.info("%s: %d cell(s) without candidate neighbours imputed by column mode",
                 config.method, res.diagnostics.fallbacks)
    return res


def impute_cell_wnnsel_cat(Z, i, s, config: ImputationConfig, assoc=None, backend=None):
    """Impute the single cell ``(i, s)``; returns ``(category, probabilities)``."""
    return _impute_cell(Z, i, s, replace(config, method="wnnsel_cat"), assoc, backend)


def impute_cell_wnnsel_dum(Z, i, s, config: ImputationConfig, corr=None, backend=None):
    return _impute_cell(Z, i, s, replace(config, method="wnnsel_dum"), corr, backend)


def _impute_cell(Z, i, s, config, assoc, backend):
    if Z.observed[i, s]:
        raise ValueError(f"cell ({i}, {s}) is observed")
    if config.method == "wnnsel_cat":
        model = CatModel(Z, config.association, 1, backend, assoc=assoc)
    else:
        model = DumModel(Z, 1, backend, corr=assoc)
    t = int(np.flatnonzero((model.rows == i) & (model.attrs == s))[0])
    P, has = model.probabilities(config.omega, config.q, config.lam, config.kernel,
                                 config.neighbor_count)
    k = int(Z.num_categories[s])
    if not has[t]:
        return int(column_modes(Z, config.seed)[s]), np.zeros(k)
    c, _ = _pick(P[t, :k], config.seed, i, s)
    return c + 1, P[t, :k].copy()


# ------------------------------------------------------------------ baselines

def mode_impute(Z: CategoricalMatrix, seed: int = 0) -> ImputationResult:
    modes = column_modes(Z, seed, strict=True)
    out = np.array(Z.codes, copy=True)
    rows, cols = np.nonzero(~Z.observed)
    out[rows, cols] = modes[cols]
    k = Z.num_categories
    probs = {}
    for s in np.unique(cols):
        counts = np.bincount(Z.codes[Z.observed[:, s], s], minlength=k[s] + 1)[1:]
        vec = counts / counts.sum()
        for i in rows[cols == s]:
            probs[(int(i), int(s))] = vec
    return ImputationResult(Z.with_codes(out), probs, Diagnostics())


def _smc_to_all(codes, obs, i):
    both = obs & obs[i]
    return (both & (codes != codes[i])).sum(axis=1), both.sum(axis=1)


def _agreement_distances(codes, obs, i, k, kind):
    """1 - (kappa | PCC) of the paired-value table between row ``i`` and every
    row. Rows whose shared values all agree are at distance 0; other
    degenerate tables are at distance 1."""
    n, p = codes.shape
    both = obs & obs[i]
    cnt = both.sum(axis=1).astype(np.float64)
    oh_i = np.zeros((p, k))
    oi = np.flatnonzero(obs[i])
    oh_i[oi, codes[i, oi] - 1] = 1.0
    oh = np.zeros((n, p, k))
    rr, cc = np.nonzero(obs)
    oh[rr, cc, codes[rr, cc] - 1] = 1.0
    oh *= both[:, :, None]
    T = np.einsum("la,jlb->jab", oh_i, oh)                 # n x k x k tables
    rt, ct = T.sum(axis=2), T.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "cohen":
            p0 = np.trace(T, axis1=1, axis2=2) / cnt
            pe = (rt * ct).sum(axis=1) / cnt**2
            assoc = (p0 - pe) / (1.0 - pe)
            bad = ~(pe < 1.0)
        else:
            E = rt[:, :, None] * ct[:, None, :] / cnt[:, None, None]
            x2 = np.where(E > 0, (T - E) ** 2 / np.where(E > 0, E, 1.0), 0.0).sum(axis=(1, 2))
            bad = ((rt == 0).any(axis=1) | (ct == 0).any(axis=1))
            assoc = np.sqrt(x2 / (x2 + cnt)) / np.sqrt((k - 1) / k)
    agree = np.trace(T, axis1=1, axis2=2) == cnt
    d = np.where(bad, 1.0, 1.0 - assoc)
    d = np.where(agree, 0.0, d)
    return np.maximum(d, 0.0), cnt


def knn_cat_impute(Z: CategoricalMatrix, k: int, distance: str = "smc",
                   seed: int = 0) -> ImputationResult:
    """Inverse-distance weighted k-NN for attributes sharing one category count."""
    kk = Z.num_categories
    if Z.p and (kk != kk[0]).any():
        raise MethodNotApplicableError("knn_cat needs every attribute to have the same number of categories")
    if k < 1:
        raise ValueError("k must be >= 1")
    if distance not in KNN_DISTANCES:
        raise ValueError(f"unknown knn distance {distance!r}")
    codes, obs = Z.codes.astype(np.int64), Z.observed
    modes = column_modes(Z, seed)
    out = np.array(Z.codes, copy=True)
    probs, diag = {}, Diagnostics()
    ncat = int(kk[0]) if Z.p else 0
    for i in np.flatnonzero((~obs).any(axis=1)):
        if distance == "smc":
            d, cnt = _smc_to_all(codes, obs, i)
            d = d.astype(np.float64)
        else:
            d, cnt = _agreement_distances(codes, obs, i, ncat, distance)
        for s in np.flatnonzero(~obs[i]):
            cand = np.flatnonzero(obs[:, s] & (cnt > 0) & (np.arange(Z.n) != i))
            if cand.size == 0:
                out[i, s] = modes[s]
                diag.fallback_cells.append((int(i), int(s)))
                continue
            nearest = cand[np.argsort(d[cand], kind="stable")[:k]]
            dn = d[nearest]
            if (dn == 0).any():
                w = (dn == 0).astype(np.float64)
            else:
                w = 1.0 / dn
            vote = np.bincount(codes[nearest, s] - 1, weights=w, minlength=ncat)
            vote = vote / vote.sum()
            c, tied = _pick(vote, seed, i, s)
            diag.ties += tied
            out[i, s] = c + 1
            probs[(int(i), int(s))] = vote
    return ImputationResult(Z.with_codes(out), probs, diag)


def initial_impute_5nn(Z: CategoricalMatrix, seed: int = 0, k: int = 5) -> CategoricalMatrix:
    """Unweighted ``k``-NN mode imputation under SMC distance."""
    codes, obs = Z.codes.astype(np.int64), Z.observed
    if obs.all():
        return Z
    modes = column_modes(Z, seed)
    out = np.array(Z.codes, copy=True)
    short = 0
    for i in np.flatnonzero((~obs).any(axis=1)):
        d, cnt = _smc_to_all(codes, obs, i)
        for s in np.flatnonzero(~obs[i]):
            cand = np.flatnonzero(obs[:, s] & (cnt > 0) & (np.arange(Z.n) != i))
            if cand.size == 0:
                out[i, s] = modes[s]
                short += 1
                continue
            short += cand.size < k
            nearest = cand[np.argsort(d[cand], kind="stable")[:k]]
            counts = np.bincount(codes[nearest, s] - 1, minlength=int(Z.num_categories[s]))
            c, _ = _pick(counts.astype(np.float64), seed, i, s)
            out[i, s] = c + 1
    if short:
        log.debug("initial 5-NN: %d cell(s) had fewer than %d candidates", short, k)
    return Z.with_codes(out)
