"""Cross-validated choice of bandwidth and weight power.

Known cells are hidden repeatedly, imputed for every grid pair and scored by
the proportion of falsely imputed categories (PFC). The pair with the lowest
average PFC wins; ties go to the smaller ``omega`` and then the smaller
``lambda``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import MISSING, CategoricalMatrix
from .errors import PlanInfeasibleError, UndefinedMetricError
from .imputation import (ImputationConfig, build_model, column_modes,
                         impute_matrix, initial_impute_5nn)

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(float(x) for x in np.geomspace(0.01, 5.0, 12))
DEFAULT_OMEGAS = (0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0)


@dataclass(frozen=True)
class CVPlan:
    lambda_grid: Sequence[float] = DEFAULT_LAMBDAS
    omega_grid: Sequence[float] = DEFAULT_OMEGAS
    n_sets: int = 5
    injection_rate: Optional[float] = None    # None: the data's own missing rate
    seed: int = 0

    def __post_init__(self):
        lg = tuple(sorted(float(x) for x in self.lambda_grid))
        og = tuple(sorted(float(x) for x in self.omega_grid))
        if not lg or not og:
            raise ValueError("tuning grids must be nonempty")
        if lg[0] <= 0:
            raise ValueError("lambda grid must be positive")
        if og[0] < 0:
            raise ValueError("omega grid must be nonnegative")
        if self.n_sets < 1:
            raise ValueError("need at least one validation set")
        if self.injection_rate is not None and not 0 < self.injection_rate < 1:
            raise ValueError("injection_rate must lie in (0, 1)")
        object.__setattr__(self, "lambda_grid", lg)
        object.__setattr__(self, "omega_grid", og)

    def rate_for(self, Z: CategoricalMatrix) -> float:
        if self.injection_rate is not None:
            return self.injection_rate
        return max(Z.n_missing / Z.codes.size, 0.05)


@dataclass(eq=False)
class CVResult:
    lambda_grid: tuple
    omega_grid: tuple
    wrong: np.ndarray          # T x L x W counts of falsely imputed cells
    n_masked: int
    best_lambda: float
    best_omega: float
    plan: CVPlan = field(repr=False, default=None)

    @property
    def error_surface(self) -> np.ndarray:
        return self.wrong / self.n_masked

    @property
    def mean_errors(self) -> np.ndarray:
        return self.wrong.sum(axis=0) / (self.n_masked * self.wrong.shape[0])

    @property
    def best_error(self) -> float:
        li = self.lambda_grid.index(self.best_lambda)
        wi = self.omega_grid.index(self.best_omega)
        return float(self.mean_errors[li, wi])

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lambda", "omega", "pfc"])
            surf = self.error_surface
            for t in range(surf.shape[0]):
                for a, lam in enumerate(self.lambda_grid):
                    for b, om in enumerate(self.omega_grid):
                        w.writerow([t + 1, repr(lam), repr(om), repr(float(surf[t, a, b]))])


def pfc(truth: CategoricalMatrix, imputed: CategoricalMatrix, eval_mask) -> float:
    """Share of evaluated cells whose imputed category differs from the truth.

    ``eval_mask`` is a boolean ``n x p`` array or a pair of index arrays.
    """
    if truth.shape != imputed.shape:
        raise ValueError("truth and imputed shapes differ")
    if isinstance(eval_mask, np.ndarray) and eval_mask.dtype == bool:
        rows, cols = np.nonzero(eval_mask)
    else:
        rows, cols = (np.asarray(x) for x in eval_mask)
    if len(rows) == 0:
        raise UndefinedMetricError("PFC over an empty set of cells")
    return float(np.mean(truth.codes[rows, cols] != imputed.codes[rows, cols]))


def inject_missing(Z: CategoricalMatrix, candidates: np.ndarray, count: int,
                   rng: np.random.Generator, min_left: int = 2, tries: int = 100):
    """Hide ``count`` cells drawn from the flat indices in ``candidates``.

    Every column keeps at least ``min_left`` observed cells; the draw is
    repeated up to ``tries`` times before giving up.
    """
    n, p = Z.shape
    obs = Z.observed
    for _ in range(tries):
        pick = rng.choice(candidates, size=count, replace=False)
        hidden = np.zeros(n * p, dtype=bool)
        hidden[pick] = True
        hidden = hidden.reshape(n, p)
        left = (obs & ~hidden).sum(axis=0)
        if (left >= min_left).all():
            codes = np.array(Z.codes, copy=True)
            codes[hidden] = MISSING
            return Z.with_codes(codes), hidden
    worst = int(np.argmin((obs.sum(axis=0))))
    raise PlanInfeasibleError(
        f"cannot hide {count} cells while keeping {min_left} observed values in "
        f"every column (tightest column: {worst})"
    )


def cross_validate(Z: CategoricalMatrix, plan: CVPlan = CVPlan(),
                   base_config: ImputationConfig = ImputationConfig(),
                   backend=None) -> CVResult:
    """Grid search over ``(lambda, omega)`` for a kernel-weighted engine."""
    if not base_config.tunable:
        raise ValueError(f"{base_config.method} has no tuning parameters")
    rate = plan.rate_for(Z)
    Zcv = initial_impute_5nn(Z, seed=plan.seed)
    candidates = np.flatnonzero(Z.observed.ravel())
    count = int(round(rate * len(candidates)))
    if count < 1:
        raise PlanInfeasibleError("injection rate hides no cells")
    L, W = plan.lambda_grid, plan.omega_grid
    wrong = np.zeros((plan.n_sets, len(L), len(W)), dtype=np.int64)
    rng = np.random.default_rng([plan.seed, 7919])
    for t in range(plan.n_sets):
        Zt, hidden = inject_missing(Zcv, candidates, count, rng)
        model = build_model(Zt, base_config, backend)
        modes = column_modes(Zt, base_config.seed)
        truth = Zcv.codes[model.rows, model.attrs]
        for b, om in enumerate(W):
            for a, lam in enumerate(L):
                P, has = model.probabilities(om, base_config.q, lam, base_config.kernel,
                                             base_config.neighbor_count)
                codes, _ = model.decide(P, has, base_config.seed, modes)
                wrong[t, a, b] = int((codes != truth).sum())
    totals = wrong.sum(axis=0)
    best = totals.min()
    # omega-major scan so the first hit has the smallest omega, then lambda
    hits = [(b, a) for b in range(len(W)) for a in range(len(L)) if totals[a, b] == best]
    b, a = hits[0]
    res = CVResult(L, W, wrong, count, L[a], W[b], plan)
    log.info("tuned lambda=%r omega=%r (cv pfc %.4f)", res.best_lambda, res.best_omega,
             res.best_error)
    return res


def tune_and_impute(Z: CategoricalMatrix, config: ImputationConfig,
                    plan: Optional[CVPlan] = None, backend=None):
    """Run :func:`cross_validate` then impute ``Z`` with the winning pair.

    Returns ``(ImputationResult, CVResult)``; non-tunable methods return
    ``None`` for the latter.
    """
    if not config.tunable or Z.n_missing == 0:
        return impute_matrix(Z, config, backend), None
    if plan is None:
        plan = CVPlan(seed=config.seed)
    cv = cross_validate(Z, plan, config, backend)
    tuned = replace(config, lam=cv.best_lambda, omega=cv.best_omega)
    return impute_matrix(Z, tuned, backend), cv
