"""Synthetic benchmarks: latent AR(1) Gaussian data cut into categories,
MCAR deletion and paired multi-method PFC comparison.
"""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import yaml
from scipy.stats import norm

from .data import MISSING, AttributeSpec, CategoricalMatrix
from .errors import InfeasibleRateError
from .imputation import ImputationConfig
from .tuning import CVPlan, pfc, tune_and_impute


def ar1_correlation(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def sample_mvn_ar1(n: int, p: int, rho: float, seed) -> np.ndarray:
    """``n`` draws from ``N(0, Sigma)`` with ``Sigma_ab = rho**|a-b|``."""
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    L = np.linalg.cholesky(ar1_correlation(p, rho))
    G = np.random.default_rng(seed).standard_normal((n, p))
    return G @ L.T


def _check_probs(probs):
    probs = np.asarray(probs, dtype=np.float64)
    if len(probs) < 2 or (probs <= 0).any() or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"category probabilities must be positive and sum to 1: {probs}")
    return probs


def cut_points(probs) -> np.ndarray:
    """Ascending N(0,1) thresholds; category 1 is the top interval."""
    probs = _check_probs(probs)
    return norm.ppf(np.cumsum(probs[::-1])[:-1])


def discretize(X: np.ndarray, category_probs: Sequence[Sequence[float]]) -> CategoricalMatrix:
    """Cut each latent column at population quantiles.

    Categories are numbered from the top interval down, so the binary
    equal-probability case maps positive values to 1 and the rest to 2. A
    value equal to a threshold falls into the lower interval.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(category_probs):
        raise ValueError("one probability vector per column is required")
    codes = np.empty(X.shape, dtype=np.int32)
    attrs = []
    for s, probs in enumerate(category_probs):
        k = len(probs)
        codes[:, s] = k - np.searchsorted(cut_points(probs), X[:, s], side="left")
        attrs.append(AttributeSpec(s + 1, k))
    return CategoricalMatrix(codes, tuple(attrs))


def mcar_mask(Z: CategoricalMatrix, rate: float, seed, min_left: int = 2, tries: int = 100):
    """Hide exactly ``round(rate*n*p)`` uniformly chosen cells.

    Cells are taken as a prefix of a seeded random permutation of the observed
    cells, so for a fixed ``seed`` the masks of increasing rates are nested.
    Every column keeps ``min_left`` observed cells; if a prefix violates that,
    a fresh permutation is drawn (up to ``tries`` times).

    Returns ``(masked, truth, hidden)``.
    """
    if not 0 < rate < 1:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")
    count = int(round(rate * Z.codes.size))
    hidden = np.zeros(Z.shape, dtype=bool)
    if count == 0:
        return Z, Z, hidden
    obs = Z.observed
    candidates = np.flatnonzero(obs.ravel())
    if count > len(candidates) - min_left * Z.p:
        raise InfeasibleRateError(f"cannot hide {count} of {len(candidates)} cells")
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        pick = rng.permutation(candidates)[:count]
        hidden = np.zeros(Z.codes.size, dtype=bool)
        hidden[pick] = True
        hidden = hidden.reshape(Z.shape)
        if ((obs & ~hidden).sum(axis=0) >= min_left).all():
            codes = np.array(Z.codes, copy=True)
            codes[hidden] = MISSING
            return Z.with_codes(codes), Z, hidden
    raise InfeasibleRateError(
        f"cannot hide {count} cells while keeping {min_left} observed values per column")


# ------------------------------------------------------------------ scenarios

@dataclass(frozen=True)
class Scenario:
    name: str
    n: int
    p: int
    rho: float
    category_probs: tuple       # per attribute
    miss_rate: float
    replicates: int
    methods: tuple              # ImputationConfig
    seed: int = 0
    cv: CVPlan = field(default_factory=CVPlan)
    binary_columns: tuple = ()

    def __post_init__(self):
        if len(self.category_probs) != self.p:
            raise ValueError("category plan must list one entry per attribute")
        for pr in self.category_probs:
            _check_probs(pr)
        if not 0 < self.miss_rate < 1:
            raise ValueError("miss_rate must lie in (0, 1)")

    @property
    def num_categories(self) -> np.ndarray:
        return np.array([len(x) for x in self.category_probs])


def build_category_plan(spec: dict, p: int, seed: int):
    """Expand a scenario's ``categories`` block into per-attribute probabilities.

    Category counts come from ``choices`` in balanced proportions, shuffled
    with the scenario seed; ``binary_fraction`` of the attributes (chosen at
    random) become binary first.
    """
    rng = np.random.default_rng([seed, 104729])
    choices = list(spec.get("choices", [2]))
    n_bin = int(round(float(spec.get("binary_fraction", 0.0)) * p))
    order = rng.permutation(p)
    ks = np.empty(p, dtype=int)
    ks[order[:n_bin]] = 2
    rest = order[n_bin:]
    ks[rest] = rng.permutation(np.resize(choices, len(rest)))
    table = spec.get("probabilities", "equal")
    probs = []
    for k in ks:
        if table == "equal" or int(k) not in {int(x) for x in table}:
            probs.append(tuple([1.0 / k] * k))
        else:
            entry = {int(x): v for x, v in table.items()}[int(k)]
            probs.append(tuple(float(v) for v in entry))
    return tuple(probs), tuple(int(x) for x in sorted(order[:n_bin]))


def _config_from_doc(doc: dict) -> ImputationConfig:
    doc = dict(doc)
    if "lambda" in doc:
        doc["lam"] = doc.pop("lambda")
    return ImputationConfig(**doc)


def scenarios_from_doc(doc: dict) -> list[Scenario]:
    n, p = int(doc["n"]), int(doc["p"])
    seed = int(doc.get("seed", 0))
    probs, binary = build_category_plan(doc.get("categories", {}), p, seed)
    methods = tuple(_config_from_doc(m) for m in doc["methods"])
    cvdoc = dict(doc.get("cv", {}))
    if "lambda_grid" in cvdoc and isinstance(cvdoc["lambda_grid"], dict):
        g = cvdoc["lambda_grid"]
        cvdoc["lambda_grid"] = tuple(np.geomspace(g["lo"], g["hi"], int(g["num"])))
    plan = CVPlan(**cvdoc)
    rates = doc.get("miss_rates", [doc.get("miss_rate", 0.1)])
    return [
        Scenario(
            name=str(doc.get("name", "scenario")), n=n, p=p, rho=float(doc["rho"]),
            category_probs=probs, miss_rate=float(r), replicates=int(doc.get("replicates", 200)),
            methods=methods, seed=seed, cv=plan, binary_columns=binary,
        )
        for r in rates
    ]


def load_scenarios(path) -> list[Scenario]:
    """Load a scenario document; one :class:`Scenario` per missing rate.

    ``path`` may name a bundled scenario (``table1_k34``) instead of a file.
    """
    p = Path(path)
    if not p.exists():
        bundled = resources.files("wnnimpute") / "scenarios" / f"{path}.yaml"
        if not bundled.is_file():
            raise FileNotFoundError(f"no scenario file or bundled scenario {path!r}")
        text = bundled.read_text(encoding="utf-8")
    else:
        text = p.read_text(encoding="utf-8")
    return scenarios_from_doc(yaml.safe_load(text))


def bundled_scenarios() -> list[str]:
    root = resources.files("wnnimpute") / "scenarios"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".yaml"))


# ----------------------------------------------------------------- experiment

@dataclass(eq=False)
class ExperimentReport:
    scenario: Scenario
    pfc: dict                   # label -> list of S values
    seconds: dict               # label -> total wall-clock
    tuned: dict = field(default_factory=dict)   # label -> list of (lambda, omega)

    @property
    def means(self) -> dict:
        return {k: float(np.mean(v)) for k, v in self.pfc.items()}

    def to_rows(self):
        for label, vals in self.pfc.items():
            for r, v in enumerate(vals):
                tuned = self.tuned.get(label, [None] * len(vals))[r]
                lam, om = tuned if tuned else ("", "")
                yield [self.scenario.name, self.scenario.miss_rate, label, r, v, lam, om]


CSV_HEADER = ["scenario", "miss_rate", "method", "replicate", "pfc", "lambda", "omega"]


def reports_to_csv(reports: Sequence[ExperimentReport], path=None, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep in reports:
        w.writerows(rep.to_rows())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def format_table(reports: Sequence[ExperimentReport]) -> str:
    """Mean PFC per missing rate (rows) and method (columns)."""
    if not reports:
        return ""
    labels = list(reports[0].pfc)
    width = max(12, *(len(x) + 2 for x in labels))
    lines = [f"{reports[0].scenario.name}  (S={reports[0].scenario.replicates})",
             "miss".ljust(8) + "".join(x.rjust(width) for x in labels)]
    for rep in reports:
        m = rep.means
        lines.append(f"{rep.scenario.miss_rate:.0%}".ljust(8)
                     + "".join(f"{m[x]:.4f}".rjust(width) for x in labels))
    return "\n".join(lines)


def replicate_data(sc: Scenario, r: int):
    """Complete and masked data for replicate ``r``.

    The latent sample and the mask permutation depend on ``(seed, r)`` only,
    so every missing rate of a scenario sees the same complete data and the
    masks are nested across rates (a paired design across missing rates).
    """
    X = sample_mvn_ar1(sc.n, sc.p, sc.rho, [sc.seed, r, 1])
    Z = discretize(X, sc.category_probs)
    masked, truth, hidden = mcar_mask(Z, sc.miss_rate, [sc.seed, r, 2])
    return masked, truth, hidden


def _run_replicate(sc: Scenario, r: int, extra: dict, backend):
    masked, truth, hidden = replicate_data(sc, r)
    out = {}
    for cfg in sc.methods:
        cfg = replace(cfg, seed=sc.seed * 1000003 + r)
        if cfg.method == "knn_cat" and len(set(truth.num_categories.tolist())) > 1:
            continue
        t0 = time.perf_counter()
        plan = replace(sc.cv, seed=cfg.seed)
        res, cv = tune_and_impute(masked, cfg, plan, backend)
        dt = time.perf_counter() - t0
        pair = (cv.best_lambda, cv.best_omega) if cv is not None else None
        out[cfg.label()] = (pfc(truth, res.completed, hidden), dt, pair)
    for label, fn in extra.items():
        t0 = time.perf_counter()
        imputed = fn(masked, truth)
        out[label] = (pfc(truth, imputed, hidden), time.perf_counter() - t0, None)
    return out


def _with_context(exc: Exception, where: str) -> Exception:
    try:
        return type(exc)(f"{where}: {exc}")
    except Exception:
        return RuntimeError(f"{where}: {exc!r}")


def run_experiment(sc: Scenario, workers: int = 1, backend=None,
                   extra_methods: Optional[dict] = None,
                   replicates: Optional[int] = None,
                   progress: Optional[Callable[[int], None]] = None) -> ExperimentReport:
    """Run every method on every replicate of ``sc`` (paired design).

    ``extra_methods`` maps labels to ``f(masked, truth) -> CategoricalMatrix``
    and must be picklable when ``workers > 1``.
    """
    S = sc.replicates if replicates is None else replicates
    if replicates is not None:
        sc = replace(sc, replicates=S)
    extra = dict(extra_methods or {})
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_replicate, sc, r, extra, backend) for r in range(S)]
            results = []
            for r, f in enumerate(futs):
                results.append(f.result())
                if progress:
                    progress(r)
    else:
        results = []
        for r in range(S):
            try:
                results.append(_run_replicate(sc, r, extra, backend))
            except Exception as exc:
                raise _with_context(exc, f"replicate {r} (scenario seed {sc.seed})") from exc
            if progress:
                progress(r)
    labels = list(results[0]) if results else []
    rep = ExperimentReport(sc, {x: [] for x in labels}, {x: 0.0 for x in labels}, {})
    for res in results:
        for label, (v, dt, pair) in res.items():
            rep.pfc[label].append(v)
            rep.seconds[label] += dt
            if pair is not None:
                rep.tuned.setdefault(label, []).append(pair)
    return rep
