"""Data generators, recovery metrics and the replication harness.

Scenarios
---------
logistic_flip    sparse logistic model; the labels of the samples with the
                 largest |<theta*, x_i>| are flipped (floor(sqrt(n)) of
                 them, or floor(flip_frac * n), per flip_rule).
tracenorm        low-rank multi-response regression; the truth is the best
                 rank-r approximation of a standard normal matrix, clean
                 noise sd 0.1, corrupted rows get noise mean 2, sd 1.
ggm_mixture      zero-mean Gaussian samples from a hub-network precision
                 matrix, contaminated by a symmetric two-component Gaussian
                 mixture at +/- mu (variants M1-M4).
linear_generic   sparse linear model with AR(1) covariate correlation and
                 either vertical outliers (response shift) or direct
                 replacement of the response.

All generators are pure functions of (spec, seed).  Contamination counts
use floor(fraction * n); for the GGM mixture the outlier count is exact
with an even split between the +mu and -mu components (extra sample to
+mu when odd).

Experiment CSV column order (fixed): replication, estimator, lambda, h,
l2_error, l1_error, frobenius_error, offdiag_l1_error, tpr, fpr,
trimmed_mse.  Wall times are volatile and therefore kept out of the
results table; they are reported separately.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import ShapeMismatch
from .estimators import EstimatorSpec, fit, lambda_path
from .linalg import svd_deterministic
from .randomness import multivariate_normal, normal_samples, rng_from_seed

LOGISTIC_FLIP = "logistic_flip"
TRACENORM = "tracenorm"
GGM_MIXTURE = "ggm_mixture"
LINEAR_GENERIC = "linear_generic"

HUB_COUNT = 9
HUB_EDGE_PROB = 0.4
BASE_EDGE_PROB = 0.03
DIAG_BOOST = 0.1


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int
    p: int
    seed: int = 0
    # logistic_flip / linear_generic
    k: int = None
    flip_rule: str = "frac"  # "sqrt_n" | "frac"
    flip_frac: float = 0.1
    # tracenorm
    q: int = 10
    rank: int = 3
    contamination: float = 0.0
    outlier_mean: float = 2.0
    outlier_sd: float = 1.0
    noise_sd: float = 1.0
    # ggm_mixture
    p_out: float = 0.1
    variant: str = "M1"
    # linear_generic
    ar1: float = 0.6
    outlier_model: str = "vertical"  # "vertical" | "direct"
    outlier_shift: float = 20.0
    direct_mean: float = -100.0
    direct_sd: float = 0.1

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0.0 <= self.contamination <= 1.0 or not 0.0 <= self.p_out <= 1.0:
            raise ValueError("contamination fractions must lie in [0, 1]")
        if self.variant not in ("M1", "M2", "M3", "M4"):
            raise ValueError("variant must be one of M1..M4")
        if self.flip_rule not in ("sqrt_n", "frac"):
            raise ValueError("flip_rule must be 'sqrt_n' or 'frac'")
        if self.outlier_model not in ("vertical", "direct"):
            raise ValueError("outlier_model must be 'vertical' or 'direct'")

    @classmethod
    def logistic_flip(cls, n, p, flip_rule="frac", flip_frac=0.1, k=None, seed=0):
        return cls(LOGISTIC_FLIP, n, p, seed=seed, flip_rule=flip_rule,
                   flip_frac=flip_frac, k=k)

    @classmethod
    def tracenorm(cls, n, p, q, rank=3, contamination=0.2, outlier_mean=2.0,
                  outlier_sd=1.0, seed=0):
        return cls(TRACENORM, n, p, seed=seed, q=q, rank=rank, noise_sd=0.1,
                   contamination=contamination, outlier_mean=outlier_mean,
                   outlier_sd=outlier_sd)

    @classmethod
    def ggm_mixture(cls, n, p, p_out=0.1, variant="M1", seed=0):
        return cls(GGM_MIXTURE, n, p, seed=seed, p_out=p_out, variant=variant)

    @classmethod
    def linear_generic(cls, n, p, k, ar1=0.6, contamination=0.1,
                       outlier_model="vertical", outlier_shift=20.0, seed=0):
        return cls(LINEAR_GENERIC, n, p, seed=seed, k=k, ar1=ar1,
                   contamination=contamination, outlier_model=outlier_model,
                   outlier_shift=outlier_shift)


def _sparse_vector(rng, p, k):
    support = np.sort(rng.choice(p, size=k, replace=False))
    theta = np.zeros(p)
    theta[support] = normal_samples(rng, k)
    return theta


def _union_uniform(rng, size, neg_lo, neg_hi, pos_lo, pos_hi):
    # uniform over [neg_lo, neg_hi] U [pos_lo, pos_hi], density per length
    neg_len = neg_hi - neg_lo
    total = neg_len + (pos_hi - pos_lo)
    u = rng.random(size) * total
    return np.where(u < neg_len, neg_lo + u, pos_lo + (u - neg_len))


def hub_precision(rng, p, hubs=HUB_COUNT, edge_prob=BASE_EDGE_PROB,
                  hub_prob=HUB_EDGE_PROB):
    """Random hub-network precision matrix, PD with smallest eigenvalue 0.1."""
    adj = np.zeros((p, p), dtype=bool)
    upper = np.triu_indices(p, k=1)
    adj[upper] = rng.random(upper[0].size) < edge_prob
    adj |= adj.T
    hub_nodes = rng.choice(p, size=min(hubs, p), replace=False)
    for v in hub_nodes:
        row = rng.random(p) < hub_prob
        row[v] = False
        adj[v] |= row
        adj[:, v] |= row
    e = np.zeros((p, p))
    mask = adj & ~np.eye(p, dtype=bool)
    e[mask] = _union_uniform(rng, int(mask.sum()), -0.75, -0.23, 0.25, 0.75)
    e = 0.5 * (e + e.T)
    lam_min = float(np.linalg.eigvalsh(e)[0])
    return e + (DIAG_BOOST - lam_min) * np.eye(p)


def _cov_factor_from_precision(precision):
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    return np.linalg.cholesky(cov)


def _gen_logistic_flip(spec, rng):
    k = spec.k if spec.k is not None else int(math.isqrt(spec.p))
    theta = _sparse_vector(rng, spec.p, k)
    x = normal_samples(rng, (spec.n, spec.p))
    margins = x @ theta
    y = (rng.random(spec.n) < expit(margins)).astype(float)
    if spec.flip_rule == "sqrt_n":
        n_flip = int(math.isqrt(spec.n))
    else:
        n_flip = math.floor(spec.flip_frac * spec.n)
    flipped = np.sort(np.argsort(-np.abs(margins), kind="stable")[:n_flip])
    y[flipped] = 1.0 - y[flipped]
    return Dataset.regression(x, y), theta, flipped


def _gen_tracenorm(spec, rng):
    raw = normal_samples(rng, (spec.p, spec.q))
    u, s, vt = svd_deterministic(raw)
    s[spec.rank:] = 0.0
    truth = (u * s) @ vt
    x = normal_samples(rng, (spec.n, spec.p))
    noise = normal_samples(rng, (spec.n, spec.q), sd=spec.noise_sd)
    n_bad = math.floor(spec.contamination * spec.n)
    bad = np.sort(rng.permutation(spec.n)[:n_bad])
    if n_bad:
        noise[bad] = normal_samples(rng, (n_bad, spec.q), mean=spec.outlier_mean,
                                    sd=spec.outlier_sd)
    return Dataset.multiresponse(x, x @ truth + noise), truth, bad


def _gen_ggm_mixture(spec, rng):
    truth = hub_precision(rng, spec.p)
    mu_scale = 1.0 if spec.variant in ("M1", "M3") else 1.5
    mu = np.full(spec.p, mu_scale)
    if spec.variant in ("M1", "M2"):
        outlier_precision = hub_precision(rng, spec.p)
    else:
        outlier_precision = np.eye(spec.p)
    n_bad = math.floor(spec.p_out * spec.n)
    n_neg = n_bad // 2
    n_pos = n_bad - n_neg
    clean_factor = _cov_factor_from_precision(truth)
    x = multivariate_normal(rng, spec.n, clean_factor)
    bad = np.sort(rng.permutation(spec.n)[:n_bad])
    if n_bad:
        out_factor = _cov_factor_from_precision(outlier_precision)
        out = np.vstack([
            multivariate_normal(rng, n_pos, out_factor, mean=mu),
            multivariate_normal(rng, n_neg, out_factor, mean=-mu),
        ])
        x[bad] = out
    return Dataset.ggm(x), truth, bad


def _gen_linear_generic(spec, rng):
    if spec.k is None:
        raise ValueError("linear_generic needs the sparsity k")
    idx = np.arange(spec.p)
    sigma = spec.ar1 ** np.abs(idx[:, None] - idx[None, :])
    factor = np.linalg.cholesky(sigma)
    theta = _sparse_vector(rng, spec.p, spec.k)
    x = multivariate_normal(rng, spec.n, factor)
    y = x @ theta + normal_samples(rng, spec.n, sd=spec.noise_sd)
    n_bad = math.floor(spec.contamination * spec.n)
    bad = np.sort(rng.permutation(spec.n)[:n_bad])
    if n_bad:
        if spec.outlier_model == "vertical":
            y[bad] = x[bad] @ theta + normal_samples(rng, n_bad, mean=spec.outlier_shift)
        else:
            y[bad] = normal_samples(rng, n_bad, mean=spec.direct_mean, sd=spec.direct_sd)
    return Dataset.regression(x, y), theta, bad


_GENERATORS = {
    LOGISTIC_FLIP: _gen_logistic_flip,
    TRACENORM: _gen_tracenorm,
    GGM_MIXTURE: _gen_ggm_mixture,
    LINEAR_GENERIC: _gen_linear_generic,
}


def generate(spec):
    """Produce (dataset, true parameter, corrupted sample indices)."""
    rng = rng_from_seed(spec.seed)
    return _GENERATORS[spec.kind](spec, rng)


@dataclass
class MetricsReport:
    l2_error: float
    l1_error: float
    frobenius_error: float
    offdiag_l1_error: float
    tpr: float
    fpr: float
    trimmed_mse: float = math.nan
    wall_time_seconds: float = math.nan
    roc_points: tuple = ()


def score(estimate, truth, support_threshold=1e-6, offdiag_only=None):
    """Error norms and support-recovery rates of an estimate.

    Support is the set of entries with magnitude above the threshold; for
    square (precision-style) parameters only off-diagonal entries count,
    which is the default whenever the arrays are square.
    """
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ShapeMismatch(f"shape {estimate.shape} != {truth.shape}")
    diff = estimate - truth
    fro = float(np.sqrt(np.sum(diff ** 2)))
    l1 = float(np.sum(np.abs(diff)))
    square = estimate.ndim == 2 and estimate.shape[0] == estimate.shape[1]
    if offdiag_only is None:
        offdiag_only = square
    if square:
        off = ~np.eye(estimate.shape[0], dtype=bool)
        offdiag_l1 = float(np.sum(np.abs(diff[off])))
    else:
        offdiag_l1 = math.nan
    if offdiag_only and square:
        est_sup = np.abs(estimate[off]) > support_threshold
        true_sup = np.abs(truth[off]) > support_threshold
    else:
        est_sup = np.abs(estimate).ravel() > support_threshold
        true_sup = np.abs(truth).ravel() > support_threshold
    n_true = int(true_sup.sum())
    n_false = int((~true_sup).sum())
    tp = int((est_sup & true_sup).sum())
    fp = int((est_sup & ~true_sup).sum())
    tpr = tp / n_true if n_true else 1.0
    fpr = fp / n_false if n_false else 0.0
    return MetricsReport(
        l2_error=fro,
        l1_error=l1,
        frobenius_error=fro,
        offdiag_l1_error=offdiag_l1,
        tpr=tpr,
        fpr=fpr,
    )


def roc_auc(points):
    """Trapezoidal area under path ROC points, anchored at (0,0) and (1,1)."""
    pts = sorted(points) + [(1.0, 1.0)]
    pts = [(0.0, 0.0)] + pts
    fpr = np.array([p[0] for p in pts])
    tpr = np.array([p[1] for p in pts])
    return float(np.trapezoid(tpr, fpr))


@dataclass(frozen=True)
class EstimatorRun:
    """One estimator column of an experiment: a spec and an optional
    descending lambda grid (grid runs produce ROC paths)."""

    label: str
    spec: EstimatorSpec
    lambda_grid: tuple = None


@dataclass
class ExperimentRow:
    replication: int
    estimator: str
    lam: float
    h: int
    metrics: MetricsReport


@dataclass
class ExperimentReport:
    rows: list
    summary: list  # dicts: estimator, lambda, mean metrics
    auc_by_label: dict  # label -> per-replication AUC list (grid runs only)
    wall_times: list  # (replication, estimator, lambda, seconds)


def rep_seed(base_seed, replication):
    return int(base_seed) + int(replication)


def _run_one_rep(scenario, runs, r):
    spec_r = replace(scenario, seed=rep_seed(scenario.seed, r))
    dataset, truth, _ = generate(spec_r)
    rows = []
    times = []
    aucs = {}
    for run in runs:
        h = run.spec.resolve_h(dataset.n)
        if run.lambda_grid is not None:
            t0 = time.perf_counter()
            results = lambda_path(run.spec, dataset, run.lambda_grid)
            elapsed = time.perf_counter() - t0
            points = []
            for lam, res in zip(run.lambda_grid, results):
                m = score(res.theta, truth)
                points.append((m.fpr, m.tpr))
                rows.append(ExperimentRow(r, run.label, float(lam), h, m))
            times.append((r, run.label, float(run.lambda_grid[0]), elapsed))
            aucs[run.label] = roc_auc(points)
        else:
            t0 = time.perf_counter()
            res = fit(run.spec, dataset)
            elapsed = time.perf_counter() - t0
            m = score(res.theta, truth)
            rows.append(ExperimentRow(r, run.label, run.spec.lam, h, m))
            times.append((r, run.label, run.spec.lam, elapsed))
    return rows, times, aucs


def run_experiment(scenario, runs, replications, threads=1):
    """Replicate a scenario, fit every estimator run, aggregate the scores.

    Replication r uses seed scenario.seed + r; results are assembled in
    replication order, so reports are identical for any thread count.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    reps = range(replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(lambda r: _run_one_rep(scenario, runs, r), reps))
    else:
        per_rep = [_run_one_rep(scenario, runs, r) for r in reps]

    rows = [row for rep_rows, _, _ in per_rep for row in rep_rows]
    wall_times = [t for _, rep_times, _ in per_rep for t in rep_times]
    auc_by_label = {}
    for _, _, rep_aucs in per_rep:
        for label, auc in rep_aucs.items():
            auc_by_label.setdefault(label, []).append(auc)

    groups = {}
    order = []
    for row in rows:
        key = (row.estimator, row.lam)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    summary = []
    for key in order:
        group = groups[key]
        h = group[0].h
        mean = lambda f: float(np.mean([getattr(g.metrics, f) for g in group]))
        entry = {
            "estimator": key[0],
            "lambda": key[1],
            "h": h,
            "l2_error": mean("l2_error"),
            "l1_error": mean("l1_error"),
            "frobenius_error": mean("frobenius_error"),
            "offdiag_l1_error": mean("offdiag_l1_error"),
            "tpr": mean("tpr"),
            "fpr": mean("fpr"),
        }
        if key[0] in auc_by_label:
            entry["mean_auc"] = float(np.mean(auc_by_label[key[0]]))
        summary.append(entry)
    return ExperimentReport(rows=rows, summary=summary, auc_by_label=auc_by_label,
                            wall_times=wall_times)
