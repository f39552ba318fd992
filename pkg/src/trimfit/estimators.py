"""User-facing estimator facades and tuning-parameter search.

Four instances are wired here:

  sparse_lts        squared loss + l1, vector coefficients
  trimmed_logistic  logistic loss + l1, vector coefficients
  trimmed_glasso    Gaussian precision loss + off-diagonal l1, PD matrix
  tracenorm_lts     squared loss + trace norm, coefficient matrix

Every estimator with h = n is the classical untrimmed counterpart.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import data as _data
from .errors import IncompatibleData, NotPositiveDefinite
from .linalg import cholesky_logdet, symmetrize
from .losses import GAUSSIAN_LOGLIK, LOGISTIC, SQUARED, make_loss
from .regularizers import L1, L1_OFFDIAG, TRACE_NORM, Regularizer
from .solver import SolverConfig, fit_partial_min

SPARSE_LTS = "sparse_lts"
TRIMMED_LOGISTIC = "trimmed_logistic"
TRIMMED_GLASSO = "trimmed_glasso"
TRACENORM_LTS = "tracenorm_lts"

_WIRING = {
    SPARSE_LTS: (SQUARED, L1, _data.REGRESSION),
    TRIMMED_LOGISTIC: (LOGISTIC, L1, _data.REGRESSION),
    TRIMMED_GLASSO: (GAUSSIAN_LOGLIK, L1_OFFDIAG, _data.GGM),
    TRACENORM_LTS: (SQUARED, TRACE_NORM, _data.MULTIRESPONSE),
}

TRIMMED_MSE = "trimmed_mse"
DEVIANCE = "deviance"
HELDOUT_LOGLIK = "heldout_loglik"


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to fit and with what tuning parameters.

    Exactly one of h (kept-sample count) or trim_fraction (fraction of
    samples trimmed away, resolved as h = n - floor(fraction * n)) must
    be given.
    """

    kind: str
    lam: float
    h: int = None
    trim_fraction: float = None
    ball_radius: float = math.inf
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.kind not in _WIRING:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if (self.h is None) == (self.trim_fraction is None):
            raise ValueError("give exactly one of h or trim_fraction")
        if self.trim_fraction is not None and not 0.0 <= self.trim_fraction <= 1.0:
            raise ValueError("trim_fraction must lie in [0, 1]")

    def resolve_h(self, n):
        if self.h is not None:
            return self.h
        return n - math.floor(self.trim_fraction * n)


def _glasso_init(dataset, lam):
    s = dataset.X.T @ dataset.X / dataset.n
    try:
        init = np.linalg.inv(symmetrize(s + lam * np.eye(dataset.p)))
        cholesky_logdet(symmetrize(init, rtol=1.0))
        return 0.5 * (init + init.T)
    except (np.linalg.LinAlgError, NotPositiveDefinite):
        return np.eye(dataset.p)


def build_problem(spec, dataset):
    """Assemble (loss, regularizer, h, default theta0) for a spec."""
    loss_kind, reg_kind, data_kind = _WIRING[spec.kind]
    if dataset.kind != data_kind:
        raise IncompatibleData(
            f"estimator {spec.kind} needs {data_kind} data, got {dataset.kind}"
        )
    loss = make_loss(loss_kind, dataset)
    reg = Regularizer(reg_kind, spec.lam, spec.ball_radius)
    h = spec.resolve_h(dataset.n)
    if spec.kind == TRIMMED_GLASSO:
        theta0 = _glasso_init(dataset, spec.lam)
    else:
        theta0 = loss.init_theta()
    return loss, reg, h, theta0


def fit(spec, dataset, theta0=None):
    """Fit the estimator by partial-minimization proximal gradient descent."""
    loss, reg, h, default0 = build_problem(spec, dataset)
    result = fit_partial_min(loss, reg, h, default0 if theta0 is None else theta0, spec.solver)
    if spec.kind == TRIMMED_GLASSO:
        result.theta = symmetrize(result.theta, rtol=1.0)
        cholesky_logdet(result.theta)
    return result


def lambda_path(spec, dataset, grid):
    """Fit along a descending lambda grid with warm starts."""
    grid = [float(g) for g in grid]
    if any(a < b for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda grid must be sorted in descending order")
    results = []
    theta = None
    for lam in grid:
        res = fit(replace(spec, lam=lam), dataset, theta0=theta)
        results.append(res)
        theta = np.array(res.theta)
    return results


@dataclass(frozen=True)
class CVPlan:
    lambda_grid: tuple
    h_grid: tuple
    folds: int = 5
    scoring: str = TRIMMED_MSE
    seed: int = 0

    def __post_init__(self):
        if len(self.lambda_grid) == 0 or len(self.h_grid) == 0:
            raise ValueError("grids must be non-empty")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.scoring not in (TRIMMED_MSE, DEVIANCE, HELDOUT_LOGLIK):
            raise ValueError(f"unknown scoring {self.scoring!r}")


def _fold_indices(n, folds, seed):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def trimmed_mse(residual_sq, trim_frac):
    """Mean squared held-out residual after dropping the largest ones.

    Drops the ceil(trim_frac * m) samples with largest absolute residual.
    """
    m = residual_sq.shape[0]
    n_excl = math.ceil(trim_frac * m)
    if n_excl >= m:
        raise ValueError("trim fraction drops every held-out sample")
    kept = np.sort(residual_sq)[: m - n_excl]
    return float(kept.mean())


def _heldout_score(spec, theta, test, scoring, trim_frac):
    if scoring == TRIMMED_MSE:
        r = test.X @ theta - test.Y
        rsq = r ** 2 if r.ndim == 1 else np.sum(r ** 2, axis=1)
        return trimmed_mse(rsq, trim_frac)
    if scoring == DEVIANCE:
        z = test.X @ theta
        return float(np.mean(np.logaddexp(0.0, z) - test.Y * z))
    s = test.X.T @ test.X / test.n
    _, logdet = cholesky_logdet(symmetrize(theta, rtol=1.0))
    return float(np.sum(theta * s)) - logdet


def _cv_cell(spec, dataset, lam, h_full, plan, folds_idx):
    n = dataset.n
    trim_frac = 1.0 - h_full / n
    scores = []
    for k in range(plan.folds):
        test_idx = folds_idx[k]
        train_idx = np.concatenate([folds_idx[j] for j in range(plan.folds) if j != k])
        train = dataset.take(np.sort(train_idx))
        h_train = train.n - math.floor(trim_frac * train.n)
        cell_spec = replace(spec, lam=lam, h=h_train, trim_fraction=None)
        result = fit(cell_spec, train)
        scores.append(_heldout_score(spec, result.theta, dataset.take(np.sort(test_idx)),
                                     plan.scoring, trim_frac))
    return scores


def cross_validate(spec, plan, dataset, threads=1):
    """Grid search over (lambda, h) by k-fold cross-validation.

    Fold assignment is a deterministic function of plan.seed.  h values in
    the grid refer to the full sample size; inside each fold the same trim
    fraction is applied to the training split.  Returns
    (best_lambda, best_h, table) where the table has one record per grid
    cell in grid order; ties go to the earlier cell.
    """
    folds_idx = _fold_indices(dataset.n, plan.folds, plan.seed)
    cells = [(lam, h) for lam in plan.lambda_grid for h in plan.h_grid]

    def run(cell):
        lam, h = cell
        return _cv_cell(spec, dataset, lam, h, plan, folds_idx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_scores = list(pool.map(run, cells))
    else:
        fold_scores = [run(c) for c in cells]

    table = []
    best = None
    for (lam, h), scores in zip(cells, fold_scores):
        mean_score = float(np.mean(scores))
        table.append({"lambda": lam, "h": h, "mean_score": mean_score,
                      "fold_scores": tuple(scores)})
        if best is None or mean_score < best[0]:
            best = (mean_score, lam, h)
    return best[1], best[2], table
