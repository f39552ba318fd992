"""Per-sample losses, their weighted objectives and gradients.

Each loss exposes the same small surface:

  sample_losses(theta)   -> per-sample loss vector, length n
  shared_term(theta)     -> weight-independent additive term
  gradient(theta, w, h)  -> gradient of (1/h) sum_i w_i loss_i + shared term

The weighted objective is (1/h) * w . sample_losses(theta) + shared_term,
so the weight subproblem stays a linear program in w.  Only the precision
loss has a nonzero shared term (minus the log-determinant); folding it
into the per-sample losses would make trimming depend on it, which is not
the intended objective.

Weights are plain float vectors in [0, 1]^n.  The solvers always pass
binary vectors summing to h; the theory diagnostics deliberately pass
vectors with smaller sums, so the sum is not validated here.
"""

import numpy as np
from scipy.special import expit

from . import data as _data
from .errors import IncompatibleData, ShapeMismatch
from .linalg import chol_inverse, cholesky_logdet, symmetrize

SQUARED = "squared"
LOGISTIC = "logistic"
GAUSSIAN_LOGLIK = "gaussian_loglik"


class SquaredLoss:
    """0.5 * squared residual per sample; vector or matrix parameter."""

    kind = SQUARED
    convex = True

    def __init__(self, dataset):
        if dataset.kind not in (_data.REGRESSION, _data.MULTIRESPONSE):
            raise IncompatibleData("squared loss needs regression data")
        self.data = dataset
        self.n = dataset.n

    def _residuals(self, theta):
        theta = np.asarray(theta, dtype=float)
        want = (self.data.p,) if self.data.kind == _data.REGRESSION else (self.data.p, self.data.q)
        if theta.shape != want:
            raise ShapeMismatch(f"parameter shape {theta.shape} != {want}")
        return self.data.X @ theta - self.data.Y

    def sample_losses(self, theta):
        r = self._residuals(theta)
        if r.ndim == 1:
            return 0.5 * r ** 2
        return 0.5 * np.sum(r ** 2, axis=1)

    def shared_term(self, theta):
        return 0.0

    def gradient(self, theta, w, h):
        r = self._residuals(theta)
        wr = r * w if r.ndim == 1 else r * w[:, None]
        return self.data.X.T @ wr / h

    def init_theta(self):
        if self.data.kind == _data.REGRESSION:
            return np.zeros(self.data.p)
        return np.zeros((self.data.p, self.data.q))


class LogisticLoss:
    """Logistic negative log-likelihood per sample, labels in {0, 1}."""

    kind = LOGISTIC
    convex = True

    def __init__(self, dataset):
        if dataset.kind != _data.REGRESSION:
            raise IncompatibleData("logistic loss needs regression data")
        y = dataset.Y
        if not np.all((y == 0.0) | (y == 1.0)):
            raise IncompatibleData("logistic labels must be 0 or 1")
        self.data = dataset
        self.n = dataset.n

    def _margins(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.data.p,):
            raise ShapeMismatch(f"parameter shape {theta.shape} != ({self.data.p},)")
        return self.data.X @ theta

    def sample_losses(self, theta):
        z = self._margins(theta)
        return np.logaddexp(0.0, z) - self.data.Y * z

    def shared_term(self, theta):
        return 0.0

    def gradient(self, theta, w, h):
        z = self._margins(theta)
        return self.data.X.T @ (w * (expit(z) - self.data.Y)) / h

    def init_theta(self):
        return np.zeros(self.data.p)


class GaussianPrecisionLoss:
    """Gaussian log-likelihood loss in the precision matrix.

    Per-sample term <Theta, x x^T>; the -log det(Theta) part is shared.
    The Cholesky factor computed for the shared term is cached and reused
    by the gradient at the same Theta, halving factorization cost.
    """

    kind = GAUSSIAN_LOGLIK
    convex = True

    def __init__(self, dataset):
        if dataset.kind != _data.GGM:
            raise IncompatibleData("gaussian_loglik needs raw-sample (ggm) data")
        self.data = dataset
        self.n = dataset.n
        self._cache = None  # (theta, factor, logdet)

    def _factor(self, theta):
        cached = self._cache
        if cached is not None and np.array_equal(cached[0], theta):
            return cached[1], cached[2]
        factor, logdet = cholesky_logdet(theta)
        self._cache = (np.array(theta), factor, logdet)
        return factor, logdet

    def sample_losses(self, theta):
        theta = np.asarray(theta, dtype=float)
        p = self.data.p
        if theta.shape != (p, p):
            raise ShapeMismatch(f"parameter shape {theta.shape} != ({p}, {p})")
        return np.sum((self.data.X @ theta) * self.data.X, axis=1)

    def shared_term(self, theta):
        _, logdet = self._factor(np.asarray(theta, dtype=float))
        return -logdet

    def gradient(self, theta, w, h):
        theta = np.asarray(theta, dtype=float)
        factor, _ = self._factor(theta)
        xw = self.data.X * w[:, None]
        s_w = xw.T @ self.data.X / h
        grad = s_w - chol_inverse(factor)
        return 0.5 * (grad + grad.T)

    def init_theta(self):
        """(S + I)^-1 style initializers live in the estimator layer."""
        return np.eye(self.data.p)


_LOSSES = {
    SQUARED: SquaredLoss,
    LOGISTIC: LogisticLoss,
    GAUSSIAN_LOGLIK: GaussianPrecisionLoss,
}


def make_loss(kind, dataset):
    if kind not in _LOSSES:
        raise ValueError(f"unknown loss kind {kind!r}")
    return _LOSSES[kind](dataset)


def per_sample_loss(loss, theta, i):
    """Loss of sample i at theta (shared term excluded)."""
    if not 0 <= i < loss.n:
        raise ShapeMismatch(f"sample index {i} out of range for n={loss.n}")
    return float(loss.sample_losses(theta)[i])


def smooth_objective(loss, theta, w, h):
    """(1/h) sum_i w_i loss_i(theta) + shared term; no penalty."""
    w = np.asarray(w, dtype=float)
    losses = loss.sample_losses(theta)
    if w.shape != losses.shape:
        raise ShapeMismatch("weights and samples disagree in length")
    return float(w @ losses) / h + loss.shared_term(theta)


def weighted_objective(loss, reg, theta, w, h):
    """Full trimmed objective at (theta, w): smooth part plus penalty."""
    return smooth_objective(loss, theta, w, h) + reg.penalty(theta)


def weighted_gradient(loss, theta, w, h):
    """Gradient of the smooth part of the weighted objective."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != loss.n:
        raise ShapeMismatch("weights and samples disagree in length")
    return loss.gradient(np.asarray(theta, dtype=float), w, h)


def symmetrized(theta):
    """Utility re-export used by precision-matrix callers."""
    return symmetrize(theta)
