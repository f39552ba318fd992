"""Calculators for the regularization choices and error bounds of the
trimmed estimators, plus numerical verifiers for the curvature and
concentration statements they rest on.

The bound calculators evaluate formulas verbatim; none of them enforce
the data-dependent lower bound on lambda (the dual norm of the gradient
at the truth), which is unknowable in practice.  `gradient_dual_norm`
exposes that quantity as a diagnostic on simulated data instead.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCounts, InvalidTau, NonPositiveCurvature, ShapeMismatch
from .linalg import cholesky_logdet, chol_inverse, symmetrize
from .randomness import normal_samples, rng_from_seed


@dataclass(frozen=True)
class TheoryParams:
    """Constants appearing in the error bounds.

    curvature        lower quadratic curvature of the trimmed loss
    tol_quad         tolerance multiplying R(error)^2 in the curvature bound
    tol_l2           tolerance multiplying the l2 error (weight perturbation)
    tol_reg          tolerance multiplying R(error) (weight perturbation)
    compatibility    sup R(u)/||u||_2 over the model subspace (sqrt(k) for
                     k-sparse vectors under l1)
    good_margin      (|G|-|B|)/|G|, the margin of genuine samples
    outlier_bound    design-scale bound f on the corrupted sub-design
    """

    curvature: float
    tol_quad: float = 0.0
    tol_l2: float = 0.0
    tol_reg: float = 0.0
    compatibility: float = 1.0
    good_margin: float = 1.0
    outlier_bound: float = 0.0
    sparsity: int = 0
    radius: float = math.inf
    reg_strength: float = 0.0
    kept: int = 0
    n: int = 0
    p: int = 0
    n_outliers: int = 0


def general_error_bounds(tp):
    """(l2 bound, regularizer-norm bound) for any certified local minimum.

    l2:  (3*lam*compat/2 + tol_l2) / curvature
    R:   (2 / (lam*curvature)) * (2*lam*compat + tol_l2)^2
    """
    if tp.curvature <= 0:
        raise NonPositiveCurvature("curvature must be positive")
    lam = tp.reg_strength
    l2 = (1.5 * lam * tp.compatibility + tp.tol_l2) / tp.curvature
    reg = (2.0 / (lam * tp.curvature)) * (2.0 * lam * tp.compatibility + tp.tol_l2) ** 2
    return l2, reg


def glasso_lambda_choice(sigma, kept, n_outliers, outlier_bound, tau=3.0):
    """Regularization level for the trimmed precision estimator.

    4 * max( 8 * max_i sigma_ii * sqrt(10*tau*log p / (h - b))
               + (b/h) * max|sigma| ,
             f * sqrt(log p / h) )
    """
    sigma = symmetrize(sigma, rtol=1.0)
    p = sigma.shape[0]
    if kept <= n_outliers:
        raise InvalidCounts("kept must exceed the outlier count")
    log_p = math.log(p)
    diag_max = float(np.diag(sigma).max())
    ent_max = float(np.abs(sigma).max())
    first = 8.0 * diag_max * math.sqrt(10.0 * tau * log_p / (kept - n_outliers)) \
        + (n_outliers / kept) * ent_max
    second = outlier_bound * math.sqrt(log_p / kept)
    return 4.0 * max(first, second)


def glasso_frobenius_bound(c, sparsity, p, n, outlier_bound, n_outliers, curvature):
    """Frobenius error bound at lambda = c * sqrt(log p / n):

    (1/curvature) * ( (3c/2) * sqrt((k+p) log p / n)
                      + f * sqrt(2 b log p / n) )
    """
    if curvature <= 0:
        raise NonPositiveCurvature("curvature must be positive")
    log_p = math.log(p)
    return (1.0 / curvature) * (
        1.5 * c * math.sqrt((sparsity + p) * log_p / n)
        + outlier_bound * math.sqrt(2.0 * n_outliers * log_p / n)
    )


def gaussian_outlier_bound(a, p, outlier_cov_spectral):
    """Design bound f when outliers themselves are Gaussian with
    covariance spectral norm s and count at most a*sqrt(n):

    4*sqrt(2) * a * (1 + sqrt(log p))^2 * s / sqrt(log p)
    """
    log_p = math.log(p)
    return 4.0 * math.sqrt(2.0) * a * (1.0 + math.sqrt(log_p)) ** 2 \
        * outlier_cov_spectral / math.sqrt(log_p)


def lts_lambda_choice(kept, p, c):
    """lambda = c * sqrt(log p / h) for trimmed sparse regression."""
    return c * math.sqrt(math.log(p) / kept)


def lts_error_bounds(c1, c2, sparsity, n_outliers, kept, p):
    """(l2, l1) error bounds for trimmed sparse regression:

    l2:  c1 * ( sqrt(k log p / h) + c2 * sqrt(b log p / h) )
    l1:  4 * c1 * ( same )^2
    """
    log_p = math.log(p)
    base = math.sqrt(sparsity * log_p / kept) + c2 * math.sqrt(n_outliers * log_p / kept)
    return c1 * base, 4.0 * c1 * base ** 2


def check_logdet_curvature(precision, delta, slack=-1e-10):
    """Verify the quadratic lower bound of the log-det loss curvature:

        <inv(P) - inv(P + D), D>  >=  ||D||_F^2 / (spec_norm(P) + 1)^2

    for ||D||_F <= 1 with P and P + D both positive definite.
    """
    precision = symmetrize(precision)
    delta = symmetrize(delta)
    fro = float(np.linalg.norm(delta, "fro"))
    if fro > 1.0 + 1e-12:
        raise ShapeMismatch("perturbation must satisfy ||delta||_F <= 1")
    factor, _ = cholesky_logdet(precision)
    inv_p = chol_inverse(factor)
    factor_d, _ = cholesky_logdet(precision + delta)
    inv_pd = chol_inverse(factor_d)
    lhs = float(np.sum((inv_p - inv_pd) * delta))
    spec = float(np.linalg.norm(precision, 2))
    rhs = fro ** 2 / (spec + 1.0) ** 2
    return lhs - rhs >= slack


def sample_cov_deviation_threshold(sigma, n, tau):
    p = sigma.shape[0]
    return 8.0 * float(np.diag(sigma).max()) * math.sqrt(10.0 * tau * math.log(p) / n)


def sample_cov_deviation_rate(sigma, n, tau, trials, seed=0):
    """Empirical rate at which the max-entry deviation of the sample
    second-moment matrix exceeds its concentration threshold.

    The theoretical rate is at most 4 / p^(tau-2) once n >= 40 max_i
    sigma_ii; callers should compare against that plus Monte Carlo slack.
    """
    if tau <= 2:
        raise InvalidTau("tau must be greater than 2")
    sigma = symmetrize(sigma)
    if n < 40.0 * float(np.diag(sigma).max()):
        raise InvalidCounts("need n >= 40 * max_i sigma_ii")
    p = sigma.shape[0]
    factor = np.linalg.cholesky(sigma)
    threshold = sample_cov_deviation_threshold(sigma, n, tau)
    rng = rng_from_seed(seed)
    violations = 0
    for _ in range(trials):
        x = normal_samples(rng, (n, p)) @ factor.T
        dev = float(np.abs(x.T @ x / n - sigma).max())
        if dev > threshold:
            violations += 1
    return violations / trials


def gradient_dual_norm(loss, reg, theta_star, w_star, h):
    """Dual norm of the trimmed-loss gradient at the truth: the
    data-dependent quantity the lambda rules are calibrated against."""
    grad = loss.gradient(np.asarray(theta_star, float), np.asarray(w_star, float), h)
    return reg.dual_norm(grad)


@dataclass
class ConditionReport:
    """Empirical inner products behind the two structural conditions.

    curvature_lhs     <grad L(theta*+D, w*) - grad L(theta*, w*), D>
    incoherence_lhs   <grad L(theta_hat, w_hat) - grad L(theta_hat, w*), D>
    err_l2, err_reg   ||D||_2 and R(D) for D = theta_hat - theta*
    curvature_upper   largest curvature consistent with the data at
                      tol_quad = 0 (lhs / ||D||^2)
    min_tol_l2        smallest tol_l2 making the incoherence bound hold
                      with tol_reg = 0; min_tol_reg is the converse
    """

    curvature_lhs: float
    incoherence_lhs: float
    err_l2: float
    err_reg: float
    curvature_upper: float
    min_tol_l2: float
    min_tol_reg: float


def diagnose_conditions(loss, reg, theta_hat, w_hat, theta_star, good_indices, h):
    """Evaluate both condition inner products at a fitted local minimum.

    The reference weights keep the fitted weights on genuine samples and
    zero out corrupted ones.  No pass/fail verdict is returned: the
    conditions involve free constants, so only the feasible frontier is
    reported.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_hat.shape != theta_star.shape:
        raise ShapeMismatch("fitted and true parameters disagree in shape")
    w_hat = np.asarray(w_hat, dtype=float)
    w_star = np.zeros_like(w_hat)
    good = np.asarray(good_indices, dtype=int)
    w_star[good] = w_hat[good]

    delta = theta_hat - theta_star
    g_hat_star = loss.gradient(theta_hat, w_star, h)
    g_star_star = loss.gradient(theta_star, w_star, h)
    g_hat_hat = loss.gradient(theta_hat, w_hat, h)

    curvature_lhs = float(np.sum((g_hat_star - g_star_star) * delta))
    incoherence_lhs = float(np.sum((g_hat_hat - g_hat_star) * delta))
    err_l2 = float(np.linalg.norm(delta.ravel()))
    err_reg = reg.value(delta)
    curvature_upper = curvature_lhs / err_l2 ** 2 if err_l2 > 0 else math.inf
    min_tol_l2 = max(0.0, -incoherence_lhs) / err_l2 if err_l2 > 0 else 0.0
    min_tol_reg = max(0.0, -incoherence_lhs) / err_reg if err_reg > 0 else 0.0
    return ConditionReport(
        curvature_lhs=curvature_lhs,
        incoherence_lhs=incoherence_lhs,
        err_l2=err_l2,
        err_reg=err_reg,
        curvature_upper=curvature_upper,
        min_tol_l2=min_tol_l2,
        min_tol_reg=min_tol_reg,
    )
