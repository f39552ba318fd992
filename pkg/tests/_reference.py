"""Independent reference implementations used as test oracles.

Nothing here shares stepping logic with the package solver: the untrimmed
reference uses a doubling/halving Armijo-style search instead of
Barzilai-Borwein, so agreement between the two is a real check.
"""

import math

import numpy as np

from trimfit.errors import NotPositiveDefinite


def untrimmed_prox_gradient(loss, reg, theta0, max_iter=4000, tol=1e-13):
    """Plain proximal gradient for the untrimmed (h = n) problem."""
    n = loss.n
    w = np.ones(n)
    theta = np.array(theta0, dtype=float)

    def objective(t):
        return float(np.sum(loss.sample_losses(t))) / n + loss.shared_term(t) \
            + reg.penalty(t)

    f = objective(theta)
    step = 1.0
    for _ in range(max_iter):
        grad = loss.gradient(theta, w, n)
        step = min(step * 2.0, 1e6)
        while True:
            cand = reg.prox(theta - step * grad, step)
            try:
                f_new = objective(cand)
            except NotPositiveDefinite:
                f_new = math.inf
            if f_new <= f + 1e-14 * max(1.0, abs(f)):
                break
            step *= 0.5
            if step < 1e-18:
                return theta, f
        if abs(f - f_new) <= tol * max(1.0, abs(f)):
            theta, f = cand, f_new
            break
        theta, f = cand, f_new
    return theta, f


def power_iteration(m, iters=5000, tol=1e-14, seed=0):
    """Largest singular value via power iteration on m.T @ m."""
    rng = np.random.default_rng(seed)
    m = np.asarray(m, dtype=float)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = m @ v
        w = m.T @ u
        new_sigma = math.sqrt(np.linalg.norm(w))
        v = w / np.linalg.norm(w)
        if abs(new_sigma - sigma) <= tol * max(1.0, sigma):
            sigma = new_sigma
            break
        sigma = new_sigma
    return sigma


def central_difference_gradient(fun, theta, eps=1e-6):
    """Per-coordinate central finite differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    it = np.nditer(theta, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = theta.copy()
        minus = theta.copy()
        plus[idx] += eps
        minus[idx] -= eps
        grad[idx] = (fun(plus) - fun(minus)) / (2.0 * eps)
    return grad


def directional_difference(fun, theta, direction, eps=1e-6):
    return (fun(theta + eps * direction) - fun(theta - eps * direction)) / (2.0 * eps)


def random_spd(rng, p, ridge=0.5):
    a = rng.standard_normal((p, p))
    m = a @ a.T / p + ridge * np.eye(p)
    return 0.5 * (m + m.T)
