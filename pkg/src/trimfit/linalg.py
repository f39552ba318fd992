"""Dense linear-algebra kernels the estimators are built on.

Positive definiteness is certified by Cholesky success rather than an
eigendecomposition: it is cheaper, and a failed factorization is exactly
the signal the precision-matrix line search needs to shrink its step.
All functions are pure and safe to call concurrently.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefinite, ShapeMismatch

SYMMETRY_RTOL = 1e-12


def symmetrize(m, rtol=SYMMETRY_RTOL):
    """Return (m + m.T)/2, rejecting matrices that are not symmetric to rtol."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > rtol * scale:
        raise ShapeMismatch("matrix is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def cholesky_logdet(m):
    """Lower Cholesky factor and log-determinant of a symmetric PD matrix.

    Returns (factor, logdet) with m = factor @ factor.T and
    logdet = 2 * sum(log(diag(factor))).  Raises NotPositiveDefinite when
    the factorization fails.
    """
    m = symmetrize(m)
    try:
        factor = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return factor, logdet


def chol_inverse(factor):
    """Inverse of the matrix whose lower Cholesky factor is given."""
    p = factor.shape[0]
    inv_factor = solve_triangular(factor, np.eye(p), lower=True)
    return inv_factor.T @ inv_factor


def svd_deterministic(m):
    """Thin SVD with a fixed sign convention for reproducibility.

    Each left singular vector is flipped so that its first entry larger
    than 1e-12 in magnitude is positive; the matching right singular
    vector is flipped with it.
    """
    u, s, vt = np.linalg.svd(np.asarray(m, dtype=float), full_matrices=False)
    for j in range(u.shape[1]):
        nz = np.nonzero(np.abs(u[:, j]) > 1e-12)[0]
        if nz.size and u[nz[0], j] < 0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return u, s, vt


def svd_soft_threshold(m, nu):
    """Shrink every singular value of m by nu, clipping at zero."""
    if nu < 0:
        raise ValueError("threshold must be nonnegative")
    if nu == 0:
        return np.array(m, dtype=float)
    u, s, vt = svd_deterministic(m)
    shrunk = np.maximum(s - nu, 0.0)
    return (u * shrunk) @ vt


def spectral_norm(m):
    """Largest singular value of m."""
    return float(np.linalg.norm(np.asarray(m, dtype=float), 2))
