import numpy as np
import pytest

from trimfit.errors import NotPositiveDefinite, ShapeMismatch
from trimfit.linalg import (cholesky_logdet, spectral_norm, svd_deterministic,
                            svd_soft_threshold, symmetrize)

from _reference import power_iteration


def test_logdet_identity():
    _, logdet = cholesky_logdet(np.eye(3))
    assert logdet == pytest.approx(0.0, abs=1e-14)


def test_logdet_diagonal():
    _, logdet = cholesky_logdet(np.diag([2.0, 8.0]))
    assert logdet == pytest.approx(np.log(16.0), rel=1e-14)


def test_logdet_matches_eigenvalue_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 5))
    m = a.T @ a + np.eye(5)
    _, logdet = cholesky_logdet(m)
    oracle = float(np.sum(np.log(np.linalg.eigvalsh(0.5 * (m + m.T)))))
    assert logdet == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("p", [2, 5, 10, 20])
def test_logdet_eigen_oracle_sweep(p):
    rng = np.random.default_rng(p)
    a = rng.standard_normal((p, p))
    m = a @ a.T / p + 0.3 * np.eye(p)
    _, logdet = cholesky_logdet(m)
    assert logdet == pytest.approx(np.sum(np.log(np.linalg.eigvalsh(m))), abs=1e-8)


def test_factor_reconstructs():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 4))
    m = a @ a.T + np.eye(4)
    factor, _ = cholesky_logdet(m)
    assert np.allclose(factor @ factor.T, 0.5 * (m + m.T), atol=1e-12)
    assert np.allclose(np.triu(factor, k=1), 0.0)


def test_negative_eigenvalue_rejected():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 4))
    m = a @ a.T + np.eye(4)
    vals, vecs = np.linalg.eigh(m)
    vals[0] = -0.1
    bad = vecs @ np.diag(vals) @ vecs.T
    with pytest.raises(NotPositiveDefinite):
        cholesky_logdet(bad)


def test_asymmetric_rejected():
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ShapeMismatch):
        symmetrize(m)


def test_symmetrize_absorbs_roundoff():
    m = np.eye(3)
    m[0, 1] = 1e-15
    out = symmetrize(m)
    assert np.allclose(out, out.T)


def test_svd_threshold_diagonal():
    out = svd_soft_threshold(np.diag([3.0, 1.0]), 1.0)
    assert np.allclose(out, np.diag([2.0, 0.0]), atol=1e-12)


def test_svd_threshold_zero_is_identity():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((4, 3))
    assert np.allclose(svd_soft_threshold(m, 0.0), m)


def test_svd_threshold_rank_one():
    rng = np.random.default_rng(4)
    u = rng.standard_normal(5)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    m = np.outer(u, v)
    assert np.allclose(svd_soft_threshold(m, 0.5), 0.5 * m, atol=1e-12)


def test_svd_threshold_nonexpansive():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.standard_normal((6, 4))
        b = rng.standard_normal((6, 4))
        nu = rng.random()
        lhs = np.linalg.norm(svd_soft_threshold(a, nu) - svd_soft_threshold(b, nu))
        assert lhs <= np.linalg.norm(a - b) + 1e-10


def test_svd_sign_convention():
    rng = np.random.default_rng(6)
    m = rng.standard_normal((5, 4))
    u, _, _ = svd_deterministic(m)
    for j in range(u.shape[1]):
        nz = np.nonzero(np.abs(u[:, j]) > 1e-12)[0]
        assert u[nz[0], j] > 0


def test_spectral_norm_identity():
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-12)


def test_spectral_norm_diagonal_sign():
    assert spectral_norm(np.diag([-3.0, 2.0])) == pytest.approx(3.0, abs=1e-12)


def test_spectral_norm_power_iteration_oracle():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((5, 3))
    assert spectral_norm(m) == pytest.approx(power_iteration(m), rel=1e-8)
