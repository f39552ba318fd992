import itertools

import numpy as np
import pytest

from trimfit.data import Dataset
from trimfit.errors import TooManySubsets
from trimfit.estimators import EstimatorSpec, build_problem, fit
from trimfit.oracle import enumerate_global
from trimfit.solver import check_local_minimum, fit_partial_min
from trimfit.trimming import TrimWeights


def _instance(seed, n=8, p=2, outlier=None):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    y = x @ rng.standard_normal(p) + 0.1 * rng.standard_normal(n)
    if outlier is not None:
        y[outlier] += 40.0
    return Dataset.regression(x, y)


def test_per_subset_objectives_match_closed_form():
    ds = _instance(0, n=5, p=2)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.0, h=4)
    res = enumerate_global(spec, ds)
    for subset, obj in zip(res.subsets, res.per_subset_objectives):
        idx = list(subset)
        x, y = ds.X[idx], ds.Y[idx]
        theta = np.linalg.solve(x.T @ x, x.T @ y)
        expected = 0.5 * np.sum((x @ theta - y) ** 2) / 4
        assert obj == pytest.approx(expected, abs=1e-10)
    assert res.best_objective == min(res.per_subset_objectives)


def test_outlier_subset_excluded():
    ds = _instance(1, n=9, p=2, outlier=4)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.0, h=8)
    res = enumerate_global(spec, ds)
    assert 4 not in res.best_subset
    assert len(res.best_subset) == 8


def test_h_equals_n_single_subset():
    ds = _instance(2, n=6, p=2)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.01, h=6)
    res = enumerate_global(spec, ds)
    assert len(res.subsets) == 1
    direct = fit(spec, ds)
    assert res.best_objective == pytest.approx(direct.final_objective, abs=1e-8)


def test_subset_limit_enforced():
    ds = _instance(3, n=20, p=2)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.0, h=10)
    with pytest.raises(TooManySubsets):
        enumerate_global(spec, ds, subset_limit=100)


def test_colex_enumeration_order():
    ds = _instance(4, n=5, p=1)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.0, h=3)
    res = enumerate_global(spec, ds)
    expected = sorted(itertools.combinations(range(5), 3), key=lambda s: s[::-1])
    assert res.subsets == expected


def test_oracle_lower_bounds_solver():
    for seed in range(8):
        ds = _instance(10 + seed, n=9, p=3, outlier=2 if seed % 2 else None)
        spec = EstimatorSpec(kind="sparse_lts", lam=0.02, h=7)
        oracle = enumerate_global(spec, ds)
        solver = fit(spec, ds)
        assert oracle.best_objective <= solver.final_objective + 1e-8


def test_multistart_attains_oracle():
    for seed in range(5):
        ds = _instance(30 + seed, n=9, p=2, outlier=1)
        spec = EstimatorSpec(kind="sparse_lts", lam=0.01, h=8)
        oracle = enumerate_global(spec, ds)
        loss, reg, h, _ = build_problem(spec, ds)
        best = np.inf
        for subset in oracle.subsets:
            idx = list(subset)
            x, y = ds.X[idx], ds.Y[idx]
            theta0 = np.linalg.solve(x.T @ x + 1e-12 * np.eye(2), x.T @ y)
            res = fit_partial_min(loss, reg, h, theta0, spec.solver)
            best = min(best, res.final_objective)
        assert best == pytest.approx(oracle.best_objective, abs=1e-6)


def test_oracle_point_is_local_minimum():
    ds = _instance(40, n=8, p=2, outlier=3)
    spec = EstimatorSpec(kind="sparse_lts", lam=0.02, h=7)
    oracle = enumerate_global(spec, ds)
    loss, reg, h, _ = build_problem(spec, ds)
    ind = np.zeros(8, dtype=np.uint8)
    ind[list(oracle.best_subset)] = 1
    from trimfit.solver import FitResult
    res = FitResult(theta=oracle.best_theta, weights=TrimWeights(8, 7, ind),
                    objective_trace=[oracle.best_objective], iterations=1,
                    converged=True, final_step=1.0)
    report = check_local_minimum(loss, reg, h, res, residual_tol=1e-5)
    assert report.weight_optimal
    assert report.residual_ok
