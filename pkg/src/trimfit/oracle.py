"""Exact global solution of the trimmed problem by subset enumeration.

Every vertex of the capped simplex corresponds to an h-subset of the
samples; enumerating all of them and solving each fixed-weight convex
subproblem to high precision yields the global minimum.  Only feasible
for small instances, which is exactly what solver tests need.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import data as _data
from .errors import TooManySubsets
from .estimators import build_problem
from .losses import SQUARED
from .solver import fit_fixed_weights
from .trimming import TrimWeights

DEGENERACY_GAP = 1e-10


@dataclass
class OracleResult:
    best_subset: tuple
    best_theta: np.ndarray
    best_objective: float
    per_subset_objectives: list
    subsets: list
    degenerate_subsets: list


def _colex_subsets(n, h):
    # colexicographic order: compare subsets by their largest elements first
    return sorted(itertools.combinations(range(n), h), key=lambda s: s[::-1])


def _closed_form_ls(dataset, subset, jitter=1e-12):
    x = dataset.X[list(subset)]
    y = dataset.Y[list(subset)]
    gram = x.T @ x
    rhs = x.T @ y
    try:
        theta = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(theta)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        theta = np.linalg.solve(gram + jitter * np.eye(gram.shape[0]), rhs)
    return theta


def enumerate_global(spec, dataset, subset_limit=5000):
    """Solve the trimmed problem exactly on all (n choose h) subsets.

    Fixed-weight subproblems run at tolerances 100x tighter than the
    spec's solver config; lambda = 0 squared-loss subproblems are solved
    in closed form (normal equations, ridge jitter 1e-12 if singular).
    Subsets whose objective is within 1e-10 of the best are reported as
    degenerate.
    """
    n = dataset.n
    loss, reg, h, theta0 = build_problem(spec, dataset)
    n_subsets = math.comb(n, h)
    if n_subsets > subset_limit:
        raise TooManySubsets(f"{n_subsets} subsets exceed the limit {subset_limit}")
    tight = spec.solver.tightened()
    closed_form = loss.kind == SQUARED and spec.lam == 0.0
    subsets = _colex_subsets(n, h)
    objectives = []
    thetas = []
    for subset in subsets:
        ind = np.zeros(n, dtype=np.uint8)
        ind[list(subset)] = 1
        tw = TrimWeights(n, h, ind)
        if closed_form:
            theta = _closed_form_ls(dataset, subset)
        else:
            theta, _, _, _, _, _ = fit_fixed_weights(loss, reg, tw, h, theta0, tight)
        w = tw.as_floats()
        f = float(w @ loss.sample_losses(theta)) / h + loss.shared_term(theta) + reg.penalty(theta)
        objectives.append(f)
        thetas.append(theta)
    best_idx = int(np.argmin(objectives))
    best_obj = objectives[best_idx]
    degenerate = [
        subsets[i]
        for i in range(len(subsets))
        if i != best_idx and objectives[i] - best_obj < DEGENERACY_GAP
    ]
    return OracleResult(
        best_subset=subsets[best_idx],
        best_theta=thetas[best_idx],
        best_objective=best_obj,
        per_subset_objectives=objectives,
        subsets=subsets,
        degenerate_subsets=degenerate,
    )
