"""Partial-minimization proximal gradient descent, and a reference
full-alternate-minimization solver.

The partial-minimization loop re-solves the weight subproblem exactly at
the current parameter in every iteration, then takes one proximal
gradient step for the selected samples:

    w_t        <- keep the h smallest per-sample losses at theta_t
    g_t        <- (1/h) sum_i w_i grad loss_i(theta_t)
    theta_t+1  <- prox(theta_t - step * g_t, step)   (backtracking on step)

The backtracking accepts only non-increasing composite objectives, so the
recorded objective trace is monotone; because the weight subproblem is
solved globally, re-trimming can only decrease the objective further.  On
convex losses the selected subset stops changing after finitely many
iterations (unless distinct subsets tie exactly in objective value, which
is flagged as degenerate), after which the loop is a plain proximal
gradient method on the identified inliers.

The initial step is Barzilai-Borwein from the previous two iterates,
clamped to [1e-12, 1e6], with shrink factor cfg.ls_shrink on rejection.
Non-PD candidates in the precision-matrix problem never escape: they are
rejected inside the line search (counted in pd_rejections) and the step
shrinks.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidH, LineSearchFailed, NotPositiveDefinite
from .trimming import TrimWeights, is_weight_optimal, solve_weights

STEP_MIN = 1e-12
STEP_MAX = 1e6
LS_FLOOR = 1e-16
ACCEPT_SLACK = 1e-12
CYCLE_RTOL = 1e-12
MACHINE_RESIDUAL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 500
    tol_rel_obj: float = 1e-10
    tol_grad_map: float = 1e-8
    ls_shrink: float = 0.5
    ls_init_step: float = 1.0
    weight_stable_iters: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if self.ls_init_step <= 0:
            raise ValueError("ls_init_step must be positive")
        if self.tol_rel_obj < 0 or self.tol_grad_map < 0:
            raise ValueError("tolerances must be nonnegative")

    def tightened(self, factor=0.01):
        """Copy with tolerances scaled down, for oracle-grade solves."""
        return replace(
            self,
            tol_rel_obj=self.tol_rel_obj * factor,
            tol_grad_map=self.tol_grad_map * factor,
            max_iter=max(self.max_iter, 5000),
        )


@dataclass
class FitResult:
    """Final parameter/weights pair plus convergence diagnostics."""

    theta: np.ndarray
    weights: TrimWeights
    objective_trace: list
    iterations: int
    converged: bool
    weight_stabilized_at: int = None
    ls_backtracks: int = 0
    pd_rejections: int = 0
    ball_projections: int = 0
    degenerate: bool = False
    final_step: float = 1.0
    grad_map_residual: float = math.inf

    @property
    def final_objective(self):
        return self.objective_trace[-1]


@dataclass
class LocalMinReport:
    weight_optimal: bool
    grad_map_residual: float
    residual_ok: bool
    objective: float


def prox_gradient_residual(reg, theta, grad, step):
    """Fixed-point residual ||theta - prox(theta - step*grad)|| / max(1, ||theta||)."""
    cand = reg.prox(theta - step * grad, step)
    return float(np.linalg.norm(np.ravel(theta - cand))) / max(
        1.0, float(np.linalg.norm(np.ravel(theta)))
    )


def _bb_step(theta, grad, theta_prev, grad_prev, fallback, cfg):
    if theta_prev is None:
        step = cfg.ls_init_step
    else:
        s = np.ravel(theta - theta_prev)
        y = np.ravel(grad - grad_prev)
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 and math.isfinite(sy) else fallback
        if not math.isfinite(step) or step <= 0:
            step = fallback
    return min(max(step, STEP_MIN), STEP_MAX)


class _Counters:
    __slots__ = ("backtracks", "pd", "ball")

    def __init__(self):
        self.backtracks = 0
        self.pd = 0
        self.ball = 0


def _composite(loss, reg, theta, w, h):
    losses = loss.sample_losses(theta)
    return float(w @ losses) / h + loss.shared_term(theta) + reg.penalty(theta)


def _line_search(loss, reg, theta, grad, w, h, f_curr, step0, cfg, counters):
    """Backtrack until the composite objective does not increase."""
    step = step0
    while step >= LS_FLOOR:
        cand = reg.prox(theta - step * grad, step)
        cand, projected = reg.project_ball(cand)
        try:
            f_new = _composite(loss, reg, cand, w, h)
        except NotPositiveDefinite:
            counters.pd += 1
            f_new = math.inf
        if f_new <= f_curr + ACCEPT_SLACK * max(1.0, abs(f_curr)):
            if projected:
                counters.ball += 1
            return cand, f_new, step
        counters.backtracks += 1
        step *= cfg.ls_shrink
    raise LineSearchFailed("step shrank below 1e-16 without descent")


def fit_partial_min(loss, reg, h, theta0, cfg=None):
    """Run the trimmed proximal gradient solver from theta0.

    Stops when, simultaneously, the relative objective change is below
    cfg.tol_rel_obj, the weights have not changed for
    cfg.weight_stable_iters consecutive iterations, and the prox-gradient
    fixed-point residual is below cfg.tol_grad_map; or at cfg.max_iter.
    A repeated (weights, objective) pair after the weights moved away is
    reported as degenerate convergence (equal-objective subsets).
    """
    cfg = cfg or SolverConfig()
    if not 1 <= h <= loss.n:
        raise InvalidH(f"h={h} outside [1, {loss.n}]")
    theta = np.array(theta0, dtype=float)
    counters = _Counters()
    trace = []
    seen = {}
    wb_prev = None
    stable_run = 0
    last_change = 0
    theta_prev = grad_prev = None
    step_accepted = cfg.ls_init_step
    residual = math.inf
    converged = False
    degenerate = False
    tw = None
    t = 0
    while True:
        losses = loss.sample_losses(theta)
        tw = solve_weights(losses, h)
        w = tw.as_floats()
        f = float(w @ losses) / h + loss.shared_term(theta) + reg.penalty(theta)
        trace.append(f)
        wb = tw.indicators.tobytes()
        if wb == wb_prev:
            stable_run += 1
        else:
            prior = seen.get(wb)
            if (
                wb_prev is not None
                and prior is not None
                and abs(prior - f) <= CYCLE_RTOL * max(1.0, abs(f))
            ):
                degenerate = True
                converged = True
                break
            stable_run = 0
            last_change = t
        seen[wb] = f
        wb_prev = wb
        grad = loss.gradient(theta, w, h)
        residual = prox_gradient_residual(reg, theta, grad, step_accepted)
        if len(trace) > 1:
            rel_change = abs(trace[-2] - f) / max(1.0, abs(trace[-2]))
            if (
                rel_change < cfg.tol_rel_obj
                and stable_run >= cfg.weight_stable_iters
                and residual < cfg.tol_grad_map
            ):
                converged = True
                break
        if t + 1 >= cfg.max_iter:
            break
        step0 = _bb_step(theta, grad, theta_prev, grad_prev, step_accepted, cfg)
        theta_prev, grad_prev = theta, grad
        try:
            theta, _, step_accepted = _line_search(
                loss, reg, theta, grad, w, h, f, step0, cfg, counters
            )
        except LineSearchFailed:
            if loss.convex and stable_run >= 1 and residual < MACHINE_RESIDUAL:
                converged = True
                break
            raise
        t += 1
    iterations = len(trace)
    stabilized = last_change if iterations - 1 > last_change and not degenerate else None
    return FitResult(
        theta=theta,
        weights=tw,
        objective_trace=trace,
        iterations=iterations,
        converged=converged,
        weight_stabilized_at=stabilized,
        ls_backtracks=counters.backtracks,
        pd_rejections=counters.pd,
        ball_projections=counters.ball,
        degenerate=degenerate,
        final_step=step_accepted,
        grad_map_residual=residual,
    )


def fit_fixed_weights(loss, reg, weights, h, theta0, cfg=None):
    """Proximal gradient descent at frozen weights (the convex subproblem)."""
    cfg = cfg or SolverConfig()
    w = weights.as_floats() if isinstance(weights, TrimWeights) else np.asarray(weights, float)
    theta = np.array(theta0, dtype=float)
    counters = _Counters()
    trace = []
    theta_prev = grad_prev = None
    step_accepted = cfg.ls_init_step
    residual = math.inf
    converged = False
    t = 0
    while True:
        f = _composite(loss, reg, theta, w, h)
        trace.append(f)
        grad = loss.gradient(theta, w, h)
        residual = prox_gradient_residual(reg, theta, grad, step_accepted)
        if len(trace) > 1:
            rel_change = abs(trace[-2] - f) / max(1.0, abs(trace[-2]))
            if rel_change < cfg.tol_rel_obj and residual < cfg.tol_grad_map:
                converged = True
                break
        if t + 1 >= cfg.max_iter:
            break
        step0 = _bb_step(theta, grad, theta_prev, grad_prev, step_accepted, cfg)
        theta_prev, grad_prev = theta, grad
        try:
            theta, _, step_accepted = _line_search(
                loss, reg, theta, grad, w, h, f, step0, cfg, counters
            )
        except LineSearchFailed:
            if loss.convex and residual < MACHINE_RESIDUAL:
                converged = True
                break
            raise
        t += 1
    return theta, trace, counters, step_accepted, residual, converged


def fit_alternate_min(loss, reg, h, theta0, cfg=None, inner_cfg=None):
    """Classic alternating scheme: solve the fixed-weight problem to
    completion, re-trim, and repeat until the selected subset repeats."""
    cfg = cfg or SolverConfig()
    inner_cfg = inner_cfg or cfg
    if not 1 <= h <= loss.n:
        raise InvalidH(f"h={h} outside [1, {loss.n}]")
    theta = np.array(theta0, dtype=float)
    trace = []
    backtracks = pd = ball = 0
    seen = set()
    wb_prev = None
    last_change = 0
    converged = False
    degenerate = False
    tw = None
    step = cfg.ls_init_step
    residual = math.inf
    for outer in range(cfg.max_iter):
        losses = loss.sample_losses(theta)
        tw = solve_weights(losses, h)
        w = tw.as_floats()
        f = float(w @ losses) / h + loss.shared_term(theta) + reg.penalty(theta)
        trace.append(f)
        wb = tw.indicators.tobytes()
        if wb == wb_prev:
            converged = True
            break
        if wb in seen:
            converged = True
            degenerate = True
            break
        last_change = outer
        seen.add(wb)
        wb_prev = wb
        theta, inner_trace, counters, step, residual, _ = fit_fixed_weights(
            loss, reg, tw, h, theta, inner_cfg
        )
        trace.extend(inner_trace[1:])
        backtracks += counters.backtracks
        pd += counters.pd
        ball += counters.ball
    stabilized = last_change if converged and not degenerate else None
    return FitResult(
        theta=theta,
        weights=tw,
        objective_trace=trace,
        iterations=len(trace),
        converged=converged,
        weight_stabilized_at=stabilized,
        ls_backtracks=backtracks,
        pd_rejections=pd,
        ball_projections=ball,
        degenerate=degenerate,
        final_step=step,
        grad_map_residual=residual,
    )


def check_local_minimum(loss, reg, h, result, weight_tol=1e-12, residual_tol=1e-6, step=None):
    """Certify the (theta, weights) pair returned by a solver.

    Checks (a) the weights solve the weight LP at theta, and (b) theta is
    a prox-gradient fixed point at the frozen weights.
    """
    losses = loss.sample_losses(result.theta)
    weight_ok = is_weight_optimal(losses, result.weights, weight_tol)
    w = result.weights.as_floats()
    grad = loss.gradient(result.theta, w, h)
    s = step if step is not None else result.final_step
    residual = prox_gradient_residual(reg, result.theta, grad, s)
    objective = _composite(loss, reg, result.theta, w, h)
    return LocalMinReport(
        weight_optimal=weight_ok,
        grad_map_residual=residual,
        residual_ok=residual < residual_tol,
        objective=objective,
    )
