"""Regularizers and their proximal operators.

Three penalties are supported: elementwise l1, l1 on off-diagonal entries
only (diagonal left untouched), and the trace norm (sum of singular
values, prox = singular-value soft thresholding).  The norm-ball
constraint is off by default (radius = inf); when finite it is enforced
by scaling back to the boundary after a prox step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .linalg import spectral_norm, svd_soft_threshold

L1 = "l1"
L1_OFFDIAG = "l1_offdiag"
TRACE_NORM = "trace_norm"
KINDS = (L1, L1_OFFDIAG, TRACE_NORM)


def soft_threshold(u, nu):
    return np.sign(u) * np.maximum(np.abs(u) - nu, 0.0)


def _offdiag_mask(theta):
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ShapeMismatch("off-diagonal penalty needs a square matrix")
    return ~np.eye(theta.shape[0], dtype=bool)


@dataclass(frozen=True)
class Regularizer:
    """A decomposable penalty lam * R(theta), optionally ball-constrained."""

    kind: str
    strength: float
    ball_radius: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")
        if self.ball_radius <= 0:
            raise ValueError("ball_radius must be positive")

    def value(self, theta):
        """R(theta) without the strength factor."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == L1:
            return float(np.sum(np.abs(theta)))
        if self.kind == L1_OFFDIAG:
            return float(np.sum(np.abs(theta[_offdiag_mask(theta)])))
        return float(np.sum(np.linalg.svd(theta, compute_uv=False)))

    def penalty(self, theta):
        return self.strength * self.value(theta)

    def prox(self, theta, step):
        """argmin_z 0.5 ||z - theta||^2 + step * strength * R(z)."""
        if step <= 0:
            raise ValueError("step must be positive")
        theta = np.asarray(theta, dtype=float)
        nu = step * self.strength
        if self.kind == L1:
            return soft_threshold(theta, nu)
        if self.kind == L1_OFFDIAG:
            out = theta.copy()
            mask = _offdiag_mask(theta)
            out[mask] = soft_threshold(theta[mask], nu)
            return out
        return svd_soft_threshold(theta, nu)

    def dual_norm(self, g):
        """Dual norm of the penalty, as a diagnostic on gradients."""
        g = np.asarray(g, dtype=float)
        if self.kind == L1:
            return float(np.abs(g).max())
        if self.kind == L1_OFFDIAG:
            off = g[_offdiag_mask(g)]
            return float(np.abs(off).max()) if off.size else 0.0
        return spectral_norm(g)

    def project_ball(self, theta):
        """Scale theta back to the ball boundary if R(theta) > radius."""
        if not math.isfinite(self.ball_radius):
            return theta, False
        r = self.value(theta)
        if r <= self.ball_radius:
            return theta, False
        return theta * (self.ball_radius / r), True
