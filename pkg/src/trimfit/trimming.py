"""The weight subproblem: keep the h smallest current losses.

Minimizing sum_i w_i loss_i over the capped simplex
{w in [0,1]^n : sum w = h} is a linear program whose solution can always
be taken at a vertex: set w_i = 1 for the h smallest losses.  Selection
uses a partial sort (nth-element) with ties broken by smaller sample
index, so results are deterministic.  Fractional weights are not
representable on purpose.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidH, ShapeMismatch

OPTIMALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TrimWeights:
    """A vertex of the capped simplex: binary inclusion indicators."""

    n: int
    h: int
    indicators: np.ndarray = field(repr=False)

    def __post_init__(self):
        ind = np.asarray(self.indicators, dtype=np.uint8)
        if ind.shape != (self.n,):
            raise ShapeMismatch("indicator length must equal n")
        if not np.all((ind == 0) | (ind == 1)):
            raise ValueError("indicators must be binary")
        if not 1 <= self.h <= self.n:
            raise InvalidH(f"h={self.h} outside [1, {self.n}]")
        if int(ind.sum()) != self.h:
            raise ValueError("indicators must sum to h")
        ind.flags.writeable = False
        object.__setattr__(self, "indicators", ind)

    def as_floats(self):
        return self.indicators.astype(float)

    def selected(self):
        return np.nonzero(self.indicators == 1)[0]

    def excluded(self):
        return np.nonzero(self.indicators == 0)[0]

    def same_as(self, other):
        return self.h == other.h and np.array_equal(self.indicators, other.indicators)


def solve_weights(losses, h):
    """Global minimizer of sum_i w_i loss_i over the capped simplex.

    Ties at the selection boundary go to smaller sample indices.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 1:
        raise ShapeMismatch("losses must be a 1-d vector")
    n = losses.shape[0]
    if not 1 <= h <= n:
        raise InvalidH(f"h={h} outside [1, {n}]")
    if not np.all(np.isfinite(losses)):
        raise ValueError("losses must be finite")
    if h == n:
        return TrimWeights(n, h, np.ones(n, dtype=np.uint8))
    kth = np.partition(losses, h - 1)[h - 1]
    selected = losses < kth
    need = h - int(selected.sum())
    if need > 0:
        tie_idx = np.nonzero(losses == kth)[0][:need]
        selected[tie_idx] = True
    return TrimWeights(n, h, selected.astype(np.uint8))


def is_weight_optimal(losses, weights, tol=OPTIMALITY_TOL):
    """True iff weights solve the weight LP for these losses (maybe non-uniquely)."""
    losses = np.asarray(losses, dtype=float)
    if losses.shape[0] != weights.n:
        raise ShapeMismatch("losses and weights disagree in length")
    excluded = weights.excluded()
    if excluded.size == 0:
        return True
    return float(losses[weights.selected()].max()) <= float(losses[excluded].min()) + tol
