"""Immutable sample containers for the three supported data layouts."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

REGRESSION = "regression"
MULTIRESPONSE = "multiresponse"
GGM = "ggm"


def _frozen(a, ndim):
    a = np.array(a, dtype=float)
    if a.ndim != ndim:
        raise ShapeMismatch(f"expected a {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeMismatch("array contains non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Covariates plus responses (or raw samples), immutable after load.

    kind:
      regression     X (n, p), Y (n,)
      multiresponse  X (n, p), Y (n, q)
      ggm            X (n, p) raw samples, Y is None
    """

    kind: str
    X: np.ndarray
    Y: np.ndarray = None

    @classmethod
    def regression(cls, X, y):
        X = _frozen(X, 2)
        y = _frozen(y, 1)
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatch("X and y disagree on the number of samples")
        return cls(REGRESSION, X, y)

    @classmethod
    def multiresponse(cls, X, Y):
        X = _frozen(X, 2)
        Y = _frozen(Y, 2)
        if Y.shape[0] != X.shape[0]:
            raise ShapeMismatch("X and Y disagree on the number of samples")
        return cls(MULTIRESPONSE, X, Y)

    @classmethod
    def ggm(cls, samples):
        return cls(GGM, _frozen(samples, 2))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return None if self.Y is None or self.Y.ndim == 1 else self.Y.shape[1]

    def take(self, indices):
        """New Dataset restricted to the given sample indices."""
        idx = np.asarray(indices, dtype=int)
        if self.kind == REGRESSION:
            return Dataset.regression(self.X[idx], self.Y[idx])
        if self.kind == MULTIRESPONSE:
            return Dataset.multiresponse(self.X[idx], self.Y[idx])
        return Dataset.ggm(self.X[idx])
