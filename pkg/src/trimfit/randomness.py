"""Deterministic random sampling helpers.

Normal variates are produced by the Box-Muller transform on the raw
uniform stream of a PCG64 generator, so every generated dataset is a pure
function of its seed and identical across platforms and BLAS builds.
"""

import numpy as np


def rng_from_seed(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def normal_samples(rng, shape, mean=0.0, sd=1.0):
    """Box-Muller normals with the given mean and standard deviation."""
    if np.isscalar(shape):
        shape = (int(shape),)
    count = int(np.prod(shape)) if len(shape) else 1
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1], keeps the log finite
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2.0 * np.pi * u2),
                        radius * np.sin(2.0 * np.pi * u2)])[:count]
    return (mean + sd * z).reshape(shape)


def multivariate_normal(rng, n, cov_factor, mean=None):
    """Samples with covariance L L^T given its lower factor L."""
    p = cov_factor.shape[0]
    z = normal_samples(rng, (n, p))
    x = z @ cov_factor.T
    if mean is not None:
        x = x + mean
    return x
