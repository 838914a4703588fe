"""Random sampled fields shared by the norm tests."""
import numpy as np

from critrace.luxemburg import SampledField


def random_grid(rng, max_dim=2):
    dim = int(rng.integers(1, max_dim + 1))
    cells = [int(rng.integers(4, 24)) for _ in range(dim)]
    return SampledField.midpoint([0.0] * dim, [float(rng.uniform(0.5, 3.0)) for _ in range(dim)], cells)


def random_field(rng, like, scale=None):
    scale = scale if scale is not None else 10 ** rng.uniform(-3, 3)
    vals = rng.standard_normal(like.shape) * scale
    vals[rng.random(like.shape) < 0.2] = 0.0
    return like.with_values(vals)


def random_exponent(rng, like, lo=1.0, hi=6.0):
    a, b = sorted(rng.uniform(lo, hi, 2))
    return like.with_values(rng.uniform(a, b + 1e-9, like.shape))


def profiles(like):
    """Three exponent profiles: constant, smooth ramp, oscillating."""
    x = like.mesh()[0]
    span = x.max() - x.min() + 1e-300
    return {
        "constant": like.with_values(np.full(like.shape, 3.0)),
        "ramp": like.with_values(1.5 + 2.5 * (x - x.min()) / span),
        "oscillating": like.with_values(2.0 + np.sin(7 * x) ** 2),
    }
