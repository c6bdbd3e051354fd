import numpy as np
from hypothesis import HealthCheck, settings

from chancert.linalg import HermOp

# eigh-heavy properties blow the default 200ms deadline on slow CI boxes
settings.register_profile(
    "chancert",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("chancert")


def rand_herm(d, rng, scale=1.0):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (g + g.conj().T) / 2.0


def rand_density(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return m / np.real(np.trace(m))


def rand_pure(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def herm(m):
    return HermOp(m)
