"""Product quadrature on the unit sphere S^{d-1}."""

import functools
import math

import numpy as np
from scipy.special import roots_jacobi

from kinetics.conf import knob


def sphere_area(d):
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


@functools.lru_cache(maxsize=32)
def _rule(d, n):
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    phi = 2.0 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    phi_weights = np.full(2 * n, np.pi / n)
    coords = np.zeros((1, 0))
    sines = np.ones(1)
    weights = np.ones(1)
    # polar angles theta_j carry the measure sin^{d-1-j}(theta_j) d theta_j
    for j in range(1, d - 1):
        power = d - 1 - j
        x, w = roots_jacobi(n, 0.5 * (power - 1), 0.5 * (power - 1))
        m = len(sines)
        coords = np.repeat(coords, n, axis=0)
        s = np.repeat(sines, n)
        weights = np.repeat(weights, n) * np.tile(w, m)
        x = np.tile(x, m)
        coords = np.hstack([coords, (s * x)[:, None]])
        sines = s * np.sqrt(1.0 - x * x)
    m = len(sines)
    s = np.repeat(sines, 2 * n)
    phi = np.tile(phi, m)
    directions = np.hstack([np.repeat(coords, 2 * n, axis=0), (s * np.cos(phi))[:, None], (s * np.sin(phi))[:, None]])
    weights = np.repeat(weights, 2 * n) * np.tile(phi_weights, m)
    directions.setflags(write=False)
    weights.setflags(write=False)
    return directions, weights


def sphere_quadrature(d, resolution=None):
    """Directions (m, d) and weights (m,) integrating over S^{d-1}.

    Gauss-Jacobi in each polar angle and the midpoint rule in the azimuth, ``resolution``
    nodes per polar angle. The weights sum to the area of the sphere.
    """
    n = int(knob("SPHERE_RESOLUTION", resolution))
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and resolution >= 1, got d={d}, resolution={n}")
    return _rule(int(d), n)


def random_rotation(rng, d):
    """Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))
