"""Level-set neighbourhoods E(p, theta, delta) and their volumes inside small balls."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from kinetics import streams
from kinetics.conf import knob
from kinetics.estimates import Estimate
from physics.model import ABSORPTION

from .exceptions import InvalidProbe
from .sphere import sphere_quadrature
from .surfaces import expand_radius, normalization, ray_roots

logger = logging.getLogger(__name__)

PROBE_RESOLUTION = 8


@dataclass(frozen=True)
class LevelSetSlab:
    """{k : |Phi_sigma(p, k) - theta| <= delta}."""

    p: tuple
    sigma: int
    theta: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidProbe(f"slab half-width must be positive, got {self.delta}")

    def contains(self, model, k):
        return np.abs(model.phi(np.asarray(self.p, dtype=float), k, self.sigma) - self.theta) <= self.delta

    def widened(self, factor):
        return LevelSetSlab(self.p, self.sigma, self.theta, self.delta * factor)


def ball_volume(d, radius):
    """Normalized volume of a d-ball: radius^d pi^{d/2} / Gamma(d/2 + 1) / (2 pi)^{d/2}."""
    return radius**d * math.pi ** (0.5 * d) / gamma(0.5 * d + 1.0) * normalization(d)


def sample_ball(rng, center, radius, count):
    center = np.asarray(center, dtype=float)
    d = center.size
    directions = rng.normal(size=(count, d))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / d)
    return center + radii[:, None] * directions


def _hit_fraction(member, center, radius, samples, seed, path):
    hits = 0
    for index, block in streams.blocks(samples, 1 << 16):
        rng = streams.stream(seed, streams.GEOMETRY, *path, index)
        points = sample_ball(rng, center, radius, block.stop - block.start)
        hits += int(np.count_nonzero(member(points)))
    return hits


def _estimate(hits, samples, volume):
    fraction = hits / samples
    return Estimate(volume * fraction, volume * math.sqrt(fraction * (1.0 - fraction) / samples), samples)


def slab_volume(model, slab, center, radius, samples=None, seed=None):
    """Monte Carlo |E ∩ B(center, radius)| in the normalized measure, with its standard error."""
    samples = int(knob("MC_SAMPLES", samples))
    center = np.asarray(center, dtype=float)
    hits = _hit_fraction(lambda k: slab.contains(model, k), center, radius, samples, seed, (0,))
    return _estimate(hits, samples, ball_volume(model.dimension, radius))


def intersection_volume(model, first, second, center, radius, samples=None, seed=None):
    """|E_1 ∩ E_2 ∩ B(center, radius)|; the same seed gives common random numbers across calls."""
    samples = int(knob("MC_SAMPLES", samples))
    center = np.asarray(center, dtype=float)

    def member(k):
        return first.contains(model, k) & second.contains(model, k)

    hits = _hit_fraction(member, center, radius, samples, seed, (1,))
    return _estimate(hits, samples, ball_volume(model.dimension, radius))


def layer_constant(estimate, slab, radius, d):
    """C such that |E ∩ B| = C delta radius^{d-1}."""
    return estimate.scaled(1.0 / (slab.delta * radius ** (d - 1)))


def critical_points(model, p, sigma, iterations=50, tol=1e-13):
    """Minimizers of k -> Phi_sigma(p, k) for each row of p, by Newton on the analytic gradient."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    k = -p.copy()
    for _ in range(iterations):
        gradient = model.electron.gradient(k + p) + sigma * model.phonon.gradient(k)
        hessian = model.electron.hessian(k + p) + sigma * model.phonon.hessian(k)
        step = np.linalg.solve(hessian, gradient[..., None])[..., 0]
        k = k - step
        if np.abs(step).max() <= tol * max(1.0, np.abs(k).max()):
            break
    return k


def shell_points(model, p, sigma, theta, resolution=PROBE_RESOLUTION):
    """Points of {Phi_sigma(p, .) = theta} on rays from the minimizer of Phi_sigma(p, .)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    center = critical_points(model, p, sigma)
    directions, _ = sphere_quadrature(model.dimension, resolution)

    def psi(k):
        return model.phi(p[:, None, :], k, sigma) - theta

    r = ray_roots(psi, center, directions, expand_radius(psi, center, directions))
    hit = np.isfinite(r[0])
    return center[0] + r[0, hit, None] * directions[hit]


@dataclass(frozen=True)
class TransversalityProbe:
    ratio: Estimate
    worst_center: list
    ratios: list
    volumes: list


def transversality_probe(
    model,
    p1,
    p2,
    theta1,
    theta2,
    delta1,
    delta2,
    radius,
    sigma1=ABSORPTION,
    sigma2=ABSORPTION,
    centers=None,
    candidates=8,
    samples=None,
    seed=None,
    rho_tilde=None,
):
    """Largest |E_1 ∩ E_2 ∩ B(q, radius)| |p1 - p2| / (delta1 delta2 radius^{d-2}) over sampled q.

    Without explicit ``centers`` the candidate q are the points of the first shell closest
    to the second one, where the two slabs actually meet.
    """
    rho_tilde = knob("RHO_TILDE", rho_tilde)
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    separation = float(np.linalg.norm(p1 - p2))
    if separation == 0.0:
        raise InvalidProbe("p1 = p2: the transversality ratio is undefined")
    if max(delta1, delta2, radius) > rho_tilde:
        raise InvalidProbe(f"delta1, delta2 and radius must not exceed {rho_tilde:g}")
    d = model.dimension
    first = LevelSetSlab(tuple(p1), sigma1, theta1, delta1)
    second = LevelSetSlab(tuple(p2), sigma2, theta2, delta2)

    if centers is None:
        points = shell_points(model, p1, sigma1, theta1)
        if len(points) == 0:
            raise InvalidProbe(f"level set Phi = {theta1} is empty")
        miss = np.abs(model.phi(p2, points, sigma2) - theta2)
        centers = points[np.argsort(miss, kind="stable")[:candidates]]
    centers = np.atleast_2d(np.asarray(centers, dtype=float))

    scale = separation / (delta1 * delta2 * radius ** (d - 2))
    volumes = [intersection_volume(model, first, second, q, radius, samples, seed) for q in centers]
    ratios = [v.scaled(scale) for v in volumes]
    worst = int(np.argmax([r.value for r in ratios]))
    logger.info(
        "transversality ratio %.4g +- %.2g over %d centers", ratios[worst].value, ratios[worst].stderr, len(ratios)
    )
    return TransversalityProbe(ratios[worst], centers[worst].tolist(), ratios, volumes)
