"""Co-area delta measure: integrals of F(p) delta(psi(p)) dp in the normalized convention.

Level sets are treated as star-shaped around an interior point ``center``. Every ray
``center + r u`` is cut by the level set once; the co-area formula then reads

    int F delta(psi) dp = (2 pi)^{-d/2} int_{S^{d-1}} F r^{d-1} / |d psi / dr| du.

``level_set_integral`` evaluates that directly. ``surface_delta_integral`` mollifies the
delta along the rays instead and extrapolates the mollifier width to zero, with the direct
value as a cross-check.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from kinetics.conf import knob
from kinetics.extrapolation import extrapolate

from .exceptions import DegenerateGradient, NonConvergent
from .sphere import sphere_quadrature

logger = logging.getLogger(__name__)

MAX_RADIAL_NODES = 20000
CHUNK_POINTS = 2_000_000


def normalization(d):
    return (2.0 * math.pi) ** (-0.5 * d)


@dataclass(frozen=True)
class ShellQuadrature:
    """Nodes on a batch of level sets, one row per surface.

    ``weights`` already hold the direction weight, the co-area Jacobian and the
    normalization, so ``integrate(F(points))`` is the surface integral.
    """

    points: np.ndarray
    radii: np.ndarray
    slopes: np.ndarray
    weights: np.ndarray
    hit: np.ndarray

    def integrate(self, values):
        return np.sum(np.where(self.hit, self.weights * values, 0.0), axis=-1)

    @property
    def empty(self):
        return not self.hit.any()


@dataclass(frozen=True)
class SurfaceIntegral:
    value: float
    error: float
    direct: float = None
    estimates: dict = field(default_factory=dict)


def _along(centers, directions, radii):
    # directions are shared (m, d) or given per surface (n, m, d)
    if directions.ndim == 2:
        directions = directions[None, :, :]
    return centers[:, None, :] + radii[..., None] * directions


def expand_radius(psi, centers, directions, start=1.0, doublings=60):
    """Per-ray radius beyond which psi is positive, found by doubling."""
    radii = np.full((len(centers), directions.shape[-2]), float(start))
    for _ in range(doublings):
        inside = psi(_along(centers, directions, radii)) <= 0
        if not inside.any():
            break
        radii = np.where(inside, 2.0 * radii, radii)
    return radii


def ray_roots(psi, centers, directions, r_max, slope=None, tol=1e-13, iterations=200):
    """Radius of the zero of psi on each ray, NaN where there is none in (0, r_max].

    ``psi`` must be negative at the centers and increase through its zero along each ray.
    With ``slope(points, directions)`` (the radial derivative) a safeguarded Newton
    iteration is used, otherwise plain bisection.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    directions = np.asarray(directions, dtype=float)
    shape = (len(centers), directions.shape[-2])
    hi = np.broadcast_to(np.asarray(r_max, dtype=float), shape).copy()
    lo = np.zeros(shape)
    inside = psi(centers[:, None, :]) < 0
    found = inside & (psi(_along(centers, directions, hi)) > 0)
    if not found.any():
        return np.full(shape, np.nan)
    scale = np.maximum(1.0, hi)
    r = 0.5 * (lo + hi)
    for _ in range(iterations):
        points = _along(centers, directions, r)
        value = psi(points)
        below = value < 0
        lo = np.where(below, r, lo)
        hi = np.where(below, hi, r)
        if slope is None:
            new = 0.5 * (lo + hi)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                new = r - value / slope(points, directions)
            outside = ~np.isfinite(new) | (new <= lo) | (new >= hi)
            new = np.where(outside, 0.5 * (lo + hi), new)
        done = (np.abs(new - r) <= tol * scale) | (value == 0)
        r = np.where(value == 0, r, new)
        if np.all(done | ~found):
            break
    return np.where(found, r, np.nan)


def radial_slope(psi, centers, directions, radii):
    """Central difference of psi along each ray."""
    h = 1e-6 * np.maximum(1.0, radii)
    ahead = psi(_along(centers, directions, radii + h))
    behind = psi(_along(centers, directions, np.maximum(radii - h, 0.0)))
    return (ahead - behind) / (radii + h - np.maximum(radii - h, 0.0))


def shell_quadrature(psi, centers, directions, weights, r_max=None, slope=None, floor=None):
    """Co-area nodes on the zero sets of ``psi`` around each of ``centers``."""
    floor = knob("GRADIENT_FLOOR", floor)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = centers.shape[-1]
    if r_max is None:
        r_max = expand_radius(psi, centers, directions)
    radii = ray_roots(psi, centers, directions, r_max, slope=slope)
    hit = np.isfinite(radii)
    r = np.where(hit, radii, 0.0)
    points = _along(centers, directions, r)
    if not hit.any():
        zeros = np.zeros(r.shape)
        return ShellQuadrature(points, r, zeros, zeros, hit)
    if slope is None:
        g = radial_slope(psi, centers, directions, r)
    else:
        g = slope(points, directions)
    g = np.where(hit, g, 1.0)
    flat = hit & (np.abs(g) < floor)
    if flat.any():
        where = points[flat][0]
        raise DegenerateGradient(f"|grad psi| < {floor:g} on the level set near {np.round(where, 6).tolist()}")
    jacobian = np.where(hit, weights * r ** (d - 1) / np.abs(g), 0.0) * normalization(d)
    return ShellQuadrature(points, r, g, jacobian, hit)


def find_center(psi, start):
    """Minimizer of psi near ``start``; level sets are parametrized around it."""
    start = np.asarray(start, dtype=float)
    result = minimize(lambda x: float(psi(x)), start, method="BFGS", options={"gtol": 1e-10})
    return result.x


def box_exit(center, directions, lower, upper):
    """Distance from ``center`` to the boundary of the box [lower, upper] along each direction."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t_upper = (np.asarray(upper) - center) / directions
        t_lower = (np.asarray(lower) - center) / directions
    t = np.where(directions > 0, t_upper, np.where(directions < 0, t_lower, np.inf))
    return np.maximum(t.min(axis=-1), 0.0)


def _domain(domain, d):
    lower, upper = (np.broadcast_to(np.asarray(bound, dtype=float), (d,)) for bound in domain)
    if np.any(upper <= lower):
        raise ValueError(f"empty domain {lower.tolist()} .. {upper.tolist()}")
    return lower, upper


def level_set_integral(F, psi, d, center=None, domain=None, resolution=None, floor=None):
    """Direct co-area evaluation; the error is the change on halving the angular resolution."""
    n = knob("SPHERE_RESOLUTION", resolution)
    if domain is not None:
        lower, upper = _domain(domain, d)
        center = find_center(psi, 0.5 * (lower + upper)) if center is None else np.asarray(center, dtype=float)
    else:
        center = find_center(psi, np.zeros(d)) if center is None else np.asarray(center, dtype=float)
    values = []
    for level in (n, max(1, n // 2)):
        directions, weights = sphere_quadrature(d, level)
        r_max = None if domain is None else box_exit(center, directions, lower, upper)[None, :]
        shell = shell_quadrature(psi, center, directions, weights, r_max=r_max, floor=floor)
        values.append(float(shell.integrate(F(shell.points))[0]) if not shell.empty else 0.0)
    return SurfaceIntegral(values[0], abs(values[0] - values[1]), direct=values[0])


def _mollified(F, psi, center, directions, weights, r_box, widths, spacing):
    d = len(center)
    nodes = int(min(MAX_RADIAL_NODES, max(64, math.ceil(r_box.max() / spacing) + 1)))
    if nodes == MAX_RADIAL_NODES:
        logger.warning("radial grid capped at %d nodes; narrowest mollifier may be under-resolved", nodes)
    t = np.linspace(0.0, 1.0, nodes)
    chunk = max(1, CHUNK_POINTS // nodes)
    totals = np.zeros(len(widths))
    for start in range(0, len(directions), chunk):
        u = directions[start : start + chunk]
        r = r_box[start : start + chunk, None] * t[None, :]
        points = center + r[..., None] * u[:, None, :]
        level = psi(points)
        base = F(points) * r ** (d - 1)
        for i, h in enumerate(widths):
            kernel = np.exp(-0.5 * (level / h) ** 2) / (math.sqrt(2.0 * math.pi) * h)
            radial = trapezoid(base * kernel, r, axis=-1)
            totals[i] += np.dot(weights[start : start + chunk], radial)
    return totals * normalization(d)


def surface_delta_integral(F, psi, domain, resolution=None, widths=None, center=None, rtol=None, floor=None):
    """int_domain F(p) delta(psi(p)) dp with Lebesgue measure over (2 pi)^{d/2}.

    The delta is replaced by a Gaussian of width h for each h in ``widths`` and the results
    are extrapolated to h = 0 in powers of h^2. Raises DegenerateGradient when the sampled
    level set has |d psi/dr| below the floor and NonConvergent when the extrapolation
    residual exceeds ``rtol`` relative.
    """
    widths = sorted(knob("MOLLIFIER_WIDTHS", widths), reverse=True)
    rtol = knob("EXTRAPOLATION_RTOL", rtol)
    d = np.atleast_1d(np.asarray(domain[0])).size
    lower, upper = _domain(domain, d)
    center = find_center(psi, 0.5 * (lower + upper)) if center is None else np.asarray(center, dtype=float)
    center = np.clip(center, lower, upper)
    directions, weights = sphere_quadrature(d, resolution)
    r_box = box_exit(center, directions, lower, upper)

    shell = shell_quadrature(psi, center, directions, weights, r_max=r_box[None, :], floor=floor)
    if shell.empty:
        logger.debug("level set misses the domain")
        return SurfaceIntegral(0.0, 0.0, direct=0.0)
    direct = float(shell.integrate(F(shell.points))[0])

    steepest = float(np.abs(shell.slopes[shell.hit]).max())
    estimates = _mollified(F, psi, center, directions, weights, r_box, widths, min(widths) / (4.0 * steepest))
    value, residual = extrapolate(widths, estimates, power=2)
    value = float(value)
    scale = max(abs(value), abs(direct))
    logger.debug("mollified estimates %s -> %.10g (residual %.3g, direct %.10g)", estimates, value, residual, direct)
    if residual > rtol * scale + 1e-14:
        raise NonConvergent(f"extrapolation residual {residual:.3g} exceeds {rtol:g} x {scale:.6g}")
    if abs(value - direct) > max(10.0 * residual, rtol * scale) + 1e-14:
        logger.warning("mollified %.8g and direct %.8g co-area values disagree", value, direct)
    return SurfaceIntegral(value, residual, direct=direct, estimates=dict(zip(widths, estimates.tolist())))
