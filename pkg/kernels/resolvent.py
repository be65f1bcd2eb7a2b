"""The oscillatory function Theta and the resolvent functions Upsilon_eta, Upsilon_0+ and Psi.

    Theta(s, p, Omega)     = sum_sigma int e^{-is[Phi_sigma(p, k) + Omega]} M(k, sigma) dk
    Upsilon_eta(alpha, p)  = sum_sigma int M(k, sigma) / (alpha - Phi_sigma(p, k) + i eta) dk
                           = -i int_0^inf e^{is(alpha + i eta)} Theta(s, p, 0) ds

Upsilon_eta is evaluated directly in momentum space and, as a cross-check, through the
time representation, with Theta obtained by FFT of the branch spectral densities.
"""

import itertools
import logging
import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad, trapezoid

from geometry.slabs import critical_points
from geometry.sphere import sphere_quadrature
from geometry.surfaces import normalization, ray_roots, surface_delta_integral
from kinetics.conf import knob
from kinetics.extrapolation import extrapolate
from physics.model import BRANCHES

from .exceptions import QuadratureFail, RouteMismatch
from .shells import BranchShell, BranchSpectrum, spectral_density
from .weights import VertexWeight

logger = logging.getLogger(__name__)

# resonance window half-width in units of eta / |dPhi/dr|
RESONANCE_WINDOW = 30.0
OUTER_PANELS = 8
INNER_PANELS = 12
PANEL_ORDER = 16
CHUNK_POINTS = 1_000_000
# Lorentzian half-widths per energy step of the time route
TIME_ROUTE_RESOLUTION = 40.0
TIME_STEP_PHASE = 0.05


def branch_spectra(model, p, nodes=None, resolution=None):
    return [BranchSpectrum(model, p, sigma, nodes=nodes, resolution=resolution) for sigma in BRANCHES]


def _oscillatory(f, length, s, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            cosine = quad(f, 0.0, length, weight="cos", wvar=s, limit=limit, epsabs=1e-10, epsrel=1e-8)[0]
            sine = quad(f, 0.0, length, weight="sin", wvar=s, limit=limit, epsabs=1e-10, epsrel=1e-8)[0]
        except IntegrationWarning as exc:
            raise QuadratureFail(f"oscillatory quadrature at s = {s:g}: {exc}") from exc
    return cosine - 1j * sine


def branch_theta(spectrum, s, limit=None):
    """int rho_sigma(E; p) e^{-isE} dE."""
    limit = int(knob("QUADRATURE_LIMIT", limit))
    if s == 0:
        return complex(spectrum.mass)
    width = spectrum.e_max - spectrum.e_min
    value = _oscillatory(lambda x: float(spectrum.density(spectrum.e_min + x)), width, abs(s), limit)
    value *= np.exp(-1j * abs(s) * spectrum.e_min)
    return value if s > 0 else np.conj(value)


def theta_fn(model, s, p, omega=0.0, spectra=None):
    """Theta(s, p, Omega) by adaptive oscillatory quadrature over the branch spectral densities."""
    if model.coupling.vanishes:
        return 0j
    spectra = spectra or branch_spectra(model, p)
    return complex(np.exp(-1j * s * omega) * sum(branch_theta(spectrum, s) for spectrum in spectra))


@dataclass(frozen=True)
class DecayFit:
    slope: float
    full_slope: float
    times: list
    envelope: list


def theta_decay_slope(model, p=None, omega=0.0, window=(10.0, 100.0), full_window=(1.0, 100.0), points=24):
    """Log-log slope of sum_sigma |Theta_sigma(s)| over ``window`` (and over ``full_window``)."""
    p = np.zeros(model.dimension) if p is None else np.asarray(p, dtype=float)
    spectra = branch_spectra(model, p)
    times = np.geomspace(full_window[0], full_window[1], points)
    envelope = np.array([sum(abs(branch_theta(spectrum, s)) for spectrum in spectra) for s in times])
    inside = (times >= window[0] * (1 - 1e-12)) & (times <= window[1] * (1 + 1e-12))
    slope = np.polyfit(np.log(times[inside]), np.log(envelope[inside]), 1)[0]
    full_slope = np.polyfit(np.log(times), np.log(envelope), 1)[0]
    logger.info("Theta decay slope %.4f on %s, %.4f on %s", slope, window, full_slope, full_window)
    return DecayFit(float(slope), float(full_slope), times.tolist(), envelope.tolist())


def _direct_branch(model, sigma, eta, alpha, p, resolution, order):
    d = model.dimension
    weight = VertexWeight(model)
    shell = BranchShell(model, sigma, p[None, :], alpha)
    center = shell.centers[0]
    reach = knob("K_MAX") + float(np.linalg.norm(center))
    directions, weights = sphere_quadrature(d, resolution)

    # panels cluster around the resonance alpha = Phi on each ray
    roots = ray_roots(shell.psi, shell.centers, directions, reach, slope=shell.slope)[0]
    hit = np.isfinite(roots)
    root = np.where(hit, roots, reach)
    slope = np.abs(shell.slope(center + root[None, :, None] * directions[None, :, :], directions)[0])
    with np.errstate(divide="ignore"):
        width = np.where(hit, RESONANCE_WINDOW * eta / slope, 0.0)
    a = np.clip(root - width, 0.0, reach)
    b = np.clip(root + width, 0.0, reach)
    edges = np.concatenate(
        [
            np.linspace(0.0, a, OUTER_PANELS + 1)[:-1],
            np.linspace(a, b, INNER_PANELS + 1)[:-1],
            np.linspace(b, np.full_like(b, reach), OUTER_PANELS + 1),
        ]
    ).T
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    r = (0.5 * (edges[:, 1:] + edges[:, :-1]))[..., None] + half[..., None] * x
    rw = half[..., None] * w

    chunk = max(1, CHUNK_POINTS // r[0].size)
    total = 0j
    for start in range(0, len(directions), chunk):
        rows = slice(start, start + chunk)
        k = center + r[rows, ..., None] * directions[rows, None, None, :]
        f = weight(k, sigma) * r[rows] ** (d - 1) / (alpha - model.phi(p, k, sigma) + 1j * eta)
        total += np.sum(weights[rows, None, None] * rw[rows] * f)
    return total * normalization(d)


def upsilon_direct(model, eta, alpha, p, resolution=None, order=PANEL_ORDER):
    """Momentum-space Upsilon_eta with its error estimate (change on halving both resolutions)."""
    p = np.asarray(p, dtype=float)
    n = knob("SPHERE_RESOLUTION", resolution)
    fine = sum(_direct_branch(model, s, eta, alpha, p, n, order) for s in BRANCHES)
    coarse = sum(_direct_branch(model, s, eta, alpha, p, max(1, n // 2), max(2, order // 2)) for s in BRANCHES)
    return complex(fine), float(abs(fine - coarse))


def _time_route(rho, lo, eta, alpha, step):
    span = max(abs(alpha - lo), abs(alpha - lo - step * (len(rho) - 1)), 1.0)
    size = 1 << int(math.ceil(math.log2(max(len(rho), 2.0 * math.pi * span / (step * TIME_STEP_PHASE)))))
    ds = 2.0 * math.pi / (size * step)
    count = size // 2
    s = ds * np.arange(count + 1)
    theta = step * np.exp(-1j * s * lo) * np.fft.fft(rho, n=size)[: count + 1]
    return -1j * trapezoid(np.exp(1j * s * (alpha + 1j * eta)) * theta, dx=ds)


def upsilon_time(model, eta, alpha, p, spectra=None):
    """Time-representation Upsilon_eta, -i int e^{is(alpha + i eta)} Theta(s) ds, with its error estimate."""
    spectra = spectra or branch_spectra(model, p)
    lo = min(spectrum.e_min for spectrum in spectra)
    hi = max(spectrum.e_max for spectrum in spectra)
    values = []
    for factor in (1.0, 2.0):
        step = factor * math.pi * eta / TIME_ROUTE_RESOLUTION
        energies = lo + step * np.arange(int(math.ceil((hi - lo) / step)) + 1)
        rho = sum(spectrum.density(energies) for spectrum in spectra)
        values.append(_time_route(rho, lo, eta, alpha, step))
    return complex(values[0]), float(abs(values[0] - values[1]))


@dataclass(frozen=True)
class RouteComparison:
    direct: complex
    time: complex
    direct_error: float
    time_error: float
    tolerance: float

    @property
    def agreed(self):
        return abs(self.direct - self.time) <= self.tolerance


def compare_routes(model, eta, alpha, p, rtol=None, resolution=None):
    rtol = knob("ROUTE_RTOL", rtol)
    direct, direct_error = upsilon_direct(model, eta, alpha, p, resolution)
    time, time_error = upsilon_time(model, eta, alpha, p, spectra=branch_spectra(model, p, resolution=resolution))
    tolerance = max(10.0 * (direct_error + time_error), rtol * abs(direct))
    return RouteComparison(direct, time, direct_error, time_error, tolerance)


def upsilon(model, eta, alpha, p, check=True, rtol=None, resolution=None):
    """Upsilon_eta(alpha, p), the direct value after both routes agree."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if model.coupling.vanishes:
        return 0j
    if not check:
        return upsilon_direct(model, eta, alpha, p, resolution)[0]
    routes = compare_routes(model, eta, alpha, p, rtol, resolution)
    logger.debug("Upsilon routes %s vs %s (tolerance %.3g)", routes.direct, routes.time, routes.tolerance)
    if not routes.agreed:
        raise RouteMismatch(
            f"direct {routes.direct:.8g} and time {routes.time:.8g} differ by "
            f"{abs(routes.direct - routes.time):.3g} > {routes.tolerance:.3g}"
        )
    return routes.direct


@dataclass(frozen=True)
class BoundaryResolvent:
    value: complex
    real_residual: float = 0.0
    imag_extrapolated: float = 0.0
    imag_surface: float = 0.0
    ladder: dict = field(default_factory=dict)


def _surface_weight(model, sigma, alpha, p, method, resolution):
    if method == "direct":
        return float(spectral_density(model, sigma, p, alpha, resolution)[0])
    if method != "mollified":
        raise ValueError(f"unknown surface method {method!r}")
    center = critical_points(model, p[None, :], sigma)[0]
    reach = knob("K_MAX") + float(np.linalg.norm(center))
    weight = VertexWeight(model)
    result = surface_delta_integral(
        lambda k: weight(k, sigma),
        lambda k: model.phi(p, k, sigma) - alpha,
        (center - reach, center + reach),
        resolution=resolution,
        center=center,
    )
    return result.value


def upsilon_boundary(model, alpha, p, etas=None, method="direct", resolution=None):
    """Upsilon_0+(alpha, p).

    The imaginary part is -pi sum_sigma rho_sigma(alpha; p) on the energy surfaces; the real
    part is Re Upsilon_eta extrapolated linearly in eta over ``etas``, which also gives an
    independent imaginary part for comparison.
    """
    p = np.asarray(p, dtype=float)
    if model.dimension < 3:
        logger.warning("boundary resolvent in d=%d is oracle-only", model.dimension)
    if model.coupling.vanishes:
        return BoundaryResolvent(0j)
    etas = sorted(knob("ETA_LADDER", etas), reverse=True)
    imag_surface = -math.pi * sum(_surface_weight(model, s, alpha, p, method, resolution) for s in BRANCHES)
    ladder = [upsilon_direct(model, eta, alpha, p, resolution)[0] for eta in etas]
    real, real_residual = extrapolate(etas, [v.real for v in ladder], power=1)
    imag, imag_residual = extrapolate(etas, [v.imag for v in ladder], power=1)
    if abs(imag - imag_surface) > max(1e-2 * abs(imag_surface), 10.0 * imag_residual) + 1e-12:
        logger.warning("Im Upsilon_0+ surface %.8g vs eta-extrapolated %.8g", imag_surface, imag)
    return BoundaryResolvent(
        complex(float(real), imag_surface),
        real_residual,
        float(imag),
        imag_surface,
        {eta: [v.real, v.imag] for eta, v in zip(etas, ladder)},
    )


def psi_function(model, V, etas=None, method="direct", resolution=None):
    """Psi(V) = Upsilon_0+(e(V), V); -2 Im Psi(V) is the total cross section."""
    V = np.asarray(V, dtype=float)
    return upsilon_boundary(model, float(model.e(V)), V, etas=etas, method=method, resolution=resolution)


class ResolventFunction:
    """Upsilon_eta on a quantized (alpha, p) grid with multilinear interpolation between nodes.

    Nodes are computed on first use and shared afterwards; eta defaults to 1/t.
    """

    def __init__(self, model, eta=None, t=None, step=None, resolution=None):
        if eta is None:
            if not t:
                raise ValueError("give eta or a positive time t")
            eta = 1.0 / t
        if eta <= 0:
            raise ValueError(f"eta must be positive, got {eta}")
        self.model = model
        self.eta = float(eta)
        self.step = float(knob("RESOLVENT_GRID", step))
        self.resolution = resolution
        self._nodes = {}
        self._lock = threading.Lock()

    def node(self, index):
        with self._lock:
            if index in self._nodes:
                return self._nodes[index]
        alpha, *p = (i * self.step for i in index)
        value = upsilon(self.model, self.eta, alpha, np.array(p), check=False, resolution=self.resolution)
        with self._lock:
            return self._nodes.setdefault(index, value)

    def __call__(self, alpha, p):
        coords = np.concatenate([[alpha], np.asarray(p, dtype=float)]) / self.step
        base = np.floor(coords).astype(int)
        frac = coords - base
        total = 0j
        for corner in itertools.product((0, 1), repeat=len(coords)):
            w = float(np.prod([f if c else 1.0 - f for f, c in zip(frac, corner)]))
            if w > 0:
                total += w * self.node(tuple(int(b + c) for b, c in zip(base, corner)))
        return total

    def __len__(self):
        return len(self._nodes)


@dataclass(frozen=True)
class Resummation:
    partial_sums: list
    limit: complex
    ratio: float

    @property
    def converged(self):
        return self.ratio < 1.0

    def error(self, terms=None):
        last = self.partial_sums[-1 if terms is None else terms - 1]
        return abs(last - self.limit)


def resummed_propagator(model, alpha, p, omega=0.0, eta=0.1, lam=None, terms=40, psi=None, resolution=None):
    """Partial sums of sum_m R^{m+1} (lam^2 Psi)^m with R = 1/(alpha - e(p) - Omega + i eta).

    For |R lam^2 Psi| < 1 they converge to 1/(alpha - e(p) - Omega - lam^2 Psi + i eta).
    """
    p = np.asarray(p, dtype=float)
    lam = model.lam if lam is None else lam
    if psi is None:
        psi = upsilon(model, eta, alpha, p, check=False, resolution=resolution)
    free = 1.0 / (alpha - float(model.e(p)) - omega + 1j * eta)
    shift = lam**2 * psi
    powers = free ** (np.arange(terms) + 1) * shift ** np.arange(terms)
    limit = 1.0 / (alpha - float(model.e(p)) - omega - shift + 1j * eta)
    return Resummation(np.cumsum(powers).tolist(), complex(limit), float(abs(free * shift)))
