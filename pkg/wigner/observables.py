"""Test functions J(X, V), their operator kernels and the pairing <J, W^eps>.

Hats are Fourier transforms in X only, in the normalized measure. The kernel of the
observable is O_eps(u, v) = conj(J^_eps(v - u, (u + v) / 2)) with
J^_eps(xi, v) = eps^{-d} J^(xi / eps, v), so that <J, W^eps_gamma> = Tr(gamma O_eps).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from kinetics.conf import knob

from .exceptions import NormUnbounded, PairingMismatch, WignerError

logger = logging.getLogger(__name__)


def _peak(power, center, width):
    """max over v of |v^n exp(-(v - c)^2 / 2 b^2)|."""
    if power == 0:
        return 1.0
    root = math.sqrt(center**2 + 4.0 * power * width**2)
    candidates = (0.5 * (center + root), 0.5 * (center - root))
    return max(abs(v) ** power * math.exp(-((v - center) ** 2) / (2.0 * width**2)) for v in candidates)


@dataclass(frozen=True)
class GaussianObservable:
    """J(X, V) = exp(-|X - X0|^2 / 2a^2) prod_i V_i^{n_i} exp(-|V - V0|^2 / 2b^2).

    Without ``v_width`` the V factor is the bare monomial (1 by default).
    """

    x_center: tuple
    x_width: float = 1.0
    v_center: tuple = None
    v_width: float = None
    powers: tuple = None

    real = True

    def __post_init__(self):
        if self.x_width <= 0 or (self.v_width is not None and self.v_width <= 0):
            raise WignerError("observable widths must be positive")

    @property
    def dimension(self):
        return len(self.x_center)

    def _powers(self):
        return np.zeros(self.dimension, dtype=int) if self.powers is None else np.asarray(self.powers, dtype=int)

    def position_factor(self, X):
        X = np.asarray(X, dtype=float)
        return np.exp(-np.sum((X - np.asarray(self.x_center)) ** 2, axis=-1) / (2.0 * self.x_width**2))

    def momentum_factor(self, V):
        V = np.asarray(V, dtype=float)
        values = np.prod(V ** self._powers(), axis=-1)
        if self.v_width is not None:
            center = np.zeros(self.dimension) if self.v_center is None else np.asarray(self.v_center)
            values = values * np.exp(-np.sum((V - center) ** 2, axis=-1) / (2.0 * self.v_width**2))
        return values

    def __call__(self, X, V):
        return self.position_factor(X) * self.momentum_factor(V)

    def fourier(self, xi, V):
        """J^(xi, V) = a^d exp(-a^2 |xi|^2 / 2 - i xi . X0) times the V factor."""
        xi = np.asarray(xi, dtype=float)
        a = self.x_width
        phase = xi @ np.asarray(self.x_center, dtype=float)
        position = a**self.dimension * np.exp(-0.5 * a**2 * np.sum(xi * xi, axis=-1) - 1j * phase)
        return position * self.momentum_factor(V)

    def scaled_fourier(self, xi, V, eps=1.0, grid=None):
        return eps ** (-self.dimension) * self.fourier(np.asarray(xi, dtype=float) / eps, V)

    def norm(self):
        """int sup_V |J^(xi, V)| dxi, which is sup |V factor| for a Gaussian in X."""
        powers = self._powers()
        if self.v_width is None:
            return math.inf if powers.any() else 1.0
        center = np.zeros(self.dimension) if self.v_center is None else np.asarray(self.v_center, dtype=float)
        return float(np.prod([_peak(int(n), float(c), self.v_width) for n, c in zip(powers, center)]))


@dataclass(frozen=True)
class MomentumObservable:
    """J(X, V) = g(V); its X-transform is the lattice delta in xi."""

    function: object
    bound: float = None
    name: str = "g"

    real = True

    def __call__(self, X, V):
        return self.function(np.asarray(V, dtype=float))

    def scaled_fourier(self, xi, V, eps=1.0, grid=None):
        if grid is None:
            raise WignerError("a momentum observable is only defined on a lattice")
        xi = np.asarray(xi, dtype=float)
        at_zero = np.all(np.abs(xi) < 1e-12 * grid.spacing, axis=-1)
        return np.where(at_zero, grid.box**grid.dimension * self.function(np.asarray(V, dtype=float)), 0.0)

    def norm(self):
        return math.inf if self.bound is None else float(self.bound)


def constant_observable():
    return MomentumObservable(lambda V: np.ones(np.shape(V)[:-1]), bound=1.0, name="one")


def make_observable(name, **params):
    if name == "gaussian":
        return GaussianObservable(**params)
    if name == "constant":
        return constant_observable()
    raise WignerError(f"unknown observable {name!r}")


def _difference_lattice(grid):
    axes = [np.arange(-2 * grid.extent, 2 * grid.extent + 1)] * grid.dimension
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.dimension)


def jeps_norm(J, grid=None, eps=1.0, cap=None, chunk=256):
    """||J|| = int sup_v |J^_eps(xi, v)| dxi; on a grid, xi over momentum differences and v over the half lattice."""
    cap = knob("JEPS_CAP", cap)
    if grid is None:
        value = J.norm()
    else:
        steps = _difference_lattice(grid)
        xi = grid.spacing * steps
        v = 0.5 * grid.spacing * steps
        value = 0.0
        for start in range(0, len(xi), chunk):
            block = xi[start : start + chunk]
            values = np.abs(J.scaled_fourier(block[:, None, :], v[None, :, :], eps, grid))
            value += float(values.max(axis=-1).sum())
        value *= grid.weight
    if not value <= cap:
        raise NormUnbounded(f"observable norm {value:.6g} exceeds cap {cap:g}")
    return value


def observable_kernel(J, grid, eps=1.0):
    """Dense O_eps(u, v) over the grid momenta."""
    p = grid.points
    u, v = p[:, None, :], p[None, :, :]
    return np.conj(J.scaled_fourier(v - u, 0.5 * (u + v), eps, grid))


def trace_pairing(density, kernel):
    """Tr(gamma O) = int int gamma^(p, p') O(p', p) dp dp'."""
    return complex(np.sum(density.kernel * kernel.T) * density.grid.weight**2)


def wigner_pairing(J, wigner):
    """sum over v of the half lattice and the compatible xi of conj(J^_eps(xi, v)) W^(xi, v), cell-weighted."""
    grid = wigner.grid
    total = 0.0j
    for v in wigner.half_lattice():
        s, rows = wigner.compatible(v)
        if not len(rows):
            continue
        i = grid.indices[rows]
        cols = grid.locate(s - i)
        xi = grid.spacing * (2 * i - s)
        values = np.conj(J.scaled_fourier(xi, np.broadcast_to(v, xi.shape), wigner.scale, grid))
        total += np.dot(values, wigner.density.kernel[rows, cols])
    return total * wigner.xi_weight * wigner.v_weight


@dataclass(frozen=True)
class Pairing:
    value: complex
    trace: complex

    @property
    def defect(self):
        return abs(self.value - self.trace)

    def as_dict(self):
        return {
            "value": [self.value.real, self.value.imag],
            "trace": [self.trace.real, self.trace.imag],
            "defect": self.defect,
        }


def pair(J, wigner, rtol=None, check=True):
    """<J, W^eps>, checked against Tr(gamma O_eps); real for real J."""
    rtol = knob("PAIRING_RTOL", rtol)
    value = wigner_pairing(J, wigner)
    if check:
        trace = trace_pairing(wigner.density, observable_kernel(J, wigner.grid, wigner.scale))
        result = Pairing(value, trace)
        if result.defect > rtol * max(1.0, abs(value)):
            raise PairingMismatch(f"<J, W> = {value:.12g} but Tr(gamma O) = {trace:.12g}")
        logger.debug("pairing %.12g, trace defect %.3g", value.real, result.defect)
    return value.real if J.real else value


def operator_norm_squared(kernel, grid, iterations=2000, tol=1e-10, seed=0):
    """||O O*|| on l^2(L^{-d} counting measure) by power iteration."""
    A = grid.weight * kernel
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(len(A)) + 1j * rng.standard_normal(len(A))
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(iterations):
        y = A @ (A.conj().T @ x)
        new = float(np.real(np.vdot(x, y)))
        size = np.linalg.norm(y)
        if size == 0:
            return 0.0
        x = y / size
        if abs(new - estimate) <= tol * max(1.0, abs(new)):
            return new
        estimate = new
    logger.warning("power iteration stopped after %d steps", iterations)
    return estimate


def momentum_pairing(function, density):
    """L^{-d} sum_p g(p) gamma^(p, p)."""
    return float(np.real(np.sum(function(density.grid.points) * np.diag(density.kernel))) * density.grid.weight)
