"""Energy shells {k : Phi_sigma(p, k) = E} and the branch spectral densities built on them.

rho_sigma(E; p) = int M(k, sigma) delta(E - Phi_sigma(p, k)) dk is the object both the
collision kernel (at E = e(V), p = V) and the oscillatory function Theta (its Fourier
transform in E) are made of.
"""

import logging

import numpy as np
from scipy.interpolate import CubicSpline

from geometry.slabs import critical_points
from geometry.sphere import sphere_quadrature
from geometry.surfaces import shell_quadrature
from kinetics.conf import knob

from .weights import VertexWeight

logger = logging.getLogger(__name__)

CHUNK_RAYS = 400_000
ENVELOPE_RESOLUTION = 8


class BranchShell:
    """Level sets of Phi_sigma(p, .) for a batch of base momenta and energies."""

    def __init__(self, model, sigma, bases, levels):
        self.model = model
        self.sigma = sigma
        self.bases = np.atleast_2d(np.asarray(bases, dtype=float))
        self.levels = np.broadcast_to(np.asarray(levels, dtype=float), self.bases.shape[:1])
        self.centers = critical_points(model, self.bases, sigma)
        self.minima = model.phi(self.bases, self.centers, sigma)

    def psi(self, k):
        return self.model.phi(self.bases[:, None, :], k, self.sigma) - self.levels[:, None]

    def slope(self, k, directions):
        p = self.bases[:, None, :]
        gradient = self.model.electron.gradient(k + p) + self.sigma * self.model.phonon.gradient(k)
        if directions.ndim == 2:
            directions = directions[None, :, :]
        return np.sum(gradient * directions, axis=-1)

    def quadrature(self, directions, weights, r_max=None):
        return shell_quadrature(self.psi, self.centers, directions, weights, r_max=r_max, slope=self.slope)

    def subset(self, rows):
        part = object.__new__(BranchShell)
        part.model, part.sigma = self.model, self.sigma
        part.bases, part.levels = self.bases[rows], self.levels[rows]
        part.centers, part.minima = self.centers[rows], self.minima[rows]
        return part


def branch_integral(model, sigma, bases, levels, F=None, resolution=None):
    """int F(k) delta(level - Phi_sigma(base, k)) dk for each (base, level) row; F defaults to M(., sigma)."""
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    levels = np.broadcast_to(np.asarray(levels, dtype=float), bases.shape[:1])
    if model.coupling.vanishes and F is None:
        return np.zeros(len(bases))
    weight = VertexWeight(model)
    F = F or (lambda k: weight(k, sigma))
    directions, weights = sphere_quadrature(model.dimension, resolution)
    chunk = max(1, CHUNK_RAYS // len(directions))
    out = np.zeros(len(bases))
    for start in range(0, len(bases), chunk):
        rows = slice(start, start + chunk)
        shell = BranchShell(model, sigma, bases[rows], levels[rows]).quadrature(directions, weights)
        if not shell.empty:
            out[rows] = shell.integrate(F(shell.points))
    return out


def spectral_density(model, sigma, p, energies, resolution=None):
    """rho_sigma(E; p) at each of ``energies``."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    bases = np.broadcast_to(np.asarray(p, dtype=float), (len(energies), model.dimension))
    return branch_integral(model, sigma, bases, energies, resolution=resolution)


class BranchSpectrum:
    """rho_sigma(.; p) tabulated on E = E_min + u^2 with a cubic spline in u.

    The spline holds g(u) = 2 u rho(E_min + u^2), the density per unit u, which stays smooth
    at the band edge in every dimension.
    """

    def __init__(self, model, p, sigma, nodes=None, resolution=None, reach=None):
        self.model = model
        self.sigma = sigma
        self.p = np.asarray(p, dtype=float)
        nodes = int(knob("SPECTRUM_NODES", nodes))
        center = critical_points(model, self.p[None, :], sigma)[0]
        self.e_min = float(model.phi(self.p, center, sigma))
        reach = knob("K_MAX", reach) + float(np.linalg.norm(center))
        directions, _ = sphere_quadrature(model.dimension, ENVELOPE_RESOLUTION)
        self.e_max = float(model.phi(self.p, center + reach * directions, sigma).max())
        self.u_max = np.sqrt(self.e_max - self.e_min)
        u = np.linspace(0.0, self.u_max, nodes)
        rho = np.zeros(nodes)
        rho[1:] = spectral_density(model, sigma, self.p, self.e_min + u[1:] ** 2, resolution)
        g = 2.0 * u * rho
        if model.dimension == 1:
            g[0] = 2.0 * g[1] - g[2]
        self.spline = CubicSpline(u, g)
        self._edge_slope = 0.5 * float(self.spline(0.0, 1)) if model.dimension == 2 else 0.0
        logger.debug("branch %+d spectrum on [%.4g, %.4g], mass %.6g", sigma, self.e_min, self.e_max, self.mass)

    @property
    def mass(self):
        """int rho dE = int M(k, sigma) dk."""
        return float(self.spline.integrate(0.0, self.u_max))

    def density(self, energies):
        energies = np.asarray(energies, dtype=float)
        u = np.sqrt(np.clip(energies - self.e_min, 0.0, None))
        inside = (energies > self.e_min) & (u <= self.u_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(inside, self.spline(np.minimum(u, self.u_max)) / (2.0 * u), 0.0)
        return np.where(energies == self.e_min, self._edge_slope, values)
