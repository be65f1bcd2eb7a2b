"""The phonon emission/absorption collision kernel.

sigma(V, U) is the rate of the jump U -> V. Leaving V, the particle lands on

    emission   (sigma = +1):  e(U) = e(V) - omega(U - V),  weight N + 1
    absorption (sigma = -1):  e(U) = e(V) + omega(U - V),  weight N

with prefactor 2 pi |Q(U - V)|^2. Writing U = V + k these shells are the zero sets of
e(V) - Phi_sigma(V, k), so the branch cross sections are 2 pi rho_sigma(e(V); V).
"""

import logging
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from geometry.sphere import sphere_quadrature
from geometry.surfaces import expand_radius, ray_roots
from kinetics.conf import knob
from physics.model import ABSORPTION, BRANCHES, EMISSION

from .exceptions import NoOpenChannel
from .shells import CHUNK_RAYS, ENVELOPE_RESOLUTION, BranchShell, branch_integral
from .weights import VertexWeight

logger = logging.getLogger(__name__)

TABLE_NODES = 512
ENVELOPE_SAFETY = 2.0
ENVELOPE_PILOT = 64
MAX_REJECTION_ROUNDS = 10_000
SAMPLE_CHUNK = 4096


class CrossSectionTable:
    """Branch cross sections of an isotropic model as functions of |V|."""

    def __init__(self, kernel, speed_max=None, nodes=TABLE_NODES):
        self.speed_max = float(speed_max if speed_max is not None else 1.5 * knob("K_MAX"))
        self.speeds = np.linspace(0.0, self.speed_max, nodes)
        momenta = np.zeros((nodes, kernel.model.dimension))
        momenta[:, 0] = self.speeds
        self.values = kernel.exact_branch_cross_sections(momenta)
        self._interpolants = [PchipInterpolator(self.speeds, self.values[:, i]) for i in range(len(BRANCHES))]

    def covers(self, speeds):
        return speeds <= self.speed_max

    def __call__(self, speeds):
        return np.clip(np.stack([f(speeds) for f in self._interpolants], axis=-1), 0.0, None)


class CollisionKernel:
    def __init__(self, model, resolution=None, tabulate=None):
        self.model = model
        self.weight = VertexWeight(model)
        self.resolution = resolution
        self.tabulate = model.is_isotropic if tabulate is None else tabulate
        self._table = None

    @property
    def table(self):
        if self._table is None and self.tabulate and not self.model.coupling.vanishes:
            logger.info("tabulating cross sections of %s", self.model.name)
            self._table = CrossSectionTable(self)
        return self._table

    def branch_weight(self, V, U, sigma):
        """2 pi |Q(U - V)|^2 (N(U - V) + (sigma + 1) / 2)."""
        return 2.0 * math.pi * self.weight(np.asarray(U) - np.asarray(V), sigma)

    def energy_mismatch(self, V, U, sigma):
        """e(U) - e(V) + sigma omega(U - V); zero on the branch shell."""
        U, V = np.asarray(U, dtype=float), np.asarray(V, dtype=float)
        return self.model.e(U) - self.model.e(V) + sigma * self.model.omega(U - V)

    def exact_branch_cross_sections(self, V):
        V = np.atleast_2d(np.asarray(V, dtype=float))
        levels = self.model.e(V)
        columns = [
            2.0 * math.pi * branch_integral(self.model, s, V, levels, resolution=self.resolution) for s in BRANCHES
        ]
        return np.stack(columns, axis=-1)

    def branch_cross_sections(self, V):
        """(n, 2) array of emission and absorption cross sections, in ``BRANCHES`` order."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        if self.model.coupling.vanishes:
            return np.zeros((len(V), len(BRANCHES)))
        table = self.table
        if table is None:
            return self.exact_branch_cross_sections(V)
        speeds = np.linalg.norm(V, axis=-1)
        out = np.empty((len(V), len(BRANCHES)))
        near = table.covers(speeds)
        out[near] = table(speeds[near])
        if not near.all():
            out[~near] = self.exact_branch_cross_sections(V[~near])
        return out

    def total_cross_section(self, V):
        return self.branch_cross_sections(V).sum(axis=-1)

    def sample_post_collision(self, V, rng, rates=None):
        """Post-collision momenta U with density sigma(U, V) / sigma_0(V), and the branch taken.

        The branch is drawn from the branch cross sections. On the branch shell a direction
        is drawn uniformly from the sphere around the shell's critical point and accepted
        with probability proportional to M r^{d-1} / |dPhi/dr|, the co-area density.
        """
        V = np.atleast_2d(np.asarray(V, dtype=float))
        rates = self.branch_cross_sections(V) if rates is None else rates
        total = rates.sum(axis=-1)
        if np.any(total <= 0):
            where = V[int(np.argmin(total))].tolist()
            raise NoOpenChannel(f"sigma_0 = 0 at V = {where}")
        branch = np.where(rng.random(len(V)) * total < rates[:, 0], EMISSION, ABSORPTION)
        U = np.empty_like(V)
        for sigma in BRANCHES:
            rows = np.flatnonzero(branch == sigma)
            for start in range(0, len(rows), SAMPLE_CHUNK):
                part = rows[start : start + SAMPLE_CHUNK]
                shell = BranchShell(self.model, sigma, V[part], self.model.e(V[part]))
                U[part] = V[part] + self._sample_shell(shell, rng)
        return U, branch

    def _density(self, shell, directions):
        """Co-area density M r^{d-1} / |dPhi/dr| of each row's shell along ``directions``, and the landing points.

        ``directions`` are shared (m, d) or per row (n, m, d).
        """
        d = self.model.dimension
        bracket = expand_radius(shell.psi, shell.centers, directions)
        radii = ray_roots(shell.psi, shell.centers, directions, bracket, slope=shell.slope)
        hit = np.isfinite(radii)
        r = np.where(hit, radii, 0.0)
        u = directions if directions.ndim == 3 else directions[None, :, :]
        k = shell.centers[:, None, :] + r[..., None] * u
        with np.errstate(divide="ignore", invalid="ignore"):
            jacobian = r ** (d - 1) / np.abs(shell.slope(k, directions))
            density = np.where(hit, self.weight(k, shell.sigma) * jacobian, 0.0)
        return density, k

    def _probe_max(self, shell, directions):
        """Largest density of each row along shared ``directions``, in row chunks."""
        best = np.zeros(len(shell.bases))
        chunk = max(1, CHUNK_RAYS // len(directions))
        for start in range(0, len(best), chunk):
            rows = np.arange(start, min(start + chunk, len(best)))
            best[rows] = self._density(shell.subset(rows), directions)[0].max(axis=-1)
        return best

    def _envelope(self, shell, rng):
        d = self.model.dimension
        resolution = ENVELOPE_RESOLUTION
        best = self._probe_max(shell, sphere_quadrature(d, resolution)[0])
        # towards and away from the origin, where radial couplings peak
        norms = np.linalg.norm(shell.centers, axis=-1, keepdims=True)
        axis = np.where(norms > 0, shell.centers / np.where(norms > 0, norms, 1.0), np.eye(d)[0])
        best = np.maximum(best, self._density(shell, np.stack([axis, -axis], axis=1))[0].max(axis=-1))
        # narrow couplings fall between coarse probes; refine up to the quadrature of the rates
        limit = knob("SPHERE_RESOLUTION", self.resolution)
        while (best <= 0).any() and resolution < limit:
            resolution = min(2 * resolution, limit)
            rows = np.flatnonzero(best <= 0)
            best[rows] = self._probe_max(shell.subset(rows), sphere_quadrature(d, resolution)[0])
        pilot = rng.normal(size=(len(best), ENVELOPE_PILOT, d))
        pilot /= np.linalg.norm(pilot, axis=-1, keepdims=True)
        best = np.maximum(best, self._density(shell, pilot)[0].max(axis=-1))
        return ENVELOPE_SAFETY * best

    def _sample_shell(self, shell, rng):
        d = self.model.dimension
        envelope = self._envelope(shell, rng)
        if np.any(envelope <= 0):
            where = shell.bases[int(np.argmin(envelope))].tolist()
            raise NoOpenChannel(f"branch {shell.sigma:+d} is open at V = {where} but no shell density was found")
        out = np.empty_like(shell.bases)
        pending = np.arange(len(shell.bases))
        for _ in range(MAX_REJECTION_ROUNDS):
            if not len(pending):
                return out
            directions = rng.normal(size=(len(pending), 1, d))
            directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
            density, k = self._density(shell.subset(pending), directions)
            density, k = density[:, 0], k[:, 0]
            # an exceeded envelope is raised and the proposal redrawn
            over = density > envelope[pending]
            if over.any():
                logger.warning("raising the envelope of %d rows", int(over.sum()))
                envelope[pending[over]] = ENVELOPE_SAFETY * density[over]
            accept = ~over & (rng.random(len(pending)) * envelope[pending] < density)
            out[pending[accept]] = k[accept]
            pending = pending[~accept]
        raise NoOpenChannel(f"rejection sampling did not finish for {len(pending)} momenta")


def kernel_table(kernel, momenta):
    """Rows of (V, sigma_0, emission, absorption) for export."""
    momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
    rates = kernel.branch_cross_sections(momenta)
    rows = []
    for V, (emission, absorption) in zip(momenta, rates):
        row = {f"V{i + 1}": float(v) for i, v in enumerate(V)}
        row.update(
            {"sigma0": float(emission + absorption), "emission": float(emission), "absorption": float(absorption)}
        )
        rows.append(row)
    return rows
