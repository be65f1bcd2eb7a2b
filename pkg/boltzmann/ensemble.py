"""Weighted particle ensembles standing for a phase space density F_T(X, V)."""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from kinetics import streams
from kinetics.conf import knob
from kinetics.estimates import mean_estimate

from .exceptions import BoltzmannError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianPacket:
    """mass * N(X; position, spread_x^2 I) * N(V; momentum, spread_v^2 I)."""

    position: tuple
    momentum: tuple
    spread_x: float = 1.0
    spread_v: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if len(self.position) != len(self.momentum):
            raise BoltzmannError(f"position and momentum dimensions differ: {self.position} vs {self.momentum}")
        if self.spread_x <= 0 or self.spread_v <= 0:
            raise BoltzmannError("packet spreads must be positive")
        if self.mass <= 0:
            raise BoltzmannError(f"packet mass must be positive, got {self.mass}")

    @property
    def dimension(self):
        return len(self.position)

    def sample(self, rng, count):
        d = self.dimension
        X = np.asarray(self.position, dtype=float) + self.spread_x * rng.standard_normal((count, d))
        V = np.asarray(self.momentum, dtype=float) + self.spread_v * rng.standard_normal((count, d))
        return X, V

    def density(self, X, V):
        X, V = np.asarray(X, dtype=float), np.asarray(V, dtype=float)
        x = stats.norm.pdf(X, loc=np.asarray(self.position), scale=self.spread_x).prod(axis=-1)
        v = stats.norm.pdf(V, loc=np.asarray(self.momentum), scale=self.spread_v).prod(axis=-1)
        return self.mass * x * v


def gibbs_packet(model, mass=1.0, spread_x=1.0):
    """Homogeneous-in-V Gibbs law e^{-beta e(V)} of a quadratic band, as a packet."""
    if model.electron.name != "quadratic":
        raise BoltzmannError(f"Gibbs packet needs a quadratic band, got {model.electron.name}")
    curvature = model.electron.params["curvature"]
    d = model.dimension
    return GaussianPacket((0.0,) * d, (0.0,) * d, spread_x, 1.0 / np.sqrt(model.beta * curvature), mass)


@dataclass
class ParticleEnsemble:
    """Particles (X, V, w) at macroscopic time T.

    ``jumps`` and ``exposure`` count, per particle, the collisions taken and the integrated
    rate int sigma_0(V_s) ds since the ensemble was created.
    """

    X: np.ndarray
    V: np.ndarray
    w: np.ndarray
    T: float = 0.0
    seed: int = None
    epoch: int = 0
    jumps: np.ndarray = field(default=None, repr=False)
    exposure: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.V = np.atleast_2d(np.asarray(self.V, dtype=float))
        self.w = np.broadcast_to(np.asarray(self.w, dtype=float), self.X.shape[:1]).copy()
        if self.X.shape != self.V.shape:
            raise BoltzmannError(f"X has shape {self.X.shape} but V has {self.V.shape}")
        if np.any(self.w <= 0):
            raise BoltzmannError("particle weights must be positive")
        if self.jumps is None:
            self.jumps = np.zeros(len(self.X), dtype=np.int64)
        if self.exposure is None:
            self.exposure = np.zeros(len(self.X))

    @classmethod
    def from_packet(cls, packet, count, seed=None, block_size=None):
        """``count`` equally weighted particles drawn from ``packet``, block by block."""
        seed = knob("SEED", seed)
        X = np.empty((count, packet.dimension))
        V = np.empty((count, packet.dimension))
        for index, rows in streams.blocks(count, block_size):
            rng = streams.stream(seed, streams.BOLTZMANN, 0, index)
            X[rows], V[rows] = packet.sample(rng, rows.stop - rows.start)
        return cls(X, V, packet.mass / count, seed=seed)

    def __len__(self):
        return len(self.X)

    @property
    def dimension(self):
        return self.X.shape[1]

    @property
    def mass(self):
        return float(np.sum(self.w))

    def copy(self, **changes):
        arrays = {name: getattr(self, name).copy() for name in ("X", "V", "w", "jumps", "exposure")}
        return replace(self, **{**arrays, **changes})

    def reflected(self):
        return self.copy(X=-self.X, V=-self.V)

    def snapshot(self):
        """Columns for CSV/npy export."""
        columns = {f"X{i + 1}": self.X[:, i] for i in range(self.dimension)}
        columns.update({f"V{i + 1}": self.V[:, i] for i in range(self.dimension)})
        columns.update({"w": self.w, "jumps": self.jumps, "exposure": self.exposure})
        return columns


def free_flight(ensemble, dt, model):
    """X <- X + dt grad e(V); V, w unchanged."""
    if dt < 0:
        raise BoltzmannError(f"flight time must be nonnegative, got {dt}")
    X = ensemble.X + dt * model.electron.gradient(ensemble.V)
    return ensemble.copy(X=X, T=ensemble.T + dt)


def pair_observable(J, ensemble):
    """<J, F_T> / <1, F_T> over the empirical measure."""
    values = np.asarray(J(ensemble.X, ensemble.V))
    return float(np.sum(ensemble.w * values) / np.sum(ensemble.w))


def observable_estimate(J, ensemble):
    """<J, F_T> with the sampling error of the ensemble; scaled by its mass."""
    values = np.real(np.asarray(J(ensemble.X, ensemble.V)))
    return mean_estimate(values, ensemble.w).scaled(ensemble.mass)


@dataclass(frozen=True)
class HistogramTest:
    statistic: float
    pvalue: float
    counts: list
    expected: list

    def passed(self, level=0.01):
        return self.pvalue > level


def energy_histogram_test(model, ensemble, bins=10):
    """Chi-square of the energies e(V) against Gamma(d/2, 1/beta), the Gibbs energy law of a quadratic band."""
    if model.electron.name != "quadratic":
        raise BoltzmannError(f"the Gibbs energy law is tabulated for quadratic bands only, got {model.electron.name}")
    if model.mu != 0:
        raise BoltzmannError(f"stationarity of e^(-beta e) needs mu = 0, got {model.mu}")
    law = stats.gamma(0.5 * model.dimension, scale=1.0 / model.beta)
    # equiprobable bins; the outer ones are open
    inner = law.ppf(np.linspace(0.0, 1.0, bins + 1)[1:-1])
    counts = np.bincount(np.searchsorted(inner, model.e(ensemble.V), side="right"), minlength=bins)
    expected = np.full(bins, counts.sum() / bins)
    statistic, pvalue = stats.chisquare(counts, expected)
    logger.debug("energy histogram %s, chi2 %.4g, p %.4g", counts.tolist(), statistic, pvalue)
    return HistogramTest(float(statistic), float(pvalue), counts.tolist(), expected.tolist())
