"""Finite box, its retained electron momenta and phonon modes, and the truncated Fock basis.

Momenta are integer multiples of the dual-lattice spacing sqrt(2 pi) / L. Phonon states
are occupation tuples over the retained modes, each entry at most ``n_max`` and their
sum at most ``total``. The coupled basis is electron-major: index = i * phonon_size + a.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kinetics.conf import knob
from wigner.grids import MomentumGrid

from .exceptions import DimensionCap, QuantumError

logger = logging.getLogger(__name__)


def _as_indices(indices, dimension):
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim == 1:
        indices = indices.reshape(-1, dimension)
    if indices.ndim != 2 or indices.shape[1] != dimension:
        raise QuantumError(f"lattice indices must have shape (n, {dimension}), got {indices.shape}")
    if len({tuple(row) for row in indices.tolist()}) != len(indices):
        raise QuantumError("lattice indices must be distinct")
    return indices


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Box of size parameter L in d dimensions with the electron momenta and phonon modes kept."""

    dimension: int
    box: float
    electron_indices: np.ndarray
    mode_indices: np.ndarray

    def __post_init__(self):
        if self.dimension < 1 or self.box <= 0:
            raise QuantumError(f"invalid lattice d={self.dimension}, L={self.box}")
        object.__setattr__(self, "electron_indices", _as_indices(self.electron_indices, self.dimension))
        object.__setattr__(self, "mode_indices", _as_indices(self.mode_indices, self.dimension))
        if not len(self.electron_indices):
            raise QuantumError("at least one electron momentum is needed")
        if np.any(np.all(self.mode_indices == 0, axis=-1)):
            raise QuantumError("the zero mode cannot be retained")
        if self.dimension < 3:
            logger.warning("quantum lattice with d=%d: results are oracle-only", self.dimension)

    @classmethod
    def from_spacing(cls, dimension, spacing, electron_indices, mode_indices):
        return cls(dimension, math.sqrt(2.0 * math.pi) / spacing, electron_indices, mode_indices)

    @classmethod
    def cube(cls, dimension, box, extent, mode_extent=1):
        """Electron momenta on {-extent..extent}^d, modes on the nonzero points of {-mode_extent..mode_extent}^d."""
        grid = MomentumGrid(dimension, extent, box)
        modes = MomentumGrid(dimension, mode_extent, box).indices
        modes = modes[np.any(modes != 0, axis=-1)]
        return cls(dimension, box, grid.indices, modes)

    @property
    def spacing(self):
        return math.sqrt(2.0 * math.pi) / self.box

    @property
    def weight(self):
        """L^{-d}: the cell of the normalized sum on the dual lattice."""
        return self.box ** (-self.dimension)

    @property
    def oracle_only(self):
        return self.dimension < 3

    @property
    def electron_size(self):
        return len(self.electron_indices)

    @property
    def mode_count(self):
        return len(self.mode_indices)

    @property
    def electron_momenta(self):
        return self.spacing * self.electron_indices

    @property
    def modes(self):
        return self.spacing * self.mode_indices

    @cached_property
    def _electron_lookup(self):
        return {tuple(row): i for i, row in enumerate(self.electron_indices.tolist())}

    def locate_electron(self, indices):
        """Positions of integer momenta in the electron basis; -1 where not retained."""
        indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
        return np.array([self._electron_lookup.get(tuple(row), -1) for row in indices.tolist()], dtype=np.int64)

    def partner(self, mode):
        """Position of the mode -k among the retained modes, or None."""
        matches = np.flatnonzero(np.all(self.mode_indices == -self.mode_indices[mode], axis=-1))
        return int(matches[0]) if len(matches) else None

    def electron_grid(self):
        """The MomentumGrid whose points are the electron basis in order, or None if there is none."""
        side = round(self.electron_size ** (1.0 / self.dimension))
        if side % 2 == 0 or side**self.dimension != self.electron_size:
            return None
        grid = MomentumGrid(self.dimension, side // 2, self.box)
        return grid if np.array_equal(grid.indices, self.electron_indices) else None

    def describe(self):
        return {
            "dimension": self.dimension,
            "box": self.box,
            "spacing": self.spacing,
            "electron_indices": self.electron_indices.tolist(),
            "mode_indices": self.mode_indices.tolist(),
            "oracle_only": self.oracle_only,
        }


@dataclass(frozen=True)
class FockTruncation:
    """Per-mode occupancy cap and an optional cap on the total phonon number."""

    n_max: int = 1
    total: int = None

    def __post_init__(self):
        if self.n_max < 0 or (self.total is not None and self.total < 0):
            raise QuantumError(f"invalid truncation n_max={self.n_max}, total={self.total}")

    def allows(self, occupations):
        occupations = np.asarray(occupations)
        inside = np.all(occupations <= self.n_max, axis=-1)
        if self.total is not None:
            inside &= occupations.sum(axis=-1) <= self.total
        return inside


class FockBasis:
    """Product basis |p, n> of the retained electron momenta and phonon configurations."""

    def __init__(self, lattice, truncation=None, cap=None):
        self.lattice = lattice
        self.truncation = truncation or FockTruncation()
        cap = knob("DIMENSION_CAP", cap)
        size = lattice.electron_size * self._phonon_bound()
        if size > cap:
            raise DimensionCap(f"Fock dimension {size} exceeds the cap {cap}")

    def _phonon_bound(self):
        bound = (self.truncation.n_max + 1) ** self.lattice.mode_count
        if self.truncation.total is not None:
            bound = min(bound, math.comb(self.lattice.mode_count + self.truncation.total, self.truncation.total))
        return bound

    @cached_property
    def configurations(self):
        levels = range(self.truncation.n_max + 1)
        rows = [c for c in itertools.product(levels, repeat=self.lattice.mode_count) if self.truncation.allows(c)]
        return np.array(rows, dtype=np.int64).reshape(len(rows), self.lattice.mode_count)

    @cached_property
    def _lookup(self):
        return {tuple(row): a for a, row in enumerate(self.configurations.tolist())}

    @property
    def phonon_size(self):
        return len(self.configurations)

    @property
    def dimension(self):
        return self.lattice.electron_size * self.phonon_size

    def index(self, electron, configuration):
        return int(electron) * self.phonon_size + self._lookup[tuple(configuration)]

    def raised(self, mode):
        """(source, target, n) for every configuration whose ``mode`` can take one more phonon."""
        bumped = self.configurations.copy()
        bumped[:, mode] += 1
        allowed = np.flatnonzero(self.truncation.allows(bumped))
        target = np.array([self._lookup[tuple(row)] for row in bumped[allowed].tolist()], dtype=np.int64)
        return allowed, target, self.configurations[allowed, mode]

    def interior(self):
        """Configurations on which every single creation is still inside the truncation."""
        occupations = self.configurations
        inside = np.all(occupations < self.truncation.n_max, axis=-1)
        if self.truncation.total is not None:
            inside &= occupations.sum(axis=-1) < self.truncation.total
        return np.flatnonzero(inside)

    def describe(self):
        return {
            "lattice": self.lattice.describe(),
            "n_max": self.truncation.n_max,
            "total": self.truncation.total,
            "phonon_size": self.phonon_size,
            "dimension": self.dimension,
        }
