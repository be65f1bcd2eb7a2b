"""Immediate-recollision patterns m = (m_0, ..., m_n) with n + 2|m| = N.

A pattern is equivalently the increasing sequence mu(1) < ... < mu(n) of external
positions in {1..N}, mu(0) = 0, mu(n + 1) = N + 1 and mu(j + 1) - mu(j) = 2 m_j + 1.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

from .exceptions import ParityMismatch


def _check_sizes(n, N):
    if n < 0 or N < n or (N - n) % 2:
        raise ParityMismatch(f"need 0 <= n <= N of equal parity, got n={n}, N={N}")


@dataclass(frozen=True)
class RecollisionPattern:
    m: tuple

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        if not self.m or any(x < 0 for x in self.m):
            raise ParityMismatch(f"pattern entries must be nonnegative and at least one, got {self.m}")

    @classmethod
    def from_mu(cls, N, mu):
        """Pattern of the external positions ``mu`` in {1..N}."""
        points = [0, *mu, N + 1]
        gaps = [b - a - 1 for a, b in zip(points, points[1:])]
        if any(g < 0 or g % 2 for g in gaps):
            raise ParityMismatch(f"external positions {tuple(mu)} leave an odd gap in 1..{N}")
        return cls(tuple(g // 2 for g in gaps))

    @property
    def n(self):
        return len(self.m) - 1

    @property
    def N(self):
        return self.n + 2 * sum(self.m)

    @property
    def size(self):
        """M = (n + N) / 2."""
        return (self.n + self.N) // 2

    @cached_property
    def mu(self):
        """(mu(1), ..., mu(n))."""
        points, position = [], 0
        for m in self.m[:-1]:
            position += 2 * m + 1
            points.append(position)
        return tuple(points)

    def _start(self, j):
        return 0 if j == 0 else self.mu[j - 1]

    def I(self):
        return set(self.mu)

    def I_j(self, j):
        start = self._start(j)
        return set(range(start + 1, start + 2 * self.m[j], 2))

    def I_j_complement(self, j):
        start = self._start(j)
        return set(range(start, start + 2 * self.m[j] + 1, 2))

    def J(self):
        return set().union(*(self.I_j(j) for j in range(self.n + 1)))

    def J_complement(self):
        return set().union(*(self.I_j_complement(j) for j in range(self.n + 1)))

    def internal_lines(self):
        """Immediate recollision pairs (b, b + 1), b in J."""
        return sorted((b, b + 1) for b in self.J())

    def in_recollision_class(self, a):
        """Whether m lies in M_a(n, N): m_0 = 0, mu(a) >= 3, and m_1 >= 1 when a = 2."""
        if not 2 <= a <= self.n:
            return False
        return self.m[0] == 0 and self.mu[a - 1] >= 3 and (a != 2 or self.m[1] >= 1)

    def describe(self):
        return {"n": self.n, "N": self.N, "m": list(self.m), "mu": list(self.mu)}


def pattern_count(n, N):
    """|M(n, N)| = C((N - n) / 2 + n, n)."""
    _check_sizes(n, N)
    return math.comb((N - n) // 2 + n, n)


def enumerate_patterns(n, N):
    """All of M(n, N): the (n + 1)-part compositions of (N - n) / 2, by stars and bars."""
    _check_sizes(n, N)
    stars = (N - n) // 2
    patterns = []
    for bars in itertools.combinations(range(stars + n), n):
        edges = (-1, *bars, stars + n)
        patterns.append(RecollisionPattern(tuple(b - a - 1 for a, b in zip(edges, edges[1:]))))
    return patterns


def recollision_patterns(n, N, a):
    """M_a(n, N)."""
    return [pattern for pattern in enumerate_patterns(n, N) if pattern.in_recollision_class(a)]
