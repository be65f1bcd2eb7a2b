"""Pairings of the external collisions and the graphs of the expanded Wick pairings.

A graph has the vertices k_1..k_N and k~_1..k~_N~ (the two sides), joined by a perfect
matching. Lines between neighbours on one side are immediate recollisions; removing them
leaves the skeleton, whose lines carry the pairing of the external collisions.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidPairing, ParityMismatch
from .patterns import RecollisionPattern

K, K_TILDE = 0, 1
SIDES = (K, K_TILDE)


def _as_permutation(values):
    permutation = tuple(int(x) for x in values)
    if sorted(permutation) != list(range(1, len(permutation) + 1)):
        raise InvalidPairing(f"{permutation} is not a permutation of 1..{len(permutation)}")
    return permutation


@dataclass(frozen=True)
class Pairing:
    """pi in S_n on the external collisions, with an optional recollision marker a.

    With a marker the externals 1 and a of the k side recollide, and ``permutation``
    pairs the remaining n - 2 externals in order with the other side.
    """

    permutation: tuple
    marker: int = None

    def __post_init__(self):
        object.__setattr__(self, "permutation", _as_permutation(self.permutation))
        if self.marker is not None and not 2 <= self.marker <= self.size:
            raise InvalidPairing(f"marker {self.marker} outside 2..{self.size}")

    @property
    def size(self):
        """n, the number of external collisions on the k side."""
        return len(self.permutation) + (2 if self.marker is not None else 0)

    def __call__(self, j):
        return self.permutation[j - 1]

    def check_pattern(self, pattern):
        if pattern.n != self.size:
            raise InvalidPairing(f"pairing of {self.size} externals against a pattern with n={pattern.n}")
        if self.marker is not None and not pattern.in_recollision_class(self.marker):
            raise InvalidPairing(f"pattern {pattern.m} is not in the recollision class of marker {self.marker}")
        return pattern


def crossing_pairs(permutation):
    """All (a, b), a < b, with pi(b) < pi(a)."""
    values = np.asarray(permutation)
    a, b = np.nonzero(np.triu(values[:, None] > values[None, :], k=1))
    return [(int(i) + 1, int(j) + 1) for i, j in zip(a, b)]


def minimal_crossing_pairs(permutation):
    """For each b crossed from the left, (a, b) with a the smallest index such that pi(a) > pi(b).

    Every c < a then has pi(c) < pi(b).
    """
    pairs = []
    for b in range(2, len(permutation) + 1):
        for a in range(1, b):
            if permutation[a - 1] > permutation[b - 1]:
                pairs.append((a, b))
                break
    return pairs


@dataclass(frozen=True)
class PairingClass:
    kind: str
    crossing: list = field(default_factory=list)
    minimal: list = field(default_factory=list)

    @property
    def first_minimal(self):
        """The minimal pair with the smallest b, or None for direct pairings."""
        return self.minimal[0] if self.minimal else None

    def as_dict(self):
        return {"kind": self.kind, "crossing": self.crossing, "minimal": self.minimal}


def classify(pairing):
    """Direct (pi = id), crossing, or recollision (a marker is set)."""
    if pairing.marker is not None:
        return PairingClass("recollision")
    permutation = pairing.permutation
    if permutation == tuple(range(1, len(permutation) + 1)):
        return PairingClass("direct")
    return PairingClass("crossing", crossing_pairs(permutation), minimal_crossing_pairs(permutation))


class PairingGraph:
    """Perfect matching on the vertices (side, index), 1 <= index <= sizes[side]."""

    def __init__(self, sizes, lines):
        self.sizes = tuple(int(s) for s in sizes)
        self._partner = {}
        for u, v in lines:
            u, v = tuple(u), tuple(v)
            for vertex in (u, v):
                side, index = vertex
                if side not in SIDES or not 1 <= index <= self.sizes[side]:
                    raise InvalidPairing(f"vertex {vertex} outside sides of sizes {self.sizes}")
                if vertex in self._partner:
                    raise InvalidPairing(f"vertex {vertex} lies on two lines")
            if u == v:
                raise InvalidPairing(f"loop at {u}")
            self._partner[u], self._partner[v] = v, u
        if len(self._partner) != sum(self.sizes):
            raise InvalidPairing(f"{sum(self.sizes) - len(self._partner)} vertices left unpaired")

    @classmethod
    def from_pattern(cls, pattern, pairing, tilde_pattern=None):
        """The graph of (m, m~, pi): internal lines from the patterns, external lines from pi."""
        pairing.check_pattern(pattern)
        if tilde_pattern is None:
            if pairing.marker is not None:
                raise InvalidPairing("a recollision pairing needs the pattern of the other side")
            tilde_pattern = pattern
        if tilde_pattern.n != len(pairing.permutation):
            raise InvalidPairing(
                f"{len(pairing.permutation)} paired externals against n~={tilde_pattern.n} on the other side"
            )
        lines = [((K, b), (K, c)) for b, c in pattern.internal_lines()]
        lines += [((K_TILDE, b), (K_TILDE, c)) for b, c in tilde_pattern.internal_lines()]
        externals = list(pattern.mu)
        if pairing.marker is not None:
            first, other = externals[0], externals[pairing.marker - 1]
            lines.append(((K, first), (K, other)))
            externals = [x for x in externals if x not in (first, other)]
        tilde_externals = tilde_pattern.mu
        for j, x in enumerate(externals, start=1):
            lines.append(((K, x), (K_TILDE, tilde_externals[pairing(j) - 1])))
        return cls((pattern.N, tilde_pattern.N), lines)

    def partner(self, vertex):
        return self._partner[tuple(vertex)]

    def lines(self):
        return sorted({tuple(sorted((u, v))) for u, v in self._partner.items()})

    def same_side_lines(self, side):
        return [(u[1], v[1]) for u, v in self.lines() if u[0] == v[0] == side]

    def immediate_lines(self, side):
        return [(i, j) for i, j in self.same_side_lines(side) if j - i == 1]

    def recollisions(self):
        """Same-side lines that are not immediate: (side, i, j) with i < j - 1."""
        return [(side, i, j) for side in SIDES for i, j in self.same_side_lines(side) if j - i > 1]

    def externals(self, side):
        """Indices not on an immediate line, increasing."""
        immediate = {x for line in self.immediate_lines(side) for x in line}
        return [i for i in range(1, self.sizes[side] + 1) if i not in immediate]

    def skeleton(self):
        """The graph with immediate lines removed and vertices relabeled in order."""
        relabel = {}
        for side in SIDES:
            for new, old in enumerate(self.externals(side), start=1):
                relabel[(side, old)] = (side, new)
        lines = [(relabel[u], relabel[v]) for u, v in self.lines() if u in relabel and v in relabel]
        return PairingGraph((len(self.externals(K)), len(self.externals(K_TILDE))), lines)

    def nested(self):
        """(side, (j1, j4), (j2, j3)) for nested same-side lines j1 < j2 < j3 < j4, or None."""
        for side in SIDES:
            reach, outer = 0, None
            for i, j in sorted(self.same_side_lines(side)):
                if outer is not None and j < reach:
                    return side, outer, (i, j)
                if j > reach:
                    reach, outer = j, (i, j)
        return None

    def describe(self):
        return {"sizes": list(self.sizes), "lines": [[list(u), list(v)] for u, v in self.lines()]}


def pattern_from_graph(graph):
    """Recover (m, m~, pi) from a graph without genuine recollisions."""
    recollisions = graph.recollisions()
    if recollisions:
        raise InvalidPairing(f"graph has genuine recollisions {recollisions}")
    patterns = []
    for side in SIDES:
        try:
            patterns.append(RecollisionPattern.from_mu(graph.sizes[side], graph.externals(side)))
        except ParityMismatch as exc:
            raise InvalidPairing(f"side {side} does not decompose into immediate recollisions: {exc}") from exc
    externals, tilde_externals = graph.externals(K), graph.externals(K_TILDE)
    if len(externals) != len(tilde_externals):
        raise InvalidPairing(f"{len(externals)} externals against {len(tilde_externals)} on the other side")
    position = {x: j for j, x in enumerate(tilde_externals, start=1)}
    permutation = [position[graph.partner((K, x))[1]] for x in externals]
    return patterns[0], patterns[1], Pairing(permutation)


def perfect_matchings(items):
    """All perfect matchings of ``items`` as lists of pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for matching in perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield [(first, other), *matching]


def all_graphs(N, tilde_N=None):
    """Every perfect matching of the two sides as a PairingGraph."""
    tilde_N = N if tilde_N is None else tilde_N
    vertices = [(K, i) for i in range(1, N + 1)] + [(K_TILDE, i) for i in range(1, tilde_N + 1)]
    for matching in perfect_matchings(vertices):
        yield PairingGraph((N, tilde_N), matching)


def nested_by_enumeration(graph):
    """Nested lines found by trying every quadruple of positions on each side."""
    for side in SIDES:
        for j1, j2, j3, j4 in itertools.combinations(range(1, graph.sizes[side] + 1), 4):
            if graph.partner((side, j1)) == (side, j4) and graph.partner((side, j2)) == (side, j3):
                return True
    return False
