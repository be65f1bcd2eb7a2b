"""Increasing and decreasing kappa-staircases of a permutation.

A staircase is a sequence of stairs a_j, a_j + 1, ..., a_j + h_j (h_j >= 1), each a
consecutive monotone run: up-stairs ending at their tip a_j + h_j for the increasing
kind, down-stairs starting at their tip a_j for the decreasing kind. Consecutive stairs
must satisfy

    (i)   a_j + h_j < a_{j+1}
    (ii)  every tip is a peak
    (iii) tip heights increase (increasing kind) or decrease (decreasing kind)
    (iv)  no peak strictly between a_j and a_{j+1} rises above the later of the two levels
    (v)   the next stair crosses the level of the previous tip (increasing kind), or the
          stair descends through the level of the next tip (decreasing kind).

Once the tips are chosen, (v) pins every bottom a_{j+1} of the increasing kind and
every length h_j, j < kappa, of the decreasing kind; a_1 = t_1 - 1 and h_kappa = 1
are always admissible. The links between consecutive tips are then independent,
so the longest staircase is a longest path among the peaks.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .exceptions import DiagramError
from .peaks import peaks

INCREASING, DECREASING = "increasing", "decreasing"
KINDS = (INCREASING, DECREASING)


@dataclass(frozen=True)
class Staircase:
    kind: str
    bottoms: tuple
    lengths: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DiagramError(f"unknown staircase kind {self.kind!r}")
        if len(self.bottoms) != len(self.lengths):
            raise DiagramError("bottoms and lengths differ in number")

    @property
    def kappa(self):
        return len(self.bottoms)

    @property
    def tips(self):
        if self.kind == INCREASING:
            return tuple(a + h for a, h in zip(self.bottoms, self.lengths))
        return tuple(self.bottoms)

    def stairs(self):
        return [tuple(range(a, a + h + 1)) for a, h in zip(self.bottoms, self.lengths)]

    def as_dict(self):
        return {"kind": self.kind, "bottoms": list(self.bottoms), "lengths": list(self.lengths)}


def staircase_violations(permutation, staircase):
    """Conditions the staircase fails, as short labels; empty when it is valid."""
    p = (None, *permutation)
    n = len(permutation)
    increasing = staircase.kind == INCREASING
    failures = []
    if staircase.kappa == 0:
        return ["empty"]
    for a, h in zip(staircase.bottoms, staircase.lengths):
        if h < 1 or a < 1 or a + h > n:
            return [f"stair ({a}, {h}) out of range"]
        run = [p[x] for x in range(a, a + h + 1)]
        steps = list(zip(run, run[1:]))
        if not all(x < y if increasing else x > y for x, y in steps):
            failures.append(f"stair at {a} is not {staircase.kind}")
    peak_set = set(peaks(permutation))
    tips = staircase.tips
    if any(t not in peak_set for t in tips):
        failures.append("(ii)")
    pairs = list(zip(staircase.bottoms, staircase.lengths, tips))
    for (a, h, t), (b, g, u) in zip(pairs, pairs[1:]):
        if not a + h < b:
            failures.append("(i)")
        if not (p[t] < p[u] if increasing else p[t] > p[u]):
            failures.append("(iii)")
        level = p[t] if increasing else p[u]
        if any(a < x < b and p[x] > level for x in peak_set):
            failures.append("(iv)")
        if increasing:
            crossed = b + 1 <= n and p[b + 1] > p[t] > p[b]
        else:
            crossed = p[a + h - 1] > p[u] > p[a + h]
        if not crossed:
            failures.append("(v)")
    return sorted(set(failures))


def is_staircase(permutation, staircase):
    return not staircase_violations(permutation, staircase)


def _ascent_start(p, t):
    s = t
    while s > 1 and p[s - 1] < p[s]:
        s -= 1
    return s


def _increasing_link(p, peak_list, t, u):
    """Bottom of the stair ending at tip u that follows tip t, or None."""
    if not (t < u and p[t] < p[u]):
        return None
    b = u - 1
    while b >= _ascent_start(p, u) and p[b] > p[t]:
        b -= 1
    if b < _ascent_start(p, u) or b <= t:
        return None
    if any(t < x < b and p[x] > p[t] for x in peak_list):
        return None
    return b


def _decreasing_link(p, peak_list, n, t, u):
    """Length of the down-stair from tip t that hands over to tip u, or None."""
    if not (t < u and p[t] > p[u]):
        return None
    c = t + 1
    while c <= n and p[c] < p[c - 1] and p[c] > p[u]:
        c += 1
    if c > n or not p[c] < p[c - 1] or not c < u:
        return None
    if any(t < x < u and p[x] > p[u] for x in peak_list):
        return None
    return c - t


def longest_staircase(permutation, kind):
    """A staircase of the largest kappa, or None when the permutation has no peak."""
    if kind not in KINDS:
        raise DiagramError(f"unknown staircase kind {kind!r}")
    p = (None, *permutation)
    n = len(permutation)
    peak_list = peaks(permutation)
    if not peak_list:
        return None
    # best[u] = (length, previous tip, link data into u)
    best = {}
    for u in peak_list:
        best[u] = (1, None, None)
        for t in peak_list:
            if t >= u:
                break
            if kind == INCREASING:
                link = _increasing_link(p, peak_list, t, u)
            else:
                link = _decreasing_link(p, peak_list, n, t, u)
            if link is not None and best[t][0] + 1 > best[u][0]:
                best[u] = (best[t][0] + 1, t, link)
    tip = max(peak_list, key=lambda x: best[x][0])
    chain = []
    while tip is not None:
        chain.append((tip, best[tip][2]))
        tip = best[tip][1]
    chain.reverse()
    tips = [t for t, _ in chain]
    if kind == INCREASING:
        bottoms = [tips[0] - 1] + [link for _, link in chain[1:]]
        lengths = [t - b for t, b in zip(tips, bottoms)]
    else:
        bottoms = tips
        lengths = [link for _, link in chain[1:]] + [1]
    return Staircase(kind, tuple(bottoms), tuple(lengths))


def find_staircase(permutation, kind, kappa):
    """A kappa-staircase of the given kind, or None."""
    longest = longest_staircase(permutation, kind)
    if longest is None or longest.kappa < kappa:
        return None
    return Staircase(kind, longest.bottoms[:kappa], longest.lengths[:kappa])


def staircase_by_enumeration(permutation, kind, kappa):
    """First valid kappa-staircase over every tip subset and every bottom or length choice."""
    n = len(permutation)
    for tips in itertools.combinations(peaks(permutation), kappa):
        if kind == INCREASING:
            candidates = (
                Staircase(kind, bottoms, tuple(t - b for t, b in zip(tips, bottoms)))
                for bottoms in itertools.product(*[range(1, t) for t in tips])
            )
        else:
            lengths = itertools.product(*[range(1, n - t + 1) for t in tips])
            candidates = (Staircase(kind, tips, h) for h in lengths)
        for candidate in candidates:
            if is_staircase(permutation, candidate):
                return candidate
    return None


def extend_staircase(permutation, staircase):
    """A (kappa + 1)-staircase built from a higher peak beyond the current ends, or None.

    The increasing kind appends the first peak after the last tip rising above it; the
    decreasing kind prepends the last peak before the first tip rising above it.
    """
    p = (None, *permutation)
    n = len(permutation)
    peak_list = peaks(permutation)
    if staircase.kind == INCREASING:
        last = staircase.tips[-1]
        higher = [x for x in peak_list if x > last and p[x] > p[last]]
        if not higher:
            return None
        bottom = _increasing_link(p, peak_list, last, higher[0])
        extended = Staircase(INCREASING, (*staircase.bottoms, bottom), (*staircase.lengths, higher[0] - bottom))
    else:
        first = staircase.tips[0]
        higher = [x for x in peak_list if x < first and p[x] > p[first]]
        if not higher:
            return None
        length = _decreasing_link(p, peak_list, n, higher[-1], first)
        extended = Staircase(DECREASING, (higher[-1], *staircase.bottoms), (length, *staircase.lengths))
    if not is_staircase(permutation, extended):
        raise DiagramError(f"extension of {staircase.as_dict()} failed: {staircase_violations(permutation, extended)}")
    return extended


@lru_cache(maxsize=None)
def staircase_threshold(alpha, beta):
    """Peak count f(alpha, beta) forcing an increasing (alpha + 1)- or decreasing (beta + 1)-staircase.

    f(alpha, 1) = alpha + 1, f(1, beta) = beta + 1 and f(alpha, beta) = f(alpha - 1, beta) + f(alpha, beta - 1),
    which is C(alpha + beta, alpha).
    """
    if alpha < 1 or beta < 1:
        raise DiagramError(f"alpha and beta must be positive, got ({alpha}, {beta})")
    if beta == 1:
        return alpha + 1
    if alpha == 1:
        return beta + 1
    return staircase_threshold(alpha - 1, beta) + staircase_threshold(alpha, beta - 1)


NOT_APPLICABLE = "not applicable"
COUNTEREXAMPLE = "counterexample"


def ramsey_verdict(permutation, alpha, beta):
    """Which staircase the permutation carries once it has at least f(alpha, beta) peaks."""
    if len(peaks(permutation)) < staircase_threshold(alpha, beta):
        return NOT_APPLICABLE
    if find_staircase(permutation, INCREASING, alpha + 1) is not None:
        return INCREASING
    if find_staircase(permutation, DECREASING, beta + 1) is not None:
        return DECREASING
    return COUNTEREXAMPLE
