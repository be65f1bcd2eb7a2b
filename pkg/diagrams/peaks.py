"""Peaks and valleys of permutations, and monotone subsequences of their heights.

Positions are 1-based. A peak is an interior a with pi(a - 1) < pi(a) > pi(a + 1);
a valley is the reverse. The endpoints are neither.
"""

import bisect

import numpy as np


def peaks(permutation):
    values = np.asarray(permutation)
    if len(values) < 3:
        return []
    middle = values[1:-1]
    return [int(a) + 2 for a in np.flatnonzero((values[:-2] < middle) & (middle > values[2:]))]


def valleys(permutation):
    values = np.asarray(permutation)
    if len(values) < 3:
        return []
    middle = values[1:-1]
    return [int(a) + 2 for a in np.flatnonzero((values[:-2] > middle) & (middle < values[2:]))]


def peaks_valleys(permutation):
    """(peaks, valleys); between two consecutive peaks there is exactly one valley."""
    return peaks(permutation), valleys(permutation)


def peak_count(permutation):
    """len(peaks(pi)) on plain sequences, for the enumeration loops."""
    p = list(permutation)
    return sum(1 for a in range(1, len(p) - 1) if p[a - 1] < p[a] > p[a + 1])


def peak_bound(n, K):
    """n^{4K + 3} (2K + 2)^n, the bound on permutations of n with at most K peaks."""
    return n ** (4 * K + 3) * (2 * K + 2) ** n


def exceptional_bound(n, kappa):
    """Bound on permutations of n with neither an increasing nor a decreasing kappa-staircase."""
    K = 4 ** (kappa - 1)
    return n ** (4 * K + 3) * (2 * K + 2) ** n


def _longest_increasing(values):
    """Longest strictly increasing subsequence as a list of positions (0-based)."""
    tails, tail_positions, previous = [], [], [None] * len(values)
    for i, value in enumerate(values):
        j = bisect.bisect_left(tails, value)
        if j == len(tails):
            tails.append(value)
            tail_positions.append(i)
        else:
            tails[j] = value
            tail_positions[j] = i
        previous[i] = tail_positions[j - 1] if j > 0 else None
    chain, i = [], tail_positions[-1] if tail_positions else None
    while i is not None:
        chain.append(i)
        i = previous[i]
    return chain[::-1]


def monotone_subsequence(values, alpha, beta):
    """An increasing run of alpha + 1 or a decreasing run of beta + 1 terms of distinct ``values``.

    Returns ("increasing" | "decreasing", positions) or None; at least alpha * beta + 1
    values always give one.
    """
    values = list(values)
    increasing = _longest_increasing(values)
    if len(increasing) >= alpha + 1:
        return "increasing", increasing[: alpha + 1]
    decreasing = _longest_increasing([-v for v in values])
    if len(decreasing) >= beta + 1:
        return "decreasing", decreasing[: beta + 1]
    return None
