"""Exhaustive and sampled checks of the peak-counting and staircase lemmas.

Exhaustive runs split S_n into n lexicographic blocks by first element and merge the
block counters in block order; sampled runs draw uniform permutations from the
DIAGRAMS stream family in fixed-size blocks.
"""

import itertools
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from kinetics.conf import knob
from kinetics.estimates import Estimate
from kinetics.streams import DIAGRAMS, blocks, stream

from .exceptions import DiagramError, TooLarge
from .pairings import all_graphs, nested_by_enumeration
from .peaks import exceptional_bound, monotone_subsequence, peak_bound, peak_count, peaks
from .staircases import (
    COUNTEREXAMPLE,
    DECREASING,
    INCREASING,
    NOT_APPLICABLE,
    find_staircase,
    ramsey_verdict,
    staircase_threshold,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE, SAMPLING = "exhaustive", "sampling"
COUNTEREXAMPLE_LIMIT = 20

# sub-stream tags
PEAKS_STREAM, RAMSEY_STREAM, EXCEPTIONAL_STREAM = range(1, 4)


def block_permutations(n, first):
    """Permutations of 1..n starting with ``first``, in lexicographic order."""
    rest = [x for x in range(1, n + 1) if x != first]
    for tail in itertools.permutations(rest):
        yield (first, *tail)


def all_permutations(n):
    for first in range(1, n + 1):
        yield from block_permutations(n, first)


def run_blocks(worker, n, args=(), workers=1):
    """``worker(n, first, *args)`` for every first element, serially or on a process pool."""
    tasks = [(n, first, *args) for first in range(1, n + 1)]
    if workers <= 1 or n < 2:
        return [worker(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, *zip(*tasks)))


def sample_permutations(n, count, seed=None, *path):
    """``count`` uniform permutations of 1..n as rows of an integer array, block by block."""
    for index, rows in blocks(count):
        rng = stream(seed, DIAGRAMS, *path, n, index)
        yield np.argsort(rng.random((rows.stop - rows.start, n)), axis=1) + 1


def choose_mode(n, mode=None):
    limit = knob("EXHAUSTIVE_N")
    mode = mode or (EXHAUSTIVE if n <= limit else SAMPLING)
    if mode not in (EXHAUSTIVE, SAMPLING):
        raise DiagramError(f"unknown mode {mode!r}")
    if mode == EXHAUSTIVE and n > limit:
        raise TooLarge(f"exhaustive enumeration of S_{n} beyond n = {limit}")
    return mode


def binomial_estimate(hits, samples):
    fraction = hits / samples if samples else 0.0
    stderr = math.sqrt(fraction * (1.0 - fraction) / samples) if samples else 0.0
    return Estimate(fraction, stderr, samples)


def _peak_histogram(n, first):
    return Counter(peak_count(p) for p in block_permutations(n, first))


def peak_histogram(n, workers=1):
    """Number of permutations of 1..n with exactly K peaks, for every K."""
    choose_mode(n, EXHAUSTIVE)
    total = Counter()
    for counter in run_blocks(_peak_histogram, n, workers=workers):
        total.update(counter)
    return dict(sorted(total.items()))


@dataclass(frozen=True)
class PeakCount:
    n: int
    K: int
    count: object
    bound: int
    mode: str

    @property
    def bound_ok(self):
        value = self.count.value if isinstance(self.count, Estimate) else self.count
        return value <= self.bound

    def as_dict(self):
        count = self.count.as_dict() if isinstance(self.count, Estimate) else self.count
        return {
            "n": self.n,
            "K": self.K,
            "count": count,
            "bound": self.bound,
            "bound_ok": self.bound_ok,
            "mode": self.mode,
        }


def count_by_max_peaks(n, K, mode=None, samples=None, seed=None, workers=1):
    """Permutations of 1..n with at most K peaks against n^{4K + 3} (2K + 2)^n.

    Exhaustive runs return the exact count; sampling runs an Estimate of it.
    """
    mode = choose_mode(n, mode)
    if mode == EXHAUSTIVE:
        histogram = peak_histogram(n, workers)
        count = sum(c for k, c in histogram.items() if k <= K)
    else:
        samples = knob("SAMPLING_COUNT", samples)
        batches = sample_permutations(n, samples, seed, PEAKS_STREAM)
        hits = sum(int(sum(peak_count(row) <= K for row in batch)) for batch in batches)
        count = binomial_estimate(hits, samples).scaled(math.factorial(n))
    result = PeakCount(n, K, count, peak_bound(n, K), mode)
    if not result.bound_ok:
        logger.error("peak count %s exceeds the bound %d for n=%d, K=%d", count, result.bound, n, K)
    return result


def _ramsey_tally(permutations, alpha, beta):
    tally = Counter()
    counterexamples, monotone_failures = [], []
    threshold = alpha * beta + 1
    for p in permutations:
        p = tuple(int(x) for x in p)
        verdict = ramsey_verdict(p, alpha, beta)
        tally[verdict] += 1
        if verdict == COUNTEREXAMPLE and len(counterexamples) < COUNTEREXAMPLE_LIMIT:
            counterexamples.append(list(p))
        heights = [p[a - 1] for a in peaks(p)]
        if len(heights) >= threshold and monotone_subsequence(heights, alpha, beta) is None:
            if len(monotone_failures) < COUNTEREXAMPLE_LIMIT:
                monotone_failures.append(list(p))
    return tally, counterexamples, monotone_failures


def _ramsey_block(n, first, alpha, beta):
    return _ramsey_tally(block_permutations(n, first), alpha, beta)


@dataclass
class RamseyRow:
    n: int
    mode: str
    checked: int = 0
    tally: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)
    monotone_failures: list = field(default_factory=list)

    @property
    def applicable(self):
        return self.checked - self.tally.get(NOT_APPLICABLE, 0)

    def merge(self, tally, counterexamples, monotone_failures):
        merged = Counter(self.tally)
        merged.update(tally)
        self.tally = dict(merged)
        self.checked = sum(merged.values())
        self.counterexamples += counterexamples[: COUNTEREXAMPLE_LIMIT - len(self.counterexamples)]
        self.monotone_failures += monotone_failures[: COUNTEREXAMPLE_LIMIT - len(self.monotone_failures)]

    def as_dict(self):
        return {
            "n": self.n,
            "mode": self.mode,
            "checked": self.checked,
            "applicable": self.applicable,
            "increasing": self.tally.get(INCREASING, 0),
            "decreasing": self.tally.get(DECREASING, 0),
            "not_applicable": self.tally.get(NOT_APPLICABLE, 0),
            "counterexamples": len(self.counterexamples),
        }


@dataclass
class RamseyReport:
    alpha: int
    beta: int
    threshold: int
    rows: list = field(default_factory=list)

    @property
    def counterexamples(self):
        return [p for row in self.rows for p in row.counterexamples]

    @property
    def monotone_failures(self):
        return [p for row in self.rows for p in row.monotone_failures]

    @property
    def passed(self):
        return not self.counterexamples and not self.monotone_failures

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "threshold": self.threshold,
            "passed": self.passed,
            "rows": [row.as_dict() for row in self.rows],
            "counterexamples": self.counterexamples,
            "monotone_failures": self.monotone_failures,
        }


def ramsey_check(alpha, beta, n_range, mode=None, samples=None, seed=None, workers=1):
    """Check that f(alpha, beta) peaks force an increasing (alpha + 1)- or decreasing (beta + 1)-staircase.

    The peak heights are checked alongside for a monotone run of alpha + 1 or beta + 1.
    """
    report = RamseyReport(alpha, beta, staircase_threshold(alpha, beta))
    if report.threshold != math.comb(alpha + beta, alpha):
        raise DiagramError(f"threshold recursion gave {report.threshold} for ({alpha}, {beta})")
    for n in n_range:
        row = RamseyRow(n, choose_mode(n, mode))
        if row.mode == EXHAUSTIVE:
            for result in run_blocks(_ramsey_block, n, (alpha, beta), workers):
                row.merge(*result)
        else:
            for batch in sample_permutations(n, knob("SAMPLING_COUNT", samples), seed, RAMSEY_STREAM, alpha, beta):
                row.merge(*_ramsey_tally(batch, alpha, beta))
        logger.info("staircase lemma (%d, %d) at n=%d: %s", alpha, beta, n, row.as_dict())
        if row.counterexamples or row.monotone_failures:
            logger.error("counterexamples at n=%d: %s", n, row.counterexamples or row.monotone_failures)
        report.rows.append(row)
    return report


def is_exceptional(permutation, kappa):
    return all(find_staircase(permutation, kind, kappa) is None for kind in (INCREASING, DECREASING))


def _exceptional_block(n, first, kappa):
    return sum(1 for p in block_permutations(n, first) if is_exceptional(p, kappa))


@dataclass(frozen=True)
class ExceptionalFraction:
    n: int
    kappa: int
    fraction: Estimate
    bound: int
    mode: str
    count: int = None

    @property
    def bound_ok(self):
        return self.count is None or self.count <= self.bound

    def as_dict(self):
        return {
            "n": self.n,
            "kappa": self.kappa,
            "fraction": self.fraction.as_dict(),
            "count": self.count,
            "bound": self.bound,
            "bound_ok": self.bound_ok,
            "mode": self.mode,
        }


def exceptional_fraction(n, kappa, samples=None, seed=None, mode=None, workers=1):
    """Fraction of S_n lacking both kappa-staircases, exact or with a binomial standard error."""
    if kappa < 1:
        raise DiagramError(f"kappa must be positive, got {kappa}")
    mode = choose_mode(n, mode or (SAMPLING if samples else None))
    if mode == EXHAUSTIVE:
        count = sum(run_blocks(_exceptional_block, n, (kappa,), workers))
        total = math.factorial(n)
        fraction = Estimate(count / total, 0.0, total)
        result = ExceptionalFraction(n, kappa, fraction, exceptional_bound(n, kappa), mode, count)
        if not result.bound_ok:
            logger.error("exceptional count %d exceeds the bound %d at n=%d, kappa=%d", count, result.bound, n, kappa)
    else:
        samples = knob("SAMPLING_COUNT", samples)
        hits = sum(
            sum(1 for row in batch if is_exceptional(tuple(int(x) for x in row), kappa))
            for batch in sample_permutations(n, samples, seed, EXCEPTIONAL_STREAM, kappa)
        )
        result = ExceptionalFraction(n, kappa, binomial_estimate(hits, samples), exceptional_bound(n, kappa), mode)
    logger.info("exceptional fraction n=%d kappa=%d: %s", n, kappa, result.fraction)
    return result


@dataclass(frozen=True)
class NestedCount:
    N: int
    graphs: int
    nested: int
    by_enumeration: int

    @property
    def agreed(self):
        return self.nested == self.by_enumeration

    def as_dict(self):
        return {"N": self.N, "graphs": self.graphs, "nested": self.nested, "by_enumeration": self.by_enumeration}


def nested_count(N):
    """Graphs on two sides of N vertices with nested lines, by the scan and by quadruples."""
    graphs = nested = by_enumeration = 0
    for graph in all_graphs(N):
        graphs += 1
        nested += graph.nested() is not None
        by_enumeration += nested_by_enumeration(graph)
    return NestedCount(N, graphs, nested, by_enumeration)
