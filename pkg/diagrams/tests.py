import itertools
import math

import numpy as np
from django.test import SimpleTestCase

from .counting import (
    all_permutations,
    count_by_max_peaks,
    exceptional_fraction,
    nested_count,
    peak_histogram,
    ramsey_check,
    run_blocks,
    _peak_histogram,
)
from .exceptions import InvalidPairing, ParityMismatch, TooLarge
from .pairings import (
    K,
    K_TILDE,
    Pairing,
    PairingGraph,
    classify,
    crossing_pairs,
    pattern_from_graph,
)
from .patterns import RecollisionPattern, enumerate_patterns, pattern_count, recollision_patterns
from .peaks import monotone_subsequence, peak_bound, peak_count, peaks, peaks_valleys
from .staircases import (
    DECREASING,
    INCREASING,
    NOT_APPLICABLE,
    Staircase,
    extend_staircase,
    find_staircase,
    is_staircase,
    ramsey_verdict,
    staircase_by_enumeration,
    staircase_threshold,
    staircase_violations,
)


class TestRecollisionPattern(SimpleTestCase):
    def test_success_no_recollisions(self):
        patterns = enumerate_patterns(4, 4)
        self.assertEqual([p.m for p in patterns], [(0, 0, 0, 0, 0)])
        self.assertEqual(patterns[0].mu, (1, 2, 3, 4))

    def test_success_one_external_three_collisions(self):
        patterns = enumerate_patterns(1, 3)
        self.assertEqual(sorted(p.m for p in patterns), [(0, 1), (1, 0)])
        self.assertEqual(sorted(p.mu for p in patterns), [(1,), (3,)])

    def test_success_counts_and_index_sets(self):
        for n, N in [(0, 4), (1, 5), (2, 6), (3, 7), (2, 8)]:
            patterns = enumerate_patterns(n, N)
            self.assertEqual(len(patterns), pattern_count(n, N))
            self.assertEqual(len(set(patterns)), len(patterns))
            for p in patterns:
                self.assertEqual(p.N, N)
                self.assertEqual(len(p.J()), sum(p.m))
                self.assertEqual(len(p.J_complement()), n + sum(p.m) + 1)
                self.assertEqual(p.J() | p.J_complement(), set(range(N + 1)))
                self.assertFalse(p.J() & p.J_complement())
                self.assertEqual(RecollisionPattern.from_mu(N, p.mu), p)

    def test_success_index_sets_by_hand(self):
        p = RecollisionPattern((1, 0))
        self.assertEqual(p.I(), {3})
        self.assertEqual(p.I_j(0), {1})
        self.assertEqual(p.I_j_complement(0), {0, 2})
        self.assertEqual(p.I_j(1), set())
        self.assertEqual(p.I_j_complement(1), {3})
        self.assertEqual(p.internal_lines(), [(1, 2)])
        self.assertEqual(p.size, 2)

    def test_success_recollision_class(self):
        self.assertTrue(RecollisionPattern((0, 1, 0)).in_recollision_class(2))
        self.assertFalse(RecollisionPattern((1, 0, 0)).in_recollision_class(2))
        self.assertFalse(RecollisionPattern((0, 0, 1)).in_recollision_class(2))
        self.assertEqual([p.m for p in recollision_patterns(2, 4, 2)], [(0, 1, 0)])
        # a = 3 needs only mu(3) >= 3
        self.assertTrue(RecollisionPattern((0, 0, 0, 0)).in_recollision_class(3))

    def test_failure_parity(self):
        with self.assertRaises(ParityMismatch):
            enumerate_patterns(1, 4)
        with self.assertRaises(ParityMismatch):
            pattern_count(3, 1)
        with self.assertRaises(ParityMismatch):
            RecollisionPattern.from_mu(4, (2,))


class TestClassify(SimpleTestCase):
    def test_success_direct(self):
        kind = classify(Pairing((1, 2, 3, 4)))
        self.assertEqual(kind.kind, "direct")
        self.assertIsNone(kind.first_minimal)

    def test_success_transposition(self):
        kind = classify(Pairing((2, 1)))
        self.assertEqual(kind.kind, "crossing")
        self.assertEqual(kind.crossing, [(1, 2)])
        self.assertEqual(kind.first_minimal, (1, 2))

    def test_success_crossing_pairs_match_double_loop(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            permutation = tuple(int(x) for x in rng.permutation(7) + 1)
            expected = [
                (a, b) for a in range(1, 8) for b in range(a + 1, 8) if permutation[b - 1] < permutation[a - 1]
            ]
            self.assertEqual(crossing_pairs(permutation), expected)

    def test_success_minimal_pairs(self):
        permutation = (3, 1, 4, 2)
        kind = classify(Pairing(permutation))
        self.assertEqual(kind.minimal, [(1, 2), (1, 4)])
        for a, b in kind.minimal:
            self.assertLess(permutation[b - 1], permutation[a - 1])
            self.assertTrue(all(permutation[c - 1] < permutation[b - 1] for c in range(1, a)))

    def test_failure_not_a_permutation(self):
        with self.assertRaises(InvalidPairing):
            Pairing((1, 1, 2))
        with self.assertRaises(InvalidPairing):
            Pairing((1, 2), marker=5)


class TestPairingGraph(SimpleTestCase):
    def setUp(self):
        self.nested = PairingGraph(
            (4, 4),
            [((K, 1), (K, 4)), ((K, 2), (K, 3)), ((K_TILDE, 1), (K_TILDE, 2)), ((K_TILDE, 3), (K_TILDE, 4))],
        )

    def test_success_ladder_not_nested(self):
        graph = PairingGraph.from_pattern(RecollisionPattern((0, 0, 0)), Pairing((1, 2)))
        self.assertIsNone(graph.nested())
        self.assertEqual(graph.recollisions(), [])
        self.assertEqual(graph.lines(), [((K, 1), (K_TILDE, 1)), ((K, 2), (K_TILDE, 2))])

    def test_success_nested_lines(self):
        self.assertEqual(self.nested.nested(), (K, (1, 4), (2, 3)))
        self.assertEqual(self.nested.recollisions(), [(K, 1, 4)])

    def test_failure_genuine_recollision_has_no_pattern(self):
        with self.assertRaises(InvalidPairing):
            pattern_from_graph(self.nested)

    def test_success_round_trip(self):
        for n, N in [(1, 3), (2, 6), (3, 5)]:
            for pattern in enumerate_patterns(n, N):
                for permutation in itertools.permutations(range(1, n + 1)):
                    pairing = Pairing(permutation)
                    graph = PairingGraph.from_pattern(pattern, pairing)
                    self.assertEqual(pattern_from_graph(graph), (pattern, pattern, pairing))
                    skeleton = graph.skeleton()
                    self.assertEqual(skeleton.sizes, (n, n))
                    self.assertEqual(pattern_from_graph(skeleton)[2], pairing)

    def test_success_recollision_marker(self):
        pairing = Pairing((), marker=2)
        graph = PairingGraph.from_pattern(RecollisionPattern((0, 1, 0)), pairing, RecollisionPattern((1,)))
        self.assertEqual(graph.sizes, (4, 2))
        self.assertEqual(graph.recollisions(), [(K, 1, 4)])
        self.assertEqual(graph.nested(), (K, (1, 4), (2, 3)))
        self.assertEqual(classify(pairing).kind, "recollision")

    def test_failure_marker_outside_class(self):
        with self.assertRaises(InvalidPairing):
            PairingGraph.from_pattern(RecollisionPattern((0, 0, 1)), Pairing((), marker=2), RecollisionPattern((0,)))

    def test_failure_not_a_matching(self):
        with self.assertRaises(InvalidPairing):
            PairingGraph((2, 0), [((K, 1), (K, 2)), ((K, 2), (K, 1))])
        with self.assertRaises(InvalidPairing):
            PairingGraph((2, 2), [((K, 1), (K_TILDE, 1))])

    def test_success_nested_count_matches_enumeration(self):
        result = nested_count(5)
        self.assertEqual(result.graphs, 945)
        self.assertTrue(result.agreed)
        self.assertGreater(result.nested, 0)


class TestPeaks(SimpleTestCase):
    def test_success_monotone(self):
        self.assertEqual(peaks_valleys((1, 2, 3, 4, 5)), ([], []))

    def test_success_single_peak(self):
        self.assertEqual(peaks_valleys((1, 3, 2)), ([2], []))
        self.assertEqual(peaks_valleys((2, 1, 3)), ([], [2]))

    def test_success_alternation(self):
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            permutation = rng.permutation(9) + 1
            found, valleys = peaks_valleys(permutation)
            self.assertEqual(peak_count(permutation), len(found))
            labels = [label for _, label in sorted([(a, "p") for a in found] + [(a, "v") for a in valleys])]
            self.assertTrue(all(x != y for x, y in zip(labels, labels[1:])))

    def test_success_monotone_subsequence(self):
        self.assertEqual(monotone_subsequence([3, 1, 2], 1, 1), ("increasing", [1, 2]))
        self.assertEqual(monotone_subsequence([3, 2, 1], 2, 1), ("decreasing", [0, 1]))
        self.assertIsNone(monotone_subsequence([2, 1, 4, 3], 2, 2))
        for values in itertools.permutations(range(5)):
            self.assertIsNotNone(monotone_subsequence(values, 2, 2))


class TestStaircases(SimpleTestCase):
    def test_success_identity_has_none(self):
        for kind in (INCREASING, DECREASING):
            self.assertIsNone(find_staircase((1, 2, 3, 4, 5), kind, 1))

    def test_success_increasing_two_staircase(self):
        staircase = find_staircase((1, 3, 2, 4, 3), INCREASING, 2)
        self.assertEqual(staircase, Staircase(INCREASING, (1, 3), (1, 1)))
        self.assertEqual(staircase.tips, (2, 4))
        self.assertEqual(staircase.stairs(), [(1, 2), (3, 4)])

    def test_success_decreasing_two_staircase(self):
        staircase = find_staircase((2, 5, 1, 4, 3), DECREASING, 2)
        self.assertEqual(staircase, Staircase(DECREASING, (2, 4), (1, 1)))
        self.assertIsNone(find_staircase((2, 5, 1, 4, 3), INCREASING, 2))

    def test_success_violations(self):
        violations = staircase_violations((1, 5, 2, 4, 3), Staircase(INCREASING, (1, 3), (1, 1)))
        self.assertIn("(iii)", violations)
        self.assertIn("(v)", violations)

    def assert_search_agrees(self, permutation):
        for kind, kappa in itertools.product((INCREASING, DECREASING), (1, 2, 3)):
            found = find_staircase(permutation, kind, kappa)
            expected = staircase_by_enumeration(permutation, kind, kappa)
            self.assertEqual(found is None, expected is None, (permutation, kind, kappa))
            if found is not None:
                self.assertTrue(is_staircase(permutation, found), (permutation, found))
                self.assertEqual(found.kappa, kappa)

    def test_success_search_agrees_with_enumeration(self):
        for n in range(1, 8):
            for permutation in all_permutations(n):
                self.assert_search_agrees(permutation)

    def test_success_search_agrees_with_enumeration_sampled(self):
        rng = np.random.default_rng(8)
        for _ in range(5000):
            self.assert_search_agrees(tuple(int(x) for x in rng.permutation(8) + 1))

    def test_success_one_staircase_iff_peak(self):
        for permutation in all_permutations(5):
            has_peak = bool(peaks(permutation))
            self.assertEqual(find_staircase(permutation, INCREASING, 1) is not None, has_peak)
            self.assertEqual(find_staircase(permutation, DECREASING, 1) is not None, has_peak)

    def test_success_extension(self):
        short = Staircase(INCREASING, (1,), (1,))
        self.assertEqual(extend_staircase((1, 3, 2, 4, 3), short), Staircase(INCREASING, (1, 3), (1, 1)))
        self.assertIsNone(extend_staircase((1, 3, 2, 4, 3), Staircase(INCREASING, (1, 3), (1, 1))))
        short = Staircase(DECREASING, (4,), (1,))
        self.assertEqual(extend_staircase((2, 5, 1, 4, 3), short), Staircase(DECREASING, (2, 4), (1, 1)))

    def test_success_threshold(self):
        self.assertEqual(staircase_threshold(1, 1), 2)
        self.assertEqual(staircase_threshold(2, 1), 3)
        for alpha, beta in itertools.product(range(1, 6), repeat=2):
            self.assertEqual(staircase_threshold(alpha, beta), math.comb(alpha + beta, alpha))

    def test_success_below_threshold(self):
        self.assertEqual(ramsey_verdict((1, 3, 2), 1, 1), NOT_APPLICABLE)


class TestCounting(SimpleTestCase):
    def test_success_three_elements(self):
        result = count_by_max_peaks(3, 0)
        self.assertEqual(result.count, 4)
        self.assertEqual(result.bound, 216)
        self.assertTrue(result.bound_ok)
        self.assertEqual(count_by_max_peaks(3, 1).count, 6)

    def test_success_eight_elements(self):
        result = count_by_max_peaks(8, 2)
        self.assertTrue(result.bound_ok)
        self.assertEqual(result.bound, peak_bound(8, 2))
        self.assertLessEqual(result.count, math.factorial(8))

    def test_success_histogram(self):
        histogram = peak_histogram(7)
        self.assertEqual(sum(histogram.values()), 5040)
        self.assertEqual(histogram[0], 2**6)

    def test_success_process_pool_matches_serial(self):
        serial = run_blocks(_peak_histogram, 6)
        self.assertEqual(run_blocks(_peak_histogram, 6, workers=2), serial)

    def test_failure_exhaustive_too_large(self):
        with self.assertRaises(TooLarge):
            count_by_max_peaks(11, 1, mode="exhaustive")

    def test_success_sampled_count(self):
        estimate = count_by_max_peaks(6, 0, mode="sampling", samples=20_000, seed=3).count
        self.assertEqual(estimate.samples, 20_000)
        self.assertLess(abs(estimate.value - 32), 5 * estimate.stderr + 1e-9)
        again = count_by_max_peaks(6, 0, mode="sampling", samples=20_000, seed=3).count
        self.assertEqual(estimate, again)

    def test_success_ramsey_smallest(self):
        report = ramsey_check(1, 1, range(3, 8))
        self.assertTrue(report.passed)
        self.assertEqual(report.threshold, 2)
        self.assertEqual(report.rows[0].applicable, 0)
        self.assertGreater(report.rows[-1].applicable, 0)
        self.assertEqual(report.rows[-1].checked, 5040)

    def test_success_ramsey_two_one(self):
        report = ramsey_check(2, 1, range(5, 8))
        self.assertTrue(report.passed)
        self.assertEqual(report.threshold, 3)

    def test_success_exceptional_without_peaks(self):
        result = exceptional_fraction(3, 1)
        self.assertEqual(result.count, 4)
        self.assertAlmostEqual(result.fraction.value, 4 / 6, places=14)
        self.assertTrue(result.bound_ok)

    def test_success_exceptional_needs_peaks(self):
        self.assertEqual(exceptional_fraction(4, 3).fraction.value, 1.0)

    def test_success_exceptional_two_staircases(self):
        histogram = peak_histogram(6)
        self.assertEqual(exceptional_fraction(6, 2).count, histogram[0] + histogram[1])

    def test_success_sampled_exceptional(self):
        result = exceptional_fraction(12, 2, samples=2_000, seed=5)
        self.assertEqual(result.mode, "sampling")
        self.assertEqual(result.fraction.samples, 2_000)
        self.assertGreaterEqual(result.fraction.value, 0.0)
        self.assertLess(result.fraction.value, 0.05)
