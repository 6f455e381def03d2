import functools
import random

import pytest

from lexforge.metrics import (LengthMismatchError, MetricKind, NoGoldError,
                              OutOfRangeError, accuracy, f_beta, macro_f1, nld,
                              rc_f1, rouge_l, score, soft_f1, token_overlap_f1)


def lcs_oracle(a, b):
    """Independent memoized-recursion LCS length."""
    a, b = tuple(a), tuple(b)

    @functools.lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    return rec(len(a), len(b))


class TestAccuracy:
    def test_perfect(self):
        assert accuracy(["A", "B", "C"], ["A", "B", "C"]) == 1.0

    def test_half(self):
        assert accuracy(["A", "B"], ["A", "C"]) == 0.5

    def test_empty_undefined(self):
        with pytest.raises(LengthMismatchError):
            accuracy([], [])


class TestFBeta:
    def test_equal_pr_returns_value(self):
        for beta in (0.5, 1.0, 2.0):
            for x in (0.1, 0.5, 1.0):
                assert f_beta(x, x, beta) == pytest.approx(x)

    def test_f05_precision_weighted(self):
        assert f_beta(1.0, 0.5, 0.5) == pytest.approx(0.833333, abs=1e-6)

    def test_zero_precision(self):
        assert f_beta(0.0, 0.7, 1.0) == 0.0

    def test_both_zero(self):
        assert f_beta(0.0, 0.0, 0.5) == 0.0

    def test_monotone_in_p_and_r(self):
        rng = random.Random(3)
        for _ in range(200):
            p, r = rng.random(), rng.random()
            dp = rng.random() * (1 - p)
            dr = rng.random() * (1 - r)
            beta = rng.choice([0.5, 1.0, 2.0])
            assert f_beta(p + dp, r, beta) >= f_beta(p, r, beta) - 1e-12
            assert f_beta(p, r + dr, beta) >= f_beta(p, r, beta) - 1e-12


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1(["a", "b", "a"], ["a", "b", "a"]) == 1.0

    def test_known_value(self):
        # label a: P=1/2 R=1/1 F=2/3; label b: P=0 R=0 F=0; macro=1/3
        assert macro_f1(["a", "a"], ["a", "b"]) == pytest.approx(1 / 3)


class TestRougeL:
    def test_identical(self):
        assert rouge_l(list("abcd"), list("abcd")) == 1.0

    def test_disjoint(self):
        assert rouge_l(["x", "y"], ["a", "b"]) == 0.0

    def test_derived_example(self):
        assert rouge_l(["a", "c", "d", "e"], ["a", "b", "c", "d"]) == pytest.approx(0.75)

    def test_empty_either_side(self):
        assert rouge_l([], ["a"]) == 0.0
        assert rouge_l(["a"], []) == 0.0

    def test_symmetric(self):
        a, b = list("abcab"), list("bacba")
        assert rouge_l(a, b) == rouge_l(b, a)

    def test_matches_lcs_oracle_on_random_pairs(self):
        rng = random.Random(17)
        vocab = list("abcdef")
        for _ in range(1000):
            a = [rng.choice(vocab) for _ in range(rng.randint(0, 12))]
            b = [rng.choice(vocab) for _ in range(rng.randint(0, 12))]
            got = rouge_l(a, b)
            if not a or not b:
                assert got == 0.0
                continue
            lcs = lcs_oracle(a, b)
            p, r = lcs / len(a), lcs / len(b)
            expected = 0.0 if p + r == 0 else 2 * p * r / (p + r)
            assert got == pytest.approx(expected, abs=1e-15)


class TestSoftF1:
    def test_identical_sets(self):
        spans = [["a", "b"], ["c"]]
        assert soft_f1(spans, spans) == 1.0

    def test_empty_pred(self):
        assert soft_f1([], [["a"]]) == 0.0

    def test_single_pair_reduction(self):
        assert soft_f1([["a", "c"]], [["a", "b"]]) == pytest.approx(0.5)
        assert soft_f1([["a", "c"]], [["a", "b"]]) == pytest.approx(
            token_overlap_f1(["a", "c"], ["a", "b"]))

    def test_greedy_matches_optimal_on_small_cases(self):
        rng = random.Random(5)
        vocab = list("abcdefgh")
        agree = 0
        total = 0
        for _ in range(200):
            pred = [[rng.choice(vocab) for _ in range(rng.randint(1, 4))]
                    for _ in range(rng.randint(1, 4))]
            gold = [[rng.choice(vocab) for _ in range(rng.randint(1, 4))]
                    for _ in range(rng.randint(1, 4))]
            g = soft_f1(pred, gold)
            o = soft_f1(pred, gold, optimal=True)
            assert g <= o + 1e-12
            total += 1
            agree += abs(g - o) < 1e-12
        assert agree / total > 0.9  # greedy rarely suboptimal at this size

    def test_bounded(self):
        rng = random.Random(6)
        vocab = list("ab")
        for _ in range(500):
            pred = [[rng.choice(vocab)] for _ in range(rng.randint(0, 3))]
            gold = [[rng.choice(vocab)] for _ in range(rng.randint(0, 3))]
            assert 0.0 <= soft_f1(pred, gold) <= 1.0


class TestRcF1:
    def test_exact_match(self):
        assert rc_f1(["a", "b"], [["a", "b"]]) == 1.0

    def test_no_overlap(self):
        assert rc_f1(["x"], [["a"], ["b", "c"]]) == 0.0

    def test_derived_multiset_value(self):
        assert rc_f1(["a", "b"], [["a"], ["c", "d"]]) == pytest.approx(
            0.666667, abs=1e-6)

    def test_no_gold(self):
        with pytest.raises(NoGoldError):
            rc_f1(["a"], [])

    def test_multiset_counting(self):
        # duplicates only count up to the gold multiplicity
        assert rc_f1(["a", "a"], [["a"]]) == pytest.approx(2 / 3)


class TestNld:
    def test_exact(self):
        assert nld(3, 3, 300) == 1.0

    def test_maximal_deviation(self):
        assert nld(0, 300, 300) == 0.0

    def test_derived_log_arithmetic(self):
        assert nld(9, 3, 300) == pytest.approx(0.839447, abs=1e-6)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            nld(301, 3, 300)
        with pytest.raises(OutOfRangeError):
            nld(-1, 3, 300)

    def test_monotone_in_log_deviation(self):
        golds = 10.0
        prior = None
        for pred in (10, 12, 20, 50, 200):
            value = nld(pred, golds, 300)
            if prior is not None:
                assert value <= prior
            prior = value


class TestDispatch:
    def test_accuracy_kind(self):
        assert score(MetricKind.ACCURACY, "A", "A") == 1.0
        assert score(MetricKind.ACCURACY, "A", "B") == 0.0

    def test_rouge_on_identical_strings(self):
        assert score(MetricKind.ROUGE_L, "the same text", "the same text") == 1.0

    def test_nld_kind(self):
        assert score(MetricKind.NLD, 3, 3) == 1.0

    def test_rc_f1_kind_with_string_gold(self):
        assert score(MetricKind.RC_F1, "answer text", "answer text") == 1.0

    def test_all_metrics_bounded_random(self):
        rng = random.Random(8)
        vocab = list("abcd")
        for _ in range(10_000):
            kind = rng.choice(list(MetricKind))
            if kind is MetricKind.NLD:
                value = score(kind, rng.uniform(0, 300), rng.uniform(0, 300))
            elif kind in (MetricKind.MACRO_F1, MetricKind.F05):
                n = rng.randint(1, 6)
                value = score(kind, [rng.choice(vocab) for _ in range(n)],
                              [rng.choice(vocab) for _ in range(n)])
            elif kind is MetricKind.SOFT_F1:
                value = score(kind,
                              [" ".join(rng.choices(vocab, k=2))
                               for _ in range(rng.randint(0, 3))],
                              [" ".join(rng.choices(vocab, k=2))
                               for _ in range(rng.randint(0, 3))])
            elif kind is MetricKind.RC_F1:
                value = score(kind, " ".join(rng.choices(vocab, k=3)),
                              [" ".join(rng.choices(vocab, k=3))])
            elif kind is MetricKind.ROUGE_L:
                value = score(kind, " ".join(rng.choices(vocab, k=4)),
                              " ".join(rng.choices(vocab, k=4)))
            else:
                value = score(kind, rng.choice(vocab), rng.choice(vocab))
            assert 0.0 <= value <= 1.0

    def test_perfect_prediction_is_one_for_every_kind(self):
        assert score(MetricKind.ACCURACY, "x", "x") == 1.0
        assert score(MetricKind.MACRO_F1, ["a", "b"], ["a", "b"]) == 1.0
        assert score(MetricKind.F05, ["a", "b"], ["a", "b"]) == 1.0
        assert score(MetricKind.ROUGE_L, "a b c", "a b c") == 1.0
        assert score(MetricKind.SOFT_F1, ["a b"], ["a b"]) == 1.0
        assert score(MetricKind.RC_F1, "a b", "a b") == 1.0
        assert score(MetricKind.NLD, 7, 7) == 1.0
