import math
import random

import pytest

from lexforge.corpus import PreferencePair
from lexforge.hipo import (EvalOutcome, Generation, HipoConfig, HipoQuery,
                           HipoState, LogProbQuad, MissingOutcomeError,
                           NoGenerationsError, NonFiniteError, advance_iteration,
                           build_preference_pairs, dpo_loss, dpo_loss_gradients,
                           hipo_loss, mine_hard_samples, run_hipo_iterations)


def quad(pc, pl, rc, rl, n=1):
    return LogProbQuad(policy_logp_chosen=pc, policy_logp_rejected=pl,
                       ref_logp_chosen=rc, ref_logp_rejected=rl,
                       chosen_token_count=n)


def random_quad(rng, max_mag=50.0):
    return quad(-rng.uniform(0.001, max_mag), -rng.uniform(0.001, max_mag),
                -rng.uniform(0.001, max_mag), -rng.uniform(0.001, max_mag),
                n=rng.randint(1, 200))


def margin_quad(m):
    if m >= 0:
        return quad(-1.0, -1.0 - m, -1.0, -1.0)
    return quad(-1.0 + m, -1.0, -1.0, -1.0)


class TestDpoLoss:
    def test_zero_margin_is_ln2(self):
        assert dpo_loss(quad(-5, -7, -5, -7), beta=0.1) == pytest.approx(
            math.log(2), abs=1e-12)

    def test_unit_logit(self):
        # margin 4, beta 0.25 -> -ln sigma(1)
        q = quad(-2, -6, -4, -4)
        assert q.margin == 4
        assert dpo_loss(q, beta=0.25) == pytest.approx(0.313262, abs=1e-6)

    def test_swapped_roles(self):
        q = quad(-6, -2, -4, -4)
        assert q.margin == -4
        assert dpo_loss(q, beta=0.25) == pytest.approx(1.313262, abs=1e-6)

    def test_reflection_identity_random(self):
        rng = random.Random(0)
        for _ in range(1000):
            q = random_quad(rng)
            beta = rng.uniform(0.01, 2.0)
            mirrored = quad(q.policy_logp_rejected, q.policy_logp_chosen,
                            q.ref_logp_rejected, q.ref_logp_chosen)
            h = q.margin
            assert dpo_loss(mirrored, beta) - dpo_loss(q, beta) == pytest.approx(
                beta * h, abs=1e-9)

    def test_positive_everywhere_and_decreasing_in_margin(self):
        margins = [-100, -1, 0, 1, 100]
        losses = [dpo_loss(margin_quad(m), 0.5) for m in margins]
        assert all(l > 0 for l in losses)
        assert losses == sorted(losses, reverse=True)

    def test_numerically_stable_extreme_logit(self):
        # |beta*h| = 1000: stays finite, no overflow
        q = quad(0.0, -2000.0, 0.0, 0.0)
        assert math.isfinite(dpo_loss(q, beta=0.5))
        assert dpo_loss(q, beta=0.5) == pytest.approx(0.0, abs=1e-12)
        q2 = quad(-2000.0, 0.0, 0.0, 0.0)
        assert dpo_loss(q2, beta=0.5) == pytest.approx(1000.0, rel=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteError):
            quad(float("-inf"), -1, -1, -1)
        with pytest.raises(NonFiniteError):
            quad(float("nan"), -1, -1, -1)

    def test_gradient_vs_central_differences(self):
        rng = random.Random(42)
        eps = 1e-5
        fields = ["policy_logp_chosen", "policy_logp_rejected",
                  "ref_logp_chosen", "ref_logp_rejected"]
        for _ in range(100):
            q = random_quad(rng, max_mag=10.0)
            beta = rng.uniform(0.05, 1.0)
            grads = dpo_loss_gradients(q, beta)
            base = {f: getattr(q, f) for f in fields}
            for f in fields:
                hi = dict(base)
                lo = dict(base)
                hi[f] = base[f] + eps
                lo[f] = base[f] - eps
                # keep values <= 0 by shifting everything slightly negative
                fd = (dpo_loss(LogProbQuad(**{**hi, "chosen_token_count": 1}), beta)
                      - dpo_loss(LogProbQuad(**{**lo, "chosen_token_count": 1}), beta)
                      ) / (2 * eps)
                analytic = grads[f]
                if abs(analytic) > 1e-12:
                    assert fd == pytest.approx(analytic, rel=1e-5)
                else:
                    assert fd == pytest.approx(0.0, abs=1e-7)


class TestHipoLoss:
    def test_lambda_zero_bitwise_equals_dpo(self):
        rng = random.Random(1)
        for _ in range(200):
            q = random_quad(rng)
            beta = rng.uniform(0.01, 1.0)
            cfg = HipoConfig(beta=beta, nll_lambda=0.0)
            assert hipo_loss(q, cfg) == dpo_loss(q, beta)

    def test_nll_arithmetic(self):
        q = quad(-10, -12, -10, -12, n=5)
        cfg = HipoConfig(beta=0.3, nll_lambda=0.1)
        assert hipo_loss(q, cfg) == pytest.approx(0.1 * 2.0 + math.log(2), abs=1e-12)

    def test_zero_nll_term(self):
        q = quad(0.0, -3, 0.0, -3, n=4)
        cfg = HipoConfig(beta=0.2, nll_lambda=1.0)
        assert hipo_loss(q, cfg) == dpo_loss(q, 0.2)

    def test_sum_form_option(self):
        q = quad(-10, -12, -10, -12, n=5)
        cfg = HipoConfig(beta=0.3, nll_lambda=0.1, nll_per_token=False)
        assert hipo_loss(q, cfg) == pytest.approx(0.1 * 10.0 + math.log(2), abs=1e-12)


def outcome(qid, score, gens=()):
    return EvalOutcome(qid, "accuracy", score,
                       tuple(Generation(t, s) for t, s in gens) or
                       (Generation("g", 0.0),))


class TestMining:
    def test_strict_threshold(self):
        outcomes = [outcome("a", 1.0), outcome("b", 0.4), outcome("c", 0.8)]
        assert mine_hard_samples(outcomes, 0.8) == {"b"}

    def test_all_perfect_empty(self):
        assert mine_hard_samples([outcome("a", 1.0)], 0.8) == set()

    def test_tau_one_retains_all_non_perfect(self):
        outcomes = [outcome("a", 1.0), outcome("b", 0.99)]
        assert mine_hard_samples(outcomes, 1.0) == {"b"}


class TestPreferencePairs:
    def test_golden_chosen_worst_rejected(self):
        o = outcome("q", 0.0, [("A", 1.0), ("B", 0.0)])
        pair = build_preference_pairs("the query", "A", o)
        assert pair == PreferencePair("the query", "A", "B")

    def test_all_equal_golden_no_pair(self):
        o = outcome("q", 1.0, [("A", 1.0), ("A", 1.0)])
        assert build_preference_pairs("the query", "A", o) is None

    def test_lowest_scoring_rejected(self):
        o = outcome("q", 0.3, [("B", 0.3), ("C", 0.1)])
        pair = build_preference_pairs("the query", "A", o)
        assert pair.rejected == "C"

    def test_tie_breaks_first(self):
        o = outcome("q", 0.3, [("B", 0.1), ("C", 0.1)])
        assert build_preference_pairs("q?", "A", o).rejected == "B"

    def test_no_generations(self):
        o = EvalOutcome("q", "accuracy", 0.0, ())
        with pytest.raises(NoGenerationsError):
            build_preference_pairs("q?", "A", o)


class TestIteration:
    def test_passing_moves_to_resolved(self):
        state = HipoState.initial(["a", "b"])
        outcomes = [outcome("a", 1.0), outcome("b", 0.2)]
        new = advance_iteration(state, outcomes, 0.8)
        assert new.active == {"b"} and new.resolved == {"a"}
        assert new.iteration == 1
        assert new.reference_policy == "iteration_0"

    def test_all_pass_terminates(self):
        state = HipoState.initial(["a"])
        new = advance_iteration(state, [outcome("a", 1.0)], 0.8)
        assert new.active == frozenset()

    def test_none_pass(self):
        state = HipoState.initial(["a", "b"])
        new = advance_iteration(state, [outcome("a", 0.0), outcome("b", 0.0)], 0.8)
        assert new.active == {"a", "b"} and new.iteration == 1

    def test_missing_outcome(self):
        state = HipoState.initial(["a", "b"])
        with pytest.raises(MissingOutcomeError):
            advance_iteration(state, [outcome("a", 1.0)], 0.8)

    def test_universe_invariant(self):
        state = HipoState.initial(["a", "b", "c"])
        new = advance_iteration(
            state, [outcome("a", 1.0), outcome("b", 0.0), outcome("c", 0.9)], 0.8)
        assert new.active | new.resolved == {"a", "b", "c"}


class TestLoop:
    def test_monotone_active_and_pair_invariants(self):
        queries = [HipoQuery(f"q{i}", f"question {i}", f"answer {i}")
                   for i in range(30)]
        rng = random.Random(7)

        def generate(q, n):
            out = []
            for _ in range(n):
                out.append(q.golden if rng.random() < 0.3 else f"wrong {rng.random():.6f}")
            return out

        def evaluate(q, text):
            return 1.0 if text == q.golden else 0.0

        records = run_hipo_iterations(queries, generate, evaluate,
                                      HipoConfig(hard_threshold=1.0),
                                      n_iterations=5)
        sizes = [len(r.state.active) for r in records]
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))
        for r in records:
            for p in r.pairs:
                assert p.chosen != p.rejected
                golden = next(q.golden for q in queries
                              if q.query == p.query)
                assert p.chosen == golden
