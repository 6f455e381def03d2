import random

import pytest

from lexforge.corpus import Document
from lexforge.packing import (IndivisibleStepError, LrSchedule, TOKENS_PER_STEP,
                              WindowMismatchError, make_stage_plan, pack_documents,
                              step_batches, warmup_lr)

B = 1_000_000_000


def docs_with_lengths(lengths):
    # token_count is what packing consumes; the text is a placeholder
    return [Document(id=f"d{i}", text="x", lang="en", source="general_industry",
                     token_count=n) for i, n in enumerate(lengths)]


class TestStagePlan:
    def test_published_two_stage_split(self):
        plan = make_stage_plan(140 * B)
        s1, s2 = plan.stages
        assert (s1.window_tokens, s1.data_tokens, s1.sequences_per_step) == (8192, 126 * B, 96)
        assert (s2.window_tokens, s2.data_tokens, s2.sequences_per_step) == (16384, 14 * B, 48)
        assert plan.tokens_per_step == 786_432

    def test_small_total_rounding(self):
        plan = make_stage_plan(786_432)
        assert plan.stages[0].data_tokens == 707_789
        assert plan.stages[0].data_tokens + plan.stages[1].data_tokens == 786_432

    def test_indivisible_window(self):
        with pytest.raises(IndivisibleStepError):
            make_stage_plan(10 * B, windows=(8000, 16384), fractions=(0.9, 0.1))


class TestPackDocuments:
    def test_exact_fit(self):
        plan = pack_documents(docs_with_lengths([8192]), 8192)
        assert len(plan.sequences) == 1
        assert plan.sequences[0].pad_tokens == 0

    def test_tail_split(self):
        plan = pack_documents(docs_with_lengths([5000, 3000, 200]), 8192)
        assert len(plan.sequences) == 2
        seq1, seq2 = plan.sequences
        assert [s.token_len for s in seq1.spans] == [5000, 3000, 192]
        assert seq1.pad_tokens == 0
        assert [s.token_len for s in seq2.spans] == [8]
        assert seq2.spans[0].token_offset == 192
        assert seq2.pad_tokens == 8184

    def test_empty_stream(self):
        plan = pack_documents([], 8192)
        assert plan.sequences == ()

    def test_long_document_split_contiguously(self):
        plan = pack_documents(docs_with_lengths([20000]), 8192)
        spans = [sp for s in plan.sequences for sp in s.spans]
        assert [sp.token_offset for sp in spans] == [0, 8192, 16384]
        assert sum(sp.token_len for sp in spans) == 20000

    def test_token_conservation_random(self):
        rng = random.Random(42)
        lengths = [rng.randint(1, 30000) for _ in range(10_000)]
        plan = pack_documents(docs_with_lengths(lengths), 8192)
        assert plan.total_data_tokens == sum(lengths)
        # every sequence exactly fills its window counting padding
        for s in plan.sequences:
            assert sum(sp.token_len for sp in s.spans) + s.pad_tokens == 8192


class TestStepBatches:
    def test_full_step_8k(self):
        stage = make_stage_plan(140 * B).stages[0]
        plan = pack_documents(docs_with_lengths([8192] * 96), 8192)
        steps = step_batches(plan, stage)
        assert len(steps) == 1
        assert steps[0].n_tokens == TOKENS_PER_STEP
        assert not steps[0].partial

    def test_partial_remainder_flagged(self):
        stage = make_stage_plan(140 * B).stages[0]
        plan = pack_documents(docs_with_lengths([8192] * 100), 8192)
        steps = step_batches(plan, stage)
        assert len(steps) == 2
        assert not steps[0].partial
        assert steps[1].partial and len(steps[1].sequence_ids) == 4

    def test_full_step_16k(self):
        stage = make_stage_plan(140 * B).stages[1]
        plan = pack_documents(docs_with_lengths([16384] * 48), 16384)
        steps = step_batches(plan, stage)
        assert len(steps) == 1 and steps[0].n_tokens == 786_432

    def test_window_mismatch(self):
        stage = make_stage_plan(140 * B).stages[1]
        plan = pack_documents(docs_with_lengths([8192]), 8192)
        with pytest.raises(WindowMismatchError):
            step_batches(plan, stage)


class TestWarmupLr:
    SCHED = LrSchedule(stage1_terminal_lr=1.0e-5, stage2_peak_factor=1.1,
                       warmup_steps=100)

    def test_starts_at_terminal(self):
        assert warmup_lr(0, self.SCHED) == pytest.approx(1.0e-5)

    def test_peak_at_warmup_end(self):
        assert warmup_lr(100, self.SCHED) == pytest.approx(1.1e-5)

    def test_linear_midpoint(self):
        assert warmup_lr(50, self.SCHED) == pytest.approx(1.05e-5)

    def test_constant_after_warmup(self):
        assert warmup_lr(5000, self.SCHED) == warmup_lr(100, self.SCHED)

    def test_monotone_non_decreasing(self):
        values = [warmup_lr(s, self.SCHED) for s in range(0, 120)]
        assert all(b >= a for a, b in zip(values, values[1:]))
