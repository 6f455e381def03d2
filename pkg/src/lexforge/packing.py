"""Two-stage continued-pretraining layout planning.

Stage I trains on an 8K window over 90% of the data, stage II on a 16K
window over the remaining 10%, with a constant 786,432 tokens per
optimization step (the one value near 786K divisible by both windows).
Packing is greedy sequential fill with tail-splitting: a document that does
not fit the remaining space is split at token granularity and continues in
the next sequence, so only the final sequence carries padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .corpus import Document

TOKENS_PER_STEP = 786_432
STAGE_WINDOWS = (8192, 16384)
STAGE_FRACTIONS = (0.9, 0.1)


class PackingError(Exception):
    pass


class IndivisibleStepError(PackingError):
    def __init__(self, window: int, tokens_per_step: int):
        super().__init__(f"window {window} does not divide step size {tokens_per_step}")


class WindowMismatchError(PackingError):
    pass


@dataclass(frozen=True)
class StageEntry:
    window_tokens: int
    data_tokens: int
    sequences_per_step: int


@dataclass(frozen=True)
class StagePlan:
    stages: tuple[StageEntry, ...]
    tokens_per_step: int

    def __post_init__(self):
        for s in self.stages:
            if s.window_tokens * s.sequences_per_step != self.tokens_per_step:
                raise ValueError("window * sequences_per_step must equal tokens_per_step")

    def to_dict(self) -> dict:
        return {
            "tokens_per_step": self.tokens_per_step,
            "stages": [
                {"window_tokens": s.window_tokens, "data_tokens": s.data_tokens,
                 "sequences_per_step": s.sequences_per_step}
                for s in self.stages
            ],
        }


def make_stage_plan(total_tokens: int,
                    windows: tuple[int, ...] = STAGE_WINDOWS,
                    fractions: tuple[float, ...] = STAGE_FRACTIONS,
                    tokens_per_step: int = TOKENS_PER_STEP) -> StagePlan:
    """Split a token budget across context-window stages at constant step size."""
    if total_tokens <= 0:
        raise PackingError("total_tokens must be positive")
    if len(windows) != len(fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise PackingError("fractions must align with windows and sum to 1")
    for w in windows:
        if tokens_per_step % w != 0:
            raise IndivisibleStepError(w, tokens_per_step)
    stages = []
    allocated = 0
    for i, (w, f) in enumerate(zip(windows, fractions)):
        if i == len(windows) - 1:
            data = total_tokens - allocated  # conserve the total exactly
        else:
            data = round(total_tokens * f)
        allocated += data
        stages.append(StageEntry(w, data, tokens_per_step // w))
    return StagePlan(tuple(stages), tokens_per_step)


@dataclass(frozen=True)
class Span:
    doc_id: str
    token_offset: int
    token_len: int


@dataclass(frozen=True)
class PackedSequence:
    sequence_id: int
    window: int
    spans: tuple[Span, ...]
    pad_tokens: int

    def __post_init__(self):
        if sum(s.token_len for s in self.spans) + self.pad_tokens != self.window:
            raise ValueError("span lengths plus padding must equal the window")


@dataclass(frozen=True)
class PackingPlan:
    window: int
    sequences: tuple[PackedSequence, ...]

    @property
    def total_pad_tokens(self) -> int:
        return sum(s.pad_tokens for s in self.sequences)

    @property
    def total_data_tokens(self) -> int:
        return sum(sp.token_len for s in self.sequences for sp in s.spans)

    @property
    def pad_fraction(self) -> float:
        total = self.window * len(self.sequences)
        return self.total_pad_tokens / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "pad_fraction": self.pad_fraction,
            "sequences": [
                {"sequence_id": s.sequence_id, "window": s.window,
                 "pad_tokens": s.pad_tokens,
                 "spans": [{"doc_id": sp.doc_id, "token_offset": sp.token_offset,
                            "token_len": sp.token_len} for sp in s.spans]}
                for s in self.sequences
            ],
        }


def pack_documents(docs: Iterable[Document], window: int) -> PackingPlan:
    """Pack documents into fixed-size training sequences, splitting tails."""
    if window <= 0:
        raise PackingError("window must be positive")
    sequences: list[PackedSequence] = []
    spans: list[Span] = []
    fill = 0

    def flush(pad: int):
        nonlocal spans, fill
        sequences.append(PackedSequence(len(sequences), window, tuple(spans), pad))
        spans = []
        fill = 0

    for doc in docs:
        remaining = doc.token_count
        offset = 0
        while remaining > 0:
            room = window - fill
            take = min(room, remaining)
            spans.append(Span(doc.id, offset, take))
            offset += take
            remaining -= take
            fill += take
            if fill == window:
                flush(pad=0)
    if spans:
        flush(pad=window - fill)
    return PackingPlan(window, tuple(sequences))


@dataclass(frozen=True)
class StepManifest:
    step_index: int
    sequence_ids: tuple[int, ...]
    n_tokens: int
    partial: bool


def step_batches(plan: PackingPlan, stage: StageEntry) -> list[StepManifest]:
    """Group packed sequences into constant-token optimization steps."""
    if plan.window != stage.window_tokens:
        raise WindowMismatchError(f"plan window {plan.window} vs stage {stage.window_tokens}")
    per_step = stage.sequences_per_step
    steps: list[StepManifest] = []
    seqs = plan.sequences
    for start in range(0, len(seqs), per_step):
        chunk = seqs[start:start + per_step]
        steps.append(StepManifest(
            step_index=len(steps),
            sequence_ids=tuple(s.sequence_id for s in chunk),
            n_tokens=len(chunk) * plan.window,
            partial=len(chunk) < per_step,
        ))
    return steps


@dataclass(frozen=True)
class LrSchedule:
    stage1_terminal_lr: float
    stage2_peak_factor: float = 1.1
    warmup_steps: int = 100

    def __post_init__(self):
        if self.stage1_terminal_lr <= 0:
            raise ValueError("stage1_terminal_lr must be positive")
        if self.stage2_peak_factor <= 1.0:
            raise ValueError("stage2_peak_factor must exceed 1")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be positive")

    @property
    def peak_lr(self) -> float:
        return self.stage1_terminal_lr * self.stage2_peak_factor


def warmup_lr(step: int, sched: LrSchedule) -> float:
    """Linear ramp from the stage-I terminal rate to the stage-II peak."""
    if step < 0:
        raise ValueError("step must be non-negative")
    if step >= sched.warmup_steps:
        return sched.peak_lr
    frac = step / sched.warmup_steps
    return sched.stage1_terminal_lr + frac * (sched.peak_lr - sched.stage1_terminal_lr)
