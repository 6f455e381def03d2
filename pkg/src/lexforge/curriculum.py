"""Curriculum batch construction for progressive fine-tuning.

Stage 1 batches come from the core task only. Stage 2 realizes the
anti-forgetting objective on the data side: every full batch carries a
fixed quota of core-task samples (round-half-up of lambda * batch_size)
alongside downstream samples, with the downstream set consumed exactly once
per epoch.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence


class CurriculumError(Exception):
    pass


class EmptyDatasetError(CurriculumError):
    def __init__(self, side: str):
        self.side = side
        super().__init__(f"{side} dataset is empty but its quota is positive")


@dataclass(frozen=True)
class CurriculumConfig:
    mixing_lambda: float = 0.2
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mixing_lambda <= 1.0:
            raise ValueError("mixing_lambda must be in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def core_quota(self) -> int:
        # round-half-up, clamped to [0, batch_size]
        q = math.floor(self.mixing_lambda * self.batch_size + 0.5)
        return min(max(q, 0), self.batch_size)


@dataclass(frozen=True)
class Batch:
    ids: tuple[str, ...]
    partial: bool = False


@dataclass(frozen=True)
class BatchComposition:
    core_ids: tuple[str, ...]
    downstream_ids: tuple[str, ...]
    partial: bool = False

    @property
    def size(self) -> int:
        return len(self.core_ids) + len(self.downstream_ids)


def stage1_batches(core_ids: Sequence[str], batch_size: int,
                   seed: int = 0) -> list[Batch]:
    """Seeded shuffle into fixed-size batches; the final short batch is flagged."""
    if not core_ids:
        raise EmptyDatasetError("core")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ids = list(core_ids)
    random.Random(seed).shuffle(ids)
    batches = []
    for start in range(0, len(ids), batch_size):
        chunk = ids[start:start + batch_size]
        batches.append(Batch(tuple(chunk), partial=len(chunk) < batch_size))
    return batches


class _CycledPool:
    """Replacement-free cycling over a sample pool, reshuffling on exhaustion
    with a fresh seed derivative so long runs do not repeat the same order."""

    def __init__(self, ids: Sequence[str], seed: int):
        self._ids = list(ids)
        self._seed = seed
        self._epoch = 0
        self._queue: list[str] = []

    def take(self, n: int) -> list[str]:
        out: list[str] = []
        while len(out) < n:
            if not self._queue:
                order = list(self._ids)
                random.Random(self._seed * 1_000_003 + self._epoch).shuffle(order)
                self._queue = order
                self._epoch += 1
            out.append(self._queue.pop(0))
        return out


def stage2_batches(core_ids: Sequence[str], downstream_ids: Sequence[str],
                   cfg: CurriculumConfig) -> Iterator[BatchComposition]:
    """One epoch of mixed batches: fixed core quota per full batch, each
    downstream sample emitted exactly once."""
    quota = cfg.core_quota
    down_per_batch = cfg.batch_size - quota
    if quota > 0 and not core_ids:
        raise EmptyDatasetError("core")
    if down_per_batch > 0 and not downstream_ids:
        raise EmptyDatasetError("downstream")

    if down_per_batch == 0:
        # Degenerate all-core mix: one seeded pass over the core set.
        for b in stage1_batches(core_ids, cfg.batch_size, cfg.seed):
            yield BatchComposition(core_ids=b.ids, downstream_ids=(), partial=b.partial)
        return

    down = list(downstream_ids)
    random.Random(cfg.seed).shuffle(down)
    core_pool = _CycledPool(core_ids, seed=cfg.seed + 1) if quota > 0 else None

    for start in range(0, len(down), down_per_batch):
        chunk = down[start:start + down_per_batch]
        partial = len(chunk) < down_per_batch
        core = tuple(core_pool.take(quota)) if (core_pool and not partial) else ()
        yield BatchComposition(core_ids=core, downstream_ids=tuple(chunk),
                               partial=partial)


def mixing_stats(batches: Sequence[BatchComposition]) -> Optional[float]:
    """Observed core fraction over full batches; None when undefined."""
    full = [b for b in batches if not b.partial]
    total = sum(b.size for b in full)
    if total == 0:
        return None
    return sum(len(b.core_ids) for b in full) / total
