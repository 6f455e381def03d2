"""Ratio-controlled down-sampling against per-source token budgets.

Budgets are token-denominated, so selection is per-document Bernoulli with
the source's sampling fraction as keep probability; documents are never
split here. Each (lang, source) stream draws from its own seeded RNG so the
outcome is independent of input interleaving.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .corpus import CorpusManifest, Document, GENERAL_SOURCES

SourceKey = tuple[str, str]  # (lang, source)


class MixingError(Exception):
    pass


class BudgetExceedsAvailabilityError(MixingError):
    def __init__(self, key: SourceKey, budget: int, available: int):
        self.key = key
        super().__init__(f"{key}: budget {budget} exceeds available {available}")


class UnknownSourceError(MixingError):
    pass


@dataclass(frozen=True)
class PlanEntry:
    lang: str
    source: str
    available_tokens: int
    budget_tokens: int

    @property
    def sampling_fraction(self) -> float:
        return self.budget_tokens / self.available_tokens


@dataclass(frozen=True)
class SamplingPlan:
    entries: tuple[PlanEntry, ...]
    seed: int = 0

    def entry(self, key: SourceKey) -> PlanEntry:
        for e in self.entries:
            if (e.lang, e.source) == key:
                return e
        raise UnknownSourceError(f"{key} not in plan")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "entries": [
                {"lang": e.lang, "source": e.source,
                 "available_tokens": e.available_tokens,
                 "budget_tokens": e.budget_tokens,
                 "sampling_fraction": e.sampling_fraction}
                for e in self.entries
            ],
        }


@dataclass(frozen=True)
class RatioTargets:
    zh_en: tuple[float, float] = (0.7, 0.3)
    domain_general: tuple[float, float] = (0.6, 0.4)
    tolerance: float = 0.02

    def __post_init__(self):
        for pair in (self.zh_en, self.domain_general):
            if abs(sum(pair) - 1.0) > 1e-9:
                raise ValueError(f"target pair {pair} must sum to 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")


def plan_sampling(manifest: CorpusManifest,
                  budgets: dict[SourceKey, int], seed: int = 0) -> SamplingPlan:
    """Build per-source sampling fractions reproducing the budgets exactly."""
    entries = []
    for e in manifest.entries:
        key = (e.lang, e.source)
        budget = budgets.get(key)
        if budget is None:
            raise UnknownSourceError(f"no budget for {key}")
        if budget > e.total_tokens:
            raise BudgetExceedsAvailabilityError(key, budget, e.total_tokens)
        if budget <= 0:
            raise MixingError(f"{key}: budget must be positive")
        entries.append(PlanEntry(e.lang, e.source, e.total_tokens, budget))
    return SamplingPlan(tuple(entries), seed=seed)


@dataclass(frozen=True)
class RatioReport:
    zh_share: float
    domain_share: float
    zh_ok: bool
    domain_ok: bool

    @property
    def passed(self) -> bool:
        return self.zh_ok and self.domain_ok


def check_ratios(plan: SamplingPlan, targets: RatioTargets) -> RatioReport:
    total = sum(e.budget_tokens for e in plan.entries)
    zh = sum(e.budget_tokens for e in plan.entries if e.lang == "zh")
    domain = sum(e.budget_tokens for e in plan.entries
                 if e.source not in GENERAL_SOURCES)
    zh_share = zh / total
    domain_share = domain / total
    return RatioReport(
        zh_share=zh_share,
        domain_share=domain_share,
        zh_ok=abs(zh_share - targets.zh_en[0]) <= targets.tolerance,
        domain_ok=abs(domain_share - targets.domain_general[0]) <= targets.tolerance,
    )


def _source_rng(seed: int, key: SourceKey) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}|{key[0]}|{key[1]}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def execute_sampling(docs: Iterable[Document], plan: SamplingPlan) -> Iterator[Document]:
    """Seeded Bernoulli selection per source; expected kept tokens = budget.

    Output is grouped by (lang, source) in plan order, preserving each
    group's original order, so identical inputs give identical bytes.
    """
    groups: dict[SourceKey, list[Document]] = {
        (e.lang, e.source): [] for e in plan.entries}
    for doc in docs:
        key = (doc.lang, doc.source)
        if key not in groups:
            raise UnknownSourceError(f"document {doc.id} source {key} not in plan")
        groups[key].append(doc)
    for e in plan.entries:
        rng = _source_rng(plan.seed, (e.lang, e.source))
        fraction = e.sampling_fraction
        for doc in groups[(e.lang, e.source)]:
            if fraction >= 1.0 or rng.random() < fraction:
                yield doc


@dataclass(frozen=True)
class MixReport:
    general_share: float
    domain_share: float
    passed: bool


def check_post_training_mix(manifest: CorpusManifest,
                            general_target: float = 0.7,
                            tolerance: float = 0.05) -> MixReport:
    """Check the general-vs-domain sample split of an instruction manifest.

    Entries tagged with a category use it (domain = zh_polilegal); untagged
    entries fall back to the source-based split used for pretraining data.
    """
    general = domain = 0
    for e in manifest.entries:
        if e.category is not None:
            is_domain = e.category == "zh_polilegal"
        else:
            is_domain = e.source not in GENERAL_SOURCES
        if is_domain:
            domain += e.n_documents
        else:
            general += e.n_documents
    total = general + domain
    if total == 0:
        raise MixingError("manifest has no samples")
    general_share = general / total
    return MixReport(
        general_share=general_share,
        domain_share=domain / total,
        passed=abs(general_share - general_target) <= tolerance,
    )
