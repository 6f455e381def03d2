"""LLM-based quality scoring: rubric prompt, response parsing, corpus
scoring through an endpoint, agreement statistics and threshold filtering."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .client import ChatRequest, EndpointConfig, Transport, batch_complete
from .corpus import Document


class ScoringError(Exception):
    pass


class EmptyTextError(ScoringError):
    pass


class OutOfRangeError(ScoringError):
    def __init__(self, value: int):
        self.value = value
        super().__init__(f"score {value} outside [0, 5]")


class UnparseableError(ScoringError):
    pass


class LengthMismatchError(ScoringError):
    pass


class DegenerateRanksError(ScoringError):
    """Rank correlation is undefined when either list is constant."""


class UnscoredDocumentError(ScoringError):
    pass


SCORING_PROMPT_TEMPLATE = """\
The following is a text fragment. Please evaluate whether it has high natural language value and whether it is suitable for training LLMs, according to the cumulative 5-point scoring criteria below.

Complete the sections "Scoring Rationale" and "Score".

Scoring Criteria

- If the content contains only meaningless or private information (e.g., random code, HTTP links, copyright notices, personal identifiable information, or binary encodings of images), assign 0 points.
- If the fragment provides some basic information, even if it includes advertisements or promotional content, add 1 point.
- If the writing style is fluent, semantically coherent, free of repetition and grammatical errors, add 1 point.
- If the fragment presents relatively complete semantic content, is written fluently, and focuses on a single coherent topic rather than a collage of unrelated segments, add 1 point.
- If the fragment has clear educational or literary value, or provides meaningful viewpoints that facilitate learning, with clear and coherent writing (e.g., textbook- or tutorial-like content with minimal redundancy), add 1 point.
- If the fragment demonstrates outstanding educational value or extremely high information density, offering deep, comprehensive insights with explicit reasoning and no irrelevant content, add 1 point.

Text Fragment

{text}

Scoring Rationale

Briefly explain the rationale for the score (no more than 50 words).

Score

Provide the score in a fixed format as a single integer from 0 to 5. Do not output any additional content.
"""


def build_scoring_prompt(text: str) -> str:
    if not text:
        raise EmptyTextError("cannot score empty text")
    return SCORING_PROMPT_TEMPLATE.format(text=text)


_INT_RE = re.compile(r"(?<![\d.])\d+(?![\d.])")


def parse_score_response(response: str) -> int:
    """Extract the final standalone integer; rationale text is ignored."""
    matches = _INT_RE.findall(response)
    if not matches:
        raise UnparseableError(f"no integer found in {response!r:.80}")
    value = int(matches[-1])
    if not 0 <= value <= 5:
        raise OutOfRangeError(value)
    return value


@dataclass(frozen=True)
class ScoreRecord:
    doc_id: str
    score: int
    rationale: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.score <= 5:
            raise ValueError(f"score {self.score} outside [0, 5]")


@dataclass(frozen=True)
class ScoredDoc:
    doc: Document
    record: Optional[ScoreRecord] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.record is not None


def _rationale_of(response: str) -> Optional[str]:
    body = response.rstrip()
    spans = [m.span() for m in _INT_RE.finditer(body)]
    if spans:
        body = body[: spans[-1][0]].rstrip()
    words = body.split()
    return " ".join(words[:50]) if words else None


def select_sample(n_docs: int, sample_n: Optional[int], seed: int) -> list[int]:
    """Seeded, order-preserving index sample."""
    if sample_n is None or sample_n >= n_docs:
        return list(range(n_docs))
    rng = random.Random(seed)
    return sorted(rng.sample(range(n_docs), sample_n))


def score_corpus(docs: Sequence[Document], cfg: EndpointConfig,
                 transport: Optional[Transport] = None,
                 sample_n: Optional[int] = None, seed: int = 0,
                 model: str = "default") -> list[ScoredDoc]:
    """Score documents (optionally a seeded sample) through an endpoint.

    Endpoint or parse failures are carried as error markers on the affected
    documents; scores are never fabricated.
    """
    docs = list(docs)
    indices = select_sample(len(docs), sample_n, seed)
    reqs = [ChatRequest.user(build_scoring_prompt(docs[i].text), model=model,
                             temperature=0.0)
            for i in indices]
    items = batch_complete(reqs, cfg, transport)
    out: list[ScoredDoc] = []
    for idx, item in zip(indices, items):
        doc = docs[idx]
        if not item.ok:
            out.append(ScoredDoc(doc, error=str(item.error)))
            continue
        try:
            score = parse_score_response(item.result.content)
        except ScoringError as exc:
            out.append(ScoredDoc(doc, error=str(exc)))
            continue
        record = ScoreRecord(doc.id, score, _rationale_of(item.result.content))
        out.append(ScoredDoc(doc.with_score(score), record=record))
    return out


# --- agreement statistics ----------------------------------------------------


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class ScorerAgreement:
    spearman_rho: float
    mae: float
    adjacent_accuracy: float

    def __post_init__(self):
        if not 0.0 <= self.adjacent_accuracy <= 1.0:
            raise ValueError("adjacent_accuracy outside [0, 1]")
        if self.mae < 0:
            raise ValueError("mae must be non-negative")


def scorer_agreement(preds: Sequence[float], golds: Sequence[float]) -> ScorerAgreement:
    """Spearman's rho (average-rank ties), MAE, and within-one accuracy."""
    if len(preds) != len(golds):
        raise LengthMismatchError(f"{len(preds)} vs {len(golds)}")
    if len(preds) == 0:
        raise LengthMismatchError("empty inputs")
    p = np.asarray(preds, dtype=float)
    g = np.asarray(golds, dtype=float)
    if np.all(p == p[0]) or np.all(g == g[0]):
        raise DegenerateRanksError("constant score list, rho undefined")
    rp = average_ranks(p)
    rg = average_ranks(g)
    rp_c = rp - rp.mean()
    rg_c = rg - rg.mean()
    rho = float(np.dot(rp_c, rg_c) / np.sqrt(np.dot(rp_c, rp_c) * np.dot(rg_c, rg_c)))
    mae = float(np.mean(np.abs(p - g)))
    adjacent = float(np.mean(np.abs(p - g) <= 1.0))
    return ScorerAgreement(rho, mae, adjacent)


def threshold_filter(docs: Iterable[Document], tau: int) -> Iterator[Document]:
    """Keep documents with score >= tau, preserving order."""
    for doc in docs:
        if doc.score is None:
            raise UnscoredDocumentError(doc.id)
        if doc.score >= tau:
            yield doc
