"""Core data types, token counting, manifest accounting and JSONL stream I/O.

Everything downstream (filtering, scoring, mixing, packing) works on the
types defined here. Documents travel as line-delimited JSON records; the
manifest is a single JSON document with an entries array plus grand totals.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable, Iterator, Optional, TextIO

LANGS = frozenset({"zh", "en"})

SOURCES = frozenset({
    "general_industry",
    "legal_political_news",
    "judicial_judgments",
    "articles_interpretations",
    "legal_books_papers",
})

GENERAL_SOURCES = frozenset({"general_industry"})

INSTRUCTION_CATEGORIES = frozenset({"en_general", "zh_general", "zh_polilegal"})

INSTRUCTION_TASKS = frozenset({
    "dialogue_qa",
    "instruction_following",
    "article_memory",
    "polilegal_tasks",
    "document_generation",
})


class CorpusError(Exception):
    pass


class ParseError(CorpusError):
    """One malformed line in a document stream."""

    def __init__(self, line_no: int, message: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if message else f"line {line_no}")


class ZeroTotalError(CorpusError):
    pass


# --- token counting ---------------------------------------------------------

# CJK unified ideographs (base + ext A) plus compatibility ideographs.
_CJK = r"㐀-䶿一-鿿豈-﫿"
_TOKEN_RE = re.compile(rf"[{_CJK}]|[^\s{_CJK}]+")

TokenCounter = Callable[[str], int]


def default_counter(text: str) -> int:
    """Count one token per CJK character and one per non-CJK word run."""
    return len(_TOKEN_RE.findall(text))


def tokenize(text: str) -> list[str]:
    """Segment text with the same rule as the default counter."""
    return _TOKEN_RE.findall(text)


def count_tokens(text: str, counter: Optional[TokenCounter] = None) -> int:
    if counter is None:
        counter = default_counter
    return counter(text)


# --- domain types -----------------------------------------------------------


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    lang: str
    source: str
    token_count: int
    score: Optional[int] = None

    def __post_init__(self):
        if self.lang not in LANGS:
            raise ValueError(f"unknown lang {self.lang!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.token_count < 0:
            raise ValueError("token_count must be non-negative")
        if self.score is not None and not 0 <= self.score <= 5:
            raise ValueError(f"score {self.score} outside [0, 5]")

    @classmethod
    def create(cls, id: str, text: str, lang: str, source: str,
               counter: Optional[TokenCounter] = None,
               score: Optional[int] = None) -> "Document":
        return cls(id=id, text=text, lang=lang, source=source,
                   token_count=count_tokens(text, counter), score=score)

    def with_score(self, score: int) -> "Document":
        return Document(id=self.id, text=self.text, lang=self.lang,
                        source=self.source, token_count=self.token_count,
                        score=score)


@dataclass(frozen=True)
class InstructionSample:
    query: str
    golden_answer: str
    category: str
    task: str

    def __post_init__(self):
        if not self.query or not self.golden_answer:
            raise ValueError("query and golden_answer must be non-empty")
        if self.category not in INSTRUCTION_CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.task not in INSTRUCTION_TASKS:
            raise ValueError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class PreferencePair:
    query: str
    chosen: str
    rejected: str

    def __post_init__(self):
        if not self.query or not self.chosen or not self.rejected:
            raise ValueError("all preference-pair fields must be non-empty")
        if self.chosen == self.rejected:
            raise ValueError("chosen and rejected must differ")


@dataclass(frozen=True)
class ManifestEntry:
    """One per-source accounting row.

    For pretraining corpora n_documents/total_tokens/sampled_tokens are
    document and token counts; for instruction corpora n_documents holds the
    sample count and the token fields may be zero. category tags instruction
    rows for the general-vs-domain mix check.
    """

    lang: str
    source: str
    n_documents: int
    total_tokens: int = 0
    sampled_tokens: int = 0
    category: Optional[str] = None


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    total_documents: int
    total_tokens: int = 0
    total_sampled_tokens: int = 0

    @classmethod
    def from_entries(cls, entries: Iterable[ManifestEntry]) -> "CorpusManifest":
        entries = list(entries)
        return cls(
            entries=entries,
            total_documents=sum(e.n_documents for e in entries),
            total_tokens=sum(e.total_tokens for e in entries),
            total_sampled_tokens=sum(e.sampled_tokens for e in entries),
        )

    def to_dict(self) -> dict:
        return {
            "entries": [asdict(e) for e in self.entries],
            "total_documents": self.total_documents,
            "total_tokens": self.total_tokens,
            "total_sampled_tokens": self.total_sampled_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusManifest":
        return cls(
            entries=[ManifestEntry(**e) for e in d["entries"]],
            total_documents=d["total_documents"],
            total_tokens=d.get("total_tokens", 0),
            total_sampled_tokens=d.get("total_sampled_tokens", 0),
        )


def _round_sig(n: int, sig_figs: int) -> int:
    if n == 0:
        return 0
    digits = len(str(abs(n)))
    scale = 10 ** max(0, digits - sig_figs)
    return int(round(n / scale)) * scale


@dataclass
class ManifestViolation:
    field: str
    expected: int
    actual: int

    def __str__(self):
        return f"{self.field}: declared {self.expected}, computed {self.actual}"


def validate_manifest(manifest: CorpusManifest,
                      sig_figs: Optional[int] = None) -> list[ManifestViolation]:
    """Check declared grand totals against entry sums and per-entry budgets.

    Returns an empty list iff everything is consistent. Published corpus
    tables quote rounded totals; pass sig_figs to compare both sides after
    rounding to that many significant figures instead of exactly.
    """
    def cmp(a: int, b: int) -> bool:
        if sig_figs is None:
            return a == b
        return _round_sig(a, sig_figs) == _round_sig(b, sig_figs)

    violations: list[ManifestViolation] = []
    sums = {
        "total_documents": sum(e.n_documents for e in manifest.entries),
        "total_tokens": sum(e.total_tokens for e in manifest.entries),
        "total_sampled_tokens": sum(e.sampled_tokens for e in manifest.entries),
    }
    for name, computed in sums.items():
        declared = getattr(manifest, name)
        if not cmp(declared, computed):
            violations.append(ManifestViolation(name, declared, computed))
    for i, e in enumerate(manifest.entries):
        if e.sampled_tokens > e.total_tokens:
            violations.append(ManifestViolation(
                f"entries[{i}].sampled_tokens", e.total_tokens, e.sampled_tokens))
    return violations


def compute_ratios(manifest: CorpusManifest) -> dict[str, float]:
    """Sampled-token shares: Chinese share and domain (non-general) share."""
    total = sum(e.sampled_tokens for e in manifest.entries)
    if total == 0:
        raise ZeroTotalError("manifest has zero sampled tokens")
    zh = sum(e.sampled_tokens for e in manifest.entries if e.lang == "zh")
    domain = sum(e.sampled_tokens for e in manifest.entries
                 if e.source not in GENERAL_SOURCES)
    return {"zh_en_ratio": zh / total, "domain_general_ratio": domain / total}


# --- stream I/O --------------------------------------------------------------

_DOC_FIELDS = {"id", "text", "lang", "source", "score", "token_count"}


@dataclass
class ReadReport:
    n_ok: int = 0
    errors: list[ParseError] = field(default_factory=list)


def read_documents(stream: TextIO,
                   counter: Optional[TokenCounter] = None,
                   report: Optional[ReadReport] = None) -> Iterator[Document]:
    """Parse a line-delimited document stream.

    Malformed lines are recorded in the report (with 1-based line numbers)
    and skipped; parsing continues.
    """
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            unknown = set(rec) - _DOC_FIELDS
            if unknown:
                raise ValueError(f"unknown fields {sorted(unknown)}")
            token_count = rec.get("token_count")
            if token_count is None:
                token_count = count_tokens(rec["text"], counter)
            doc = Document(id=rec["id"], text=rec["text"], lang=rec["lang"],
                           source=rec["source"], token_count=token_count,
                           score=rec.get("score"))
        except (ValueError, KeyError, TypeError) as exc:
            if report is not None:
                report.errors.append(ParseError(line_no, str(exc)))
            continue
        if report is not None:
            report.n_ok += 1
        yield doc


def write_documents(docs: Iterable[Document], stream: TextIO) -> int:
    """Serialize documents one JSON object per line. Returns count written."""
    n = 0
    for doc in docs:
        rec = {"id": doc.id, "text": doc.text, "lang": doc.lang,
               "source": doc.source, "token_count": doc.token_count}
        if doc.score is not None:
            rec["score"] = doc.score
        stream.write(json.dumps(rec, ensure_ascii=False) + "\n")
        n += 1
    return n
