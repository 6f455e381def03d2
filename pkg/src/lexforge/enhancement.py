"""Knowledge-guided instruction synthesis for statutory provisions.

A synthesis prompt embeds the statute text and enumerates the requested
analysis dimensions as generation constraints; the model must answer with a
JSON array of {dimension, instruction, output} objects. Free-text responses
are rejected rather than heuristically repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class KnowledgeDimension(str, Enum):
    NORMATIVE_KNOWLEDGE = "normative_knowledge"
    LEGAL_ELEMENTS_AND_CONSEQUENCES = "legal_elements_and_consequences"
    CONCEPTUAL_KNOWLEDGE = "conceptual_knowledge"
    SYSTEMIC_KNOWLEDGE = "systemic_knowledge"
    BOUNDARY_AND_DISTINCTION = "boundary_and_distinction"
    VALUE_AND_PRINCIPLES = "value_and_principles"
    SUBJECT_OBJECT_RELATIONS = "subject_object_relations"
    INTERPRETATION_AND_DISCRETION = "interpretation_and_discretion"
    TEMPORAL_SCOPE = "temporal_scope"


ALL_DIMENSIONS = tuple(KnowledgeDimension)

_DIM_DESCRIPTIONS = {
    KnowledgeDimension.NORMATIVE_KNOWLEDGE:
        "the norm type and normative force of the provision",
    KnowledgeDimension.LEGAL_ELEMENTS_AND_CONSEQUENCES:
        "the constitutive elements and the legal consequences they trigger",
    KnowledgeDimension.CONCEPTUAL_KNOWLEDGE:
        "definitions of the legal concepts the provision relies on",
    KnowledgeDimension.SYSTEMIC_KNOWLEDGE:
        "how the provision relates to neighboring provisions and the wider system",
    KnowledgeDimension.BOUNDARY_AND_DISTINCTION:
        "applicability boundaries and distinctions from similar conduct",
    KnowledgeDimension.VALUE_AND_PRINCIPLES:
        "the legal principles and values the provision embodies",
    KnowledgeDimension.SUBJECT_OBJECT_RELATIONS:
        "the responsible subjects and legal counterparts involved",
    KnowledgeDimension.INTERPRETATION_AND_DISCRETION:
        "interpretive questions and the scope of discretion",
    KnowledgeDimension.TEMPORAL_SCOPE:
        "temporal applicability and retroactivity",
}


class EnhancementError(Exception):
    pass


class EmptyStatuteError(EnhancementError):
    pass


class EmptyDimensionSetError(EnhancementError):
    pass


class MalformedOutputError(EnhancementError):
    pass


class UnknownDimensionError(EnhancementError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown dimension label {label!r}")


@dataclass(frozen=True)
class SynthesizedPair:
    dimension: KnowledgeDimension
    instruction: str
    output: str
    statute_id: str

    def __post_init__(self):
        if not self.instruction or not self.output:
            raise ValueError("instruction and output must be non-empty")


def build_synthesis_prompt(statute_id: str, statute_text: str,
                           dims: Sequence[KnowledgeDimension]) -> str:
    """Prompt requesting one instruction-response pair per dimension, as JSON."""
    if not statute_text:
        raise EmptyStatuteError(statute_id)
    if not dims:
        raise EmptyDimensionSetError("at least one dimension required")
    constraint_lines = "\n".join(
        f"- {d.value}: produce one instruction-response pair analyzing {_DIM_DESCRIPTIONS[d]}."
        for d in dims)
    dim_json = json.dumps([d.value for d in dims])
    return (
        "You are a legal analyst. Given the statutory provision below, write "
        "one high-quality instruction-response pair per requested knowledge "
        "dimension. Each instruction must be answerable from the provision; "
        "each response must be legally grounded and self-contained.\n\n"
        f"Provision ({statute_id}):\n{statute_text}\n\n"
        "Generation constraints:\n"
        f"{constraint_lines}\n\n"
        f"Dimensions: {dim_json}\n\n"
        "Answer with ONLY a JSON array of objects with exactly the keys "
        '"dimension", "instruction", "output". Use the dimension names '
        "exactly as listed. Do not output any other text.\n"
    )


def parse_synthesis_output(response: str, dims: Sequence[KnowledgeDimension],
                           statute_id: str = "") -> list[SynthesizedPair]:
    """Parse the JSON array response into pairs.

    Unknown dimension labels are rejected; dimensions missing from the
    response are simply absent from the result (see
    validate_dimension_coverage), never fabricated.
    """
    try:
        data = json.loads(response)
    except json.JSONDecodeError as exc:
        raise MalformedOutputError(str(exc)) from exc
    if not isinstance(data, list):
        raise MalformedOutputError("expected a JSON array")
    valid = {d.value for d in KnowledgeDimension}
    pairs: list[SynthesizedPair] = []
    for item in data:
        if not isinstance(item, dict) or not {"dimension", "instruction", "output"} <= set(item):
            raise MalformedOutputError(f"bad item {item!r:.80}")
        label = item["dimension"]
        if label not in valid:
            raise UnknownDimensionError(label)
        pairs.append(SynthesizedPair(
            dimension=KnowledgeDimension(label),
            instruction=item["instruction"],
            output=item["output"],
            statute_id=statute_id,
        ))
    return pairs


@dataclass(frozen=True)
class CoverageReport:
    covered: tuple[KnowledgeDimension, ...]
    missing: tuple[KnowledgeDimension, ...]
    duplicated: tuple[KnowledgeDimension, ...]

    @property
    def complete(self) -> bool:
        return not self.missing and not self.duplicated


def validate_dimension_coverage(pairs: Iterable[SynthesizedPair],
                                dims: Sequence[KnowledgeDimension]) -> CoverageReport:
    counts: dict[KnowledgeDimension, int] = {}
    for p in pairs:
        counts[p.dimension] = counts.get(p.dimension, 0) + 1
    covered = tuple(d for d in dims if counts.get(d, 0) >= 1)
    missing = tuple(d for d in dims if counts.get(d, 0) == 0)
    duplicated = tuple(d for d in dims if counts.get(d, 0) > 1)
    return CoverageReport(covered, missing, duplicated)
