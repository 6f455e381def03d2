"""Hard-sample mining, preference-pair construction, and the preference
objective evaluated as a pure function of supplied sequence
log-probabilities.

Policy and reference log-probabilities come from an inference endpoint's
logprob mode or from fixtures; nothing here runs a model. The loss is
-log sigmoid(beta * h) with h the chosen-minus-rejected margin of the
policy-vs-reference log ratios, computed in softplus form so it stays
finite for |beta * h| up to 1e3, plus an optional per-token NLL term on
the chosen response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .corpus import PreferencePair


class HipoError(Exception):
    pass


class NonFiniteError(HipoError):
    pass


class NoGenerationsError(HipoError):
    pass


class MissingOutcomeError(HipoError):
    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"no outcome for active query {query_id}")


@dataclass(frozen=True)
class Generation:
    text: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("generation score must be in [0, 1]")


@dataclass(frozen=True)
class EvalOutcome:
    query_id: str
    metric_kind: str
    score: float
    generations: tuple[Generation, ...]

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must be in [0, 1]")


@dataclass(frozen=True)
class LogProbQuad:
    policy_logp_chosen: float
    policy_logp_rejected: float
    ref_logp_chosen: float
    ref_logp_rejected: float
    chosen_token_count: int = 1

    def __post_init__(self):
        values = (self.policy_logp_chosen, self.policy_logp_rejected,
                  self.ref_logp_chosen, self.ref_logp_rejected)
        if not all(math.isfinite(v) for v in values):
            raise NonFiniteError(f"non-finite log-probability in {values}")
        if any(v > 0 for v in values):
            raise ValueError("log-probabilities must be <= 0")
        if self.chosen_token_count < 1:
            raise ValueError("chosen_token_count must be >= 1")

    @property
    def margin(self) -> float:
        return ((self.policy_logp_chosen - self.ref_logp_chosen)
                - (self.policy_logp_rejected - self.ref_logp_rejected))


@dataclass(frozen=True)
class HipoConfig:
    beta: float = 0.1
    nll_lambda: float = 0.1
    hard_threshold: float = 0.8
    nll_per_token: bool = True

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.nll_lambda < 0:
            raise ValueError("nll_lambda must be non-negative")
        if not 0.0 <= self.hard_threshold <= 1.0:
            raise ValueError("hard_threshold must be in [0, 1]")


def _softplus(x: float) -> float:
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def dpo_loss(quad: LogProbQuad, beta: float) -> float:
    """-log sigmoid(beta * margin), always positive, ln 2 at zero margin."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _softplus(-beta * quad.margin)


def dpo_loss_gradients(quad: LogProbQuad, beta: float) -> dict[str, float]:
    """Partial derivatives of dpo_loss w.r.t. each of the four log-probs."""
    g = beta * _sigmoid(-beta * quad.margin)
    return {
        "policy_logp_chosen": -g,
        "policy_logp_rejected": g,
        "ref_logp_chosen": g,
        "ref_logp_rejected": -g,
    }


def nll_term(quad: LogProbQuad, per_token: bool = True) -> float:
    """Negative log-likelihood of the chosen response, per-token by default."""
    nll = -quad.policy_logp_chosen
    if per_token:
        nll /= quad.chosen_token_count
    return nll


def hipo_loss(quad: LogProbQuad, cfg: HipoConfig) -> float:
    dpo = dpo_loss(quad, cfg.beta)
    if cfg.nll_lambda == 0.0:
        return dpo
    return cfg.nll_lambda * nll_term(quad, cfg.nll_per_token) + dpo


# --- mining and pair construction --------------------------------------------


def mine_hard_samples(outcomes: Sequence[EvalOutcome], tau: float) -> set[str]:
    """Queries whose score falls strictly below the threshold."""
    return {o.query_id for o in outcomes if o.score < tau}


def build_preference_pairs(query: str, golden: str,
                           outcome: EvalOutcome) -> Optional[PreferencePair]:
    """Pair the golden answer against the worst distinct generation.

    Returns None when every generation equals the golden answer (the
    chosen/rejected distinctness invariant would be violated). Ties on the
    low score break by first occurrence.
    """
    if not outcome.generations:
        raise NoGenerationsError(outcome.query_id)
    rejected: Optional[Generation] = None
    for gen in outcome.generations:
        if gen.text == golden:
            continue
        if rejected is None or gen.score < rejected.score:
            rejected = gen
    if rejected is None:
        return None
    return PreferencePair(query=query, chosen=golden, rejected=rejected.text)


# --- iteration state ----------------------------------------------------------


@dataclass(frozen=True)
class HipoState:
    iteration: int
    active: frozenset[str]
    resolved: frozenset[str]
    reference_policy: str = "initial"

    def __post_init__(self):
        if self.active & self.resolved:
            raise ValueError("active and resolved sets must be disjoint")

    @classmethod
    def initial(cls, query_ids: Sequence[str]) -> "HipoState":
        return cls(iteration=0, active=frozenset(query_ids), resolved=frozenset())

    def to_dict(self) -> dict:
        return {"iteration": self.iteration,
                "active": sorted(self.active),
                "resolved": sorted(self.resolved),
                "reference_policy": self.reference_policy}


def advance_iteration(state: HipoState, outcomes: Sequence[EvalOutcome],
                      tau: float) -> HipoState:
    """Move newly passing queries to resolved; resolved never reactivates."""
    by_id = {o.query_id: o for o in outcomes}
    for qid in state.active:
        if qid not in by_id:
            raise MissingOutcomeError(qid)
    passing = {qid for qid in state.active if by_id[qid].score >= tau}
    return HipoState(
        iteration=state.iteration + 1,
        active=state.active - passing,
        resolved=state.resolved | passing,
        reference_policy=f"iteration_{state.iteration}",
    )


@dataclass(frozen=True)
class HipoQuery:
    query_id: str
    query: str
    golden: str
    metric_kind: str = "accuracy"


@dataclass
class IterationRecord:
    state: HipoState
    outcomes: list[EvalOutcome] = field(default_factory=list)
    pairs: list[PreferencePair] = field(default_factory=list)


GenerateFn = Callable[[HipoQuery, int], list[str]]
EvaluateFn = Callable[[HipoQuery, str], float]


def run_hipo_iterations(queries: Sequence[HipoQuery], generate: GenerateFn,
                        evaluate: EvaluateFn, cfg: HipoConfig,
                        n_iterations: int,
                        n_generations: int = 4) -> list[IterationRecord]:
    """Drive the mining loop: generate, evaluate, pair, shrink the active set.

    Per iteration, each active query's best-generation score decides whether
    it resolves; hard queries contribute a preference pair when any
    generation differs from the golden answer.
    """
    by_id = {q.query_id: q for q in queries}
    state = HipoState.initial([q.query_id for q in queries])
    records: list[IterationRecord] = []
    for it in range(n_iterations):
        outcomes: list[EvalOutcome] = []
        pairs: list[PreferencePair] = []
        for qid in sorted(state.active):
            q = by_id[qid]
            texts = generate(q, n_generations)
            gens = tuple(Generation(t, evaluate(q, t)) for t in texts)
            best = max((g.score for g in gens), default=0.0)
            outcome = EvalOutcome(qid, q.metric_kind, best, gens)
            outcomes.append(outcome)
            if outcome.score < cfg.hard_threshold:
                pair = build_preference_pairs(q.query, q.golden, outcome)
                if pair is not None:
                    pairs.append(pair)
        next_state = advance_iteration(state, outcomes, cfg.hard_threshold)
        records.append(IterationRecord(state=next_state, outcomes=outcomes,
                                       pairs=pairs))
        state = next_state
        if not state.active:
            break
    return records
