"""Benchmark metric suite: accuracy, F-beta/macro-F1, ROUGE-L, soft-F1 for
span extraction, rc-F1 for reading comprehension, and normalized
log-deviation for sentencing terms. Every metric returns a value in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from enum import Enum
from typing import Optional, Sequence

from .corpus import tokenize


class MetricError(Exception):
    pass


class LengthMismatchError(MetricError):
    pass


class NoGoldError(MetricError):
    pass


class OutOfRangeError(MetricError):
    pass


class ShapeMismatchError(MetricError):
    pass


class MetricKind(str, Enum):
    ACCURACY = "accuracy"
    MACRO_F1 = "macro_f1"
    F05 = "f05"
    SOFT_F1 = "soft_f1"
    RC_F1 = "rc_f1"
    ROUGE_L = "rouge_l"
    NLD = "nld"


def accuracy(preds: Sequence, golds: Sequence) -> float:
    if len(preds) != len(golds):
        raise LengthMismatchError(f"{len(preds)} vs {len(golds)}")
    if not preds:
        raise LengthMismatchError("accuracy undefined on empty lists")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


def f_beta(precision: float, recall: float, beta: float = 1.0) -> float:
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise OutOfRangeError("precision and recall must be in [0, 1]")
    if beta <= 0:
        raise OutOfRangeError("beta must be positive")
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def macro_f1(preds: Sequence, golds: Sequence, beta: float = 1.0) -> float:
    """Macro-averaged F over the label set observed in predictions or golds."""
    if len(preds) != len(golds):
        raise LengthMismatchError(f"{len(preds)} vs {len(golds)}")
    if not preds:
        raise LengthMismatchError("macro F undefined on empty lists")
    labels = sorted(set(preds) | set(golds), key=str)
    scores = []
    for label in labels:
        tp = sum(1 for p, g in zip(preds, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(preds, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(preds, golds) if p != label and g == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(f_beta(precision, recall, beta))
    return sum(scores) / len(scores)


def _lcs_len(a: Sequence, b: Sequence) -> int:
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return 0
    prev = [0] * (n + 1)
    for i in range(1, m + 1):
        cur = [0] * (n + 1)
        ai = a[i - 1]
        for j in range(1, n + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[n]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """LCS-based balanced F1 on token sequences."""
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_len(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return f_beta(precision, recall, 1.0)


def token_overlap_f1(pred: Sequence[str], gold: Sequence[str]) -> float:
    """Bag-of-tokens (multiset) F1 between two token lists."""
    if not pred or not gold:
        return 0.0
    overlap = sum((Counter(pred) & Counter(gold)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gold)
    return f_beta(precision, recall, 1.0)


def soft_f1(pred_spans: Sequence[Sequence[str]],
            gold_spans: Sequence[Sequence[str]],
            optimal: bool = False) -> float:
    """Span-set F1 with partial credit per matched span pair.

    Pairs are matched one-to-one in descending pair-F1 order (greedy by
    default; optimal assignment when requested) and the matched F1 mass is
    scored as 2 * mass / (|pred| + |gold|).
    """
    if not pred_spans and not gold_spans:
        return 1.0
    if not pred_spans or not gold_spans:
        return 0.0
    pair_scores = [
        (token_overlap_f1(p, g), pi, gi)
        for pi, p in enumerate(pred_spans)
        for gi, g in enumerate(gold_spans)
    ]
    if optimal:
        from scipy.optimize import linear_sum_assignment
        import numpy as np
        cost = np.zeros((len(pred_spans), len(gold_spans)))
        for s, pi, gi in pair_scores:
            cost[pi, gi] = -s
        rows, cols = linear_sum_assignment(cost)
        mass = float(-cost[rows, cols].sum())
    else:
        pair_scores.sort(key=lambda t: (-t[0], t[1], t[2]))
        used_p: set[int] = set()
        used_g: set[int] = set()
        mass = 0.0
        for s, pi, gi in pair_scores:
            if s == 0.0:
                break
            if pi in used_p or gi in used_g:
                continue
            used_p.add(pi)
            used_g.add(gi)
            mass += s
    return 2.0 * mass / (len(pred_spans) + len(gold_spans))


def rc_f1(pred_answer: Sequence[str],
          gold_answers: Sequence[Sequence[str]]) -> float:
    """Best bag-of-tokens F1 of the prediction against any gold answer."""
    if not gold_answers:
        raise NoGoldError("at least one gold answer required")
    return max(token_overlap_f1(pred_answer, g) for g in gold_answers)


def nld(pred_term: float, gold_term: float, max_term: float) -> float:
    """Normalized log-deviation between predicted and gold terms; 1 is exact."""
    if max_term <= 0:
        raise OutOfRangeError("max_term must be positive")
    if not (0 <= pred_term <= max_term and 0 <= gold_term <= max_term):
        raise OutOfRangeError("terms must lie in [0, max_term]")
    deviation = abs(math.log(pred_term + 1) - math.log(gold_term + 1))
    return 1.0 - min(1.0, deviation / math.log(max_term + 1))


def _as_tokens(value) -> list[str]:
    if isinstance(value, str):
        return tokenize(value)
    return list(value)


def score(kind: MetricKind, pred, gold, max_term: Optional[float] = None) -> float:
    """Dispatch one (pred, gold) example to its metric; output in [0, 1].

    Strings are segmented with the corpus token counter's rule before
    token-level metrics are applied.
    """
    try:
        if kind is MetricKind.ACCURACY:
            return 1.0 if pred == gold else 0.0
        if kind is MetricKind.MACRO_F1:
            return macro_f1(list(pred), list(gold))
        if kind is MetricKind.F05:
            return macro_f1(list(pred), list(gold), beta=0.5)
        if kind is MetricKind.ROUGE_L:
            return rouge_l(_as_tokens(pred), _as_tokens(gold))
        if kind is MetricKind.SOFT_F1:
            return soft_f1([_as_tokens(s) for s in pred],
                           [_as_tokens(s) for s in gold])
        if kind is MetricKind.RC_F1:
            # gold is one answer string or a list of alternative answers
            golds = [gold] if isinstance(gold, str) else list(gold)
            return rc_f1(_as_tokens(pred), [_as_tokens(g) for g in golds])
        if kind is MetricKind.NLD:
            return nld(float(pred), float(gold), max_term if max_term else 300.0)
    except (TypeError, AttributeError) as exc:
        raise ShapeMismatchError(f"{kind.value}: {exc}") from exc
    raise ShapeMismatchError(f"unknown metric kind {kind!r}")
