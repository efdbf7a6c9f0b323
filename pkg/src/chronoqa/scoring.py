"""Prediction scoring: EM, token F1, year MAE, trend accuracy, and the
temporally-aware reward.

All string comparisons share one normalization (lowercase, ASCII punctuation
removed, English articles dropped, whitespace tokenized) so gold/negative
disjointness is checkable with the same rule used for scoring.

The reward compares a prediction against the gold and the temporally wrong
answers from the same fact group: it is the positive score when that is at
least the best negative score, otherwise minus the best negative score. With
exact match as the scorer this lands in {-1, 0, +1}.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .questions import Question

DEFAULT_PERIOD_EDGES = (1900, 1920, 1940, 1960, 1980, 2000, 2020, 2040)

_ARTICLES = frozenset({"a", "an", "the"})
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_YEAR_PATTERN = re.compile(r"\d+")


def normalize(text: str) -> list[str]:
    """Lowercased tokens with ASCII punctuation and English articles removed."""
    stripped = text.lower().translate(_PUNCT_TABLE)
    return [token for token in stripped.split() if token not in _ARTICLES]


def normalized_key(text: str) -> str:
    """The normalized token sequence as a single comparable string."""
    return " ".join(normalize(text))


def score_em(prediction: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals any normalized gold."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = normalized_key(prediction)
    return int(any(pred == normalized_key(gold) for gold in golds))


def _token_f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def score_f1(prediction: str, golds: Sequence[str]) -> float:
    """Best token-multiset F1 against any gold, in [0, 1]."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = normalize(prediction)
    return max(_token_f1(pred_tokens, normalize(gold)) for gold in golds)


def extract_year(text: str) -> int | None:
    """First integer found in the text, or None."""
    match = _YEAR_PATTERN.search(text)
    return int(match.group()) if match else None


@dataclass(frozen=True, slots=True)
class NumericScore:
    """Year-prediction scores for one item."""

    abs_err: int | None  # None when the prediction has no parseable year
    trend_correct: bool
    parsed: bool


def score_numeric(prediction: str, gold_year: int, ref_year: int) -> NumericScore:
    """Absolute year error plus whether the prediction sits on the gold's
    side of the reference year. An unparseable prediction contributes no
    error term and counts as trend-incorrect.
    """
    if gold_year == ref_year:
        raise ValueError("gold year must differ from the reference year")
    pred_year = extract_year(prediction)
    if pred_year is None:
        return NumericScore(abs_err=None, trend_correct=False, parsed=False)
    gold_side = 1 if gold_year > ref_year else -1
    pred_side = (pred_year > ref_year) - (pred_year < ref_year)
    return NumericScore(abs_err=abs(pred_year - gold_year), trend_correct=pred_side == gold_side, parsed=True)


@dataclass(frozen=True, slots=True)
class Prediction:
    id: str
    prediction: str

    @classmethod
    def from_record(cls, record: Mapping) -> "Prediction":
        return cls(id=str(record["id"]), prediction=str(record["prediction"]))

    def to_record(self) -> dict:
        return {"id": self.id, "prediction": self.prediction}


@dataclass(frozen=True, slots=True)
class RewardRecord:
    """Per-prediction positive score, best negative score, and reward."""

    id: str
    p: float
    n: float
    reward: float

    def to_record(self) -> dict:
        return {"id": self.id, "p": self.p, "n": self.n, "reward": self.reward}


Scorer = Callable[[str, str], float]


def _em_scorer(prediction: str, reference: str) -> float:
    return float(score_em(prediction, [reference]))


def reward(prediction: str, gold: str, negatives: Sequence[str],
           scorer: Scorer | None = None, id: str = "") -> RewardRecord:
    """Score one prediction against the gold and its temporally wrong
    alternatives. Requires gold and negatives to be disjoint after
    normalization; that is a data error, not a scoring outcome.
    """
    gold_key = normalized_key(gold)
    if any(normalized_key(neg) == gold_key for neg in negatives):
        raise ValueError(f"gold answer {gold!r} also appears in the negative set")
    score = scorer or _em_scorer
    p = float(score(prediction, gold))
    n = max((float(score(prediction, neg)) for neg in negatives), default=0.0)
    value = p if p >= n else -n
    return RewardRecord(id=id, p=p, n=n, reward=value)


def reward_records(questions: Iterable["Question"], predictions: Iterable[Prediction],
                   scorer: Scorer | None = None) -> list[RewardRecord]:
    """Reward for every question, matched to predictions by id.

    A question with no prediction scores as an empty prediction.
    """
    pred_map = _prediction_map(predictions)
    records = []
    for question in questions:
        text = pred_map.get(question.id, "")
        records.append(reward(text, question.answers[0], question.negatives,
                              scorer=scorer, id=question.id))
    return records


@dataclass
class _Accumulator:
    count: int = 0
    em_sum: int = 0
    f1_sum: float = 0.0
    numeric_count: int = 0
    parsed_count: int = 0
    abs_err_sum: int = 0
    trend_correct: int = 0

    def add(self, em: int, f1: float, numeric: NumericScore | None) -> None:
        self.count += 1
        self.em_sum += em
        self.f1_sum += f1
        if numeric is not None:
            self.numeric_count += 1
            if numeric.parsed:
                self.parsed_count += 1
                self.abs_err_sum += numeric.abs_err or 0
            self.trend_correct += int(numeric.trend_correct)

    def block(self) -> "MetricBlock":
        em = 100.0 * self.em_sum / self.count if self.count else 0.0
        f1 = 100.0 * self.f1_sum / self.count if self.count else 0.0
        mae = self.abs_err_sum / self.parsed_count if self.parsed_count else None
        trend = 100.0 * self.trend_correct / self.numeric_count if self.numeric_count else None
        return MetricBlock(em=em, f1=f1, mae=mae, trend_acc=trend, count=self.count,
                           numeric_count=self.numeric_count,
                           unparseable_count=self.numeric_count - self.parsed_count)


@dataclass(frozen=True, slots=True)
class MetricBlock:
    """Aggregated metrics for one bucket. em/f1/trend_acc are percentages."""

    em: float
    f1: float
    mae: float | None
    trend_acc: float | None
    count: int
    numeric_count: int
    unparseable_count: int

    def to_record(self) -> dict:
        return {
            "em": round(self.em, 4),
            "f1": round(self.f1, 4),
            "mae": round(self.mae, 4) if self.mae is not None else None,
            "trend_acc": round(self.trend_acc, 4) if self.trend_acc is not None else None,
            "count": self.count,
            "numeric_count": self.numeric_count,
            "unparseable_count": self.unparseable_count,
        }


@dataclass(frozen=True, slots=True)
class EvalReport:
    overall: MetricBlock
    per_period: dict[str, MetricBlock] = field(default_factory=dict)
    per_relation: dict[str, MetricBlock] = field(default_factory=dict)
    count: int = 0

    def to_record(self) -> dict:
        return {
            "overall": self.overall.to_record(),
            "per_period": {label: block.to_record() for label, block in self.per_period.items()},
            "per_relation": {label: block.to_record() for label, block in self.per_relation.items()},
            "count": self.count,
        }


def period_label(year: int, edges: Sequence[int]) -> str:
    """Bucket label for a reference year; bins are half-open [lo, hi)."""
    if year < edges[0]:
        return f"before {edges[0]}"
    for lo, hi in zip(edges, edges[1:]):
        if lo <= year < hi:
            return f"{lo}-{hi}"
    return f"{edges[-1]}+"


def _prediction_map(predictions: Iterable[Prediction]) -> dict[str, str]:
    pred_map: dict[str, str] = {}
    for pred in predictions:
        if pred.id in pred_map:
            raise ValueError(f"duplicate prediction id {pred.id!r}")
        pred_map[pred.id] = pred.prediction
    return pred_map


def evaluate(questions: Sequence["Question"], predictions: Iterable[Prediction], *,
             period_edges: Sequence[int] = DEFAULT_PERIOD_EDGES,
             missing_policy: str = "zero") -> EvalReport:
    """Aggregate EM/F1 (and MAE/trend for bare-year answers) overall and per
    period/relation bucket. Every prediction id must match a question;
    questions without a prediction score zero unless the policy is "error".
    """
    if missing_policy not in ("zero", "error"):
        raise ValueError(f"unknown missing-prediction policy {missing_policy!r}")
    question_ids = {q.id for q in questions}
    if len(question_ids) != len(questions):
        raise ValueError("duplicate question ids in evaluation input")
    pred_map = _prediction_map(predictions)
    unknown = set(pred_map) - question_ids
    if unknown:
        raise ValueError(f"predictions reference unknown question ids: {sorted(unknown)[:5]}")

    overall = _Accumulator()
    per_period: dict[str, _Accumulator] = {}
    per_relation: dict[str, _Accumulator] = {}
    for question in questions:
        if question.id not in pred_map and missing_policy == "error":
            raise ValueError(f"no prediction for question id {question.id!r}")
        text = pred_map.get(question.id, "")
        golds = list(question.answers)
        em = score_em(text, golds)
        f1 = score_f1(text, golds)
        numeric = None
        gold_year = golds[0].strip()
        if question.t_ref is not None and gold_year.isdigit() and len(golds) == 1:
            if int(gold_year) != question.t_ref.year:
                numeric = score_numeric(text, int(gold_year), question.t_ref.year)
        overall.add(em, f1, numeric)
        p_label = period_label(question.t_ref.year, period_edges) if question.t_ref else "undated"
        per_period.setdefault(p_label, _Accumulator()).add(em, f1, numeric)
        r_label = question.relation or "none"
        per_relation.setdefault(r_label, _Accumulator()).add(em, f1, numeric)

    return EvalReport(
        overall=overall.block(),
        per_period={label: acc.block() for label, acc in sorted(per_period.items())},
        per_relation={label: acc.block() for label, acc in sorted(per_relation.items())},
        count=overall.count,
    )
