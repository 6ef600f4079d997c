"""Heuristic decision recommender with feedback-weighted ranking plus
knowledge-fact capture.

Rules are auditable comparisons over named numeric context fields
("forecast_delta_pct > 20 and stock_cover_days < 10"). Feedback shifts an
option's score by w * (pos - neg) / (pos + neg + 1); implicit views never
enter the score and an implicit ignore counts as a quarter negative.
"""

from __future__ import annotations

import re
import threading
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import NotFoundError, PolicyLoadError
from .types import now_ms

FEEDBACK_WEIGHT = 0.3
IGNORE_AS_NEGATIVE = 0.25
FALLBACK_OPTION_ID = "fallback"

_CLAUSE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>=|==|!=|<|>)\s*(-?\d+(?:\.\d+)?)\s*$"
)

_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass
class Condition:
    """Conjunction of numeric comparisons over context fields."""

    clauses: List[Tuple[str, str, float]]
    text: str

    @classmethod
    def parse(cls, text: str, line: Optional[int] = None) -> "Condition":
        clauses = []
        for part in text.split(" and "):
            m = _CLAUSE.match(part)
            if not m:
                where = f" (line {line})" if line is not None else ""
                raise PolicyLoadError(f"cannot parse condition clause {part!r}{where}")
            clauses.append((m.group(1), m.group(2), float(m.group(3))))
        return cls(clauses=clauses, text=text)

    def fields(self) -> List[str]:
        return [c[0] for c in self.clauses]

    def holds(self, context: Dict[str, float]) -> bool:
        for name, op, threshold in self.clauses:
            if name not in context:
                raise NotFoundError(f"context field {name!r} missing")
            if not _OPS[op](float(context[name]), threshold):
                return False
        return True


@dataclass
class DecisionOption:
    id: str
    condition: Condition
    action_text: str
    base_score: float
    positive: int = 0
    negative: int = 0
    implicit_views: int = 0
    implicit_ignores: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_score <= 1.0:
            raise ValueError("base score must lie in [0, 1]")

    def score(self) -> float:
        pos = float(self.positive)
        neg = float(self.negative) + IGNORE_AS_NEGATIVE * self.implicit_ignores
        return self.base_score + FEEDBACK_WEIGHT * (pos - neg) / (pos + neg + 1.0)


@dataclass
class FeedbackRecord:
    id: str
    subject_kind: str  # prediction | explanation | option
    subject_ref: str
    signal: str  # explicit_positive | explicit_negative | rating | implicit_view | implicit_ignore
    rating: Optional[int] = None
    free_text: Optional[str] = None
    actor: str = ""
    ts: int = field(default_factory=now_ms)

    def __post_init__(self) -> None:
        if self.subject_kind not in ("prediction", "explanation", "option"):
            raise ValueError(f"unknown subject kind {self.subject_kind!r}")
        if self.signal not in (
            "explicit_positive",
            "explicit_negative",
            "rating",
            "implicit_view",
            "implicit_ignore",
        ):
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.signal == "rating" and (self.rating is None or not 1 <= self.rating <= 5):
            raise ValueError("rating must lie in 1..5")

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "subject_kind": self.subject_kind,
            "subject_ref": self.subject_ref,
            "signal": self.signal,
            "rating": self.rating,
            "free_text": self.free_text,
            "actor": self.actor,
            "ts": self.ts,
        }


@dataclass
class KnowledgeFact:
    subject: str
    relation: str
    object: str
    source: str = "user_feedback"  # user_feedback | seed
    ts: int = field(default_factory=now_ms)

    def __post_init__(self) -> None:
        if not (self.subject and self.relation and self.object):
            raise ValueError("triple fields must be nonempty")
        if self.source not in ("user_feedback", "seed"):
            raise ValueError(f"unknown fact source {self.source!r}")

    def key(self) -> Tuple[str, str, str]:
        return (self.subject, self.relation, self.object)

    def to_doc(self) -> dict:
        return {
            "subject": self.subject,
            "relation": self.relation,
            "object": self.object,
            "source": self.source,
            "ts": self.ts,
        }


DEFAULT_RULES = [
    {
        "id": "increase_order",
        "condition": "forecast_delta_pct > 20 and stock_cover_days < 10",
        "action_text": "Increase order quantity to cover the forecast uplift",
        "base_score": 0.8,
    },
    {
        "id": "reduce_order",
        "condition": "forecast_delta_pct < -20 and stock_cover_days > 30",
        "action_text": "Reduce next order; stock covers the demand dip",
        "base_score": 0.7,
    },
    {
        "id": "expedite_replenishment",
        "condition": "occurrence_probability > 0.8 and stock_cover_days < 5",
        "action_text": "Expedite replenishment before the likely demand hit",
        "base_score": 0.9,
    },
    {
        "id": "review_safety_stock",
        "condition": "forecast_delta_pct > 10 and stock_cover_days < 20",
        "action_text": "Review safety stock level with the planner",
        "base_score": 0.5,
    },
]


class DecisionEngine:
    """Rule registry + feedback tallies + knowledge facts."""

    def __init__(self, rules: Optional[Sequence[dict]] = None):
        self._lock = threading.Lock()
        self._options: Dict[str, DecisionOption] = {}
        self._feedback: List[FeedbackRecord] = []
        self._facts: Dict[Tuple[str, str, str], KnowledgeFact] = {}
        self.load_rules(DEFAULT_RULES if rules is None else rules)

    def load_rules(self, rules: Sequence[dict]) -> None:
        options = {}
        for i, rule in enumerate(rules, start=1):
            try:
                option = DecisionOption(
                    id=rule["id"],
                    condition=Condition.parse(rule["condition"], line=i),
                    action_text=rule["action_text"],
                    base_score=float(rule["base_score"]),
                )
            except KeyError as exc:
                raise PolicyLoadError(f"rule line {i}: missing field {exc.args[0]!r}") from exc
            if option.id in options:
                raise PolicyLoadError(f"rule line {i}: duplicate option id {option.id!r}")
            options[option.id] = option
        with self._lock:
            self._options = options

    def options(self) -> List[DecisionOption]:
        with self._lock:
            return list(self._options.values())

    def recommend(self, context: Dict[str, float]) -> List[dict]:
        """Matching options ranked by feedback-adjusted score (ties by id).

        Always returns at least the fallback option so the caller never sees
        an empty recommendation.
        """
        with self._lock:
            missing = sorted(
                {
                    f
                    for opt in self._options.values()
                    for f in opt.condition.fields()
                    if f not in context
                }
            )
            if missing:
                raise NotFoundError(f"context is missing fields: {', '.join(missing)}")
            matches = [o for o in self._options.values() if o.condition.holds(context)]
            ranked = sorted(matches, key=lambda o: (-o.score(), o.id))
            out = [
                {
                    "id": o.id,
                    "action_text": o.action_text,
                    "score": o.score(),
                    "base_score": o.base_score,
                    "condition": o.condition.text,
                }
                for o in ranked
            ]
        if not out:
            out = [
                {
                    "id": FALLBACK_OPTION_ID,
                    "action_text": "No action: consult the planner",
                    "score": 0.0,
                    "base_score": 0.0,
                    "condition": "",
                }
            ]
        return out

    def record_feedback(self, record: FeedbackRecord,
                        subject_exists=None) -> FeedbackRecord:
        """Persist feedback and update the target option's tallies.

        ``subject_exists`` is an optional resolver for prediction/explanation
        subjects (defaults to accepting them).
        """
        if record.subject_kind == "option":
            with self._lock:
                if record.subject_ref not in self._options and record.subject_ref != FALLBACK_OPTION_ID:
                    raise NotFoundError(f"no option {record.subject_ref!r}")
                option = self._options.get(record.subject_ref)
                if option is not None:
                    if record.signal == "explicit_positive":
                        option.positive += 1
                    elif record.signal == "explicit_negative":
                        option.negative += 1
                    elif record.signal == "rating":
                        if record.rating >= 4:
                            option.positive += 1
                        elif record.rating <= 2:
                            option.negative += 1
                    elif record.signal == "implicit_view":
                        option.implicit_views += 1
                    elif record.signal == "implicit_ignore":
                        option.implicit_ignores += 1
        elif subject_exists is not None and not subject_exists(record.subject_kind, record.subject_ref):
            raise NotFoundError(
                f"dangling {record.subject_kind} reference {record.subject_ref!r}"
            )
        with self._lock:
            self._feedback.append(record)
        return record

    def feedback_records(self) -> List[FeedbackRecord]:
        with self._lock:
            return list(self._feedback)

    def capture_knowledge(self, actor: str, subject: str, relation: str,
                          obj: str, source: str = "user_feedback") -> KnowledgeFact:
        fact = KnowledgeFact(subject=subject, relation=relation, object=obj, source=source)
        with self._lock:
            self._facts.setdefault(fact.key(), fact)
            return self._facts[fact.key()]

    def facts(self, subject: Optional[str] = None,
              source: Optional[str] = None) -> List[KnowledgeFact]:
        with self._lock:
            out = list(self._facts.values())
        if subject is not None:
            out = [f for f in out if f.subject == subject]
        if source is not None:
            out = [f for f in out if f.source == source]
        return sorted(out, key=lambda f: (f.subject, f.relation, f.object))


def make_feedback(subject_kind: str, subject_ref: str, signal: str, actor: str,
                  rating: Optional[int] = None, free_text: Optional[str] = None) -> FeedbackRecord:
    return FeedbackRecord(
        id=uuid.uuid4().hex[:12],
        subject_kind=subject_kind,
        subject_ref=subject_ref,
        signal=signal,
        rating=rating,
        free_text=free_text,
        actor=actor,
    )
