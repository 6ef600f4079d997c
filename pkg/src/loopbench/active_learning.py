"""Active learning: query strategies over pools and streams, an annotation
queue with time-bounded leases, and a sliding-window query budget.

Strategy scores are kept on [0, 1] so weighted combinations stay on [0, 1]:
raw committee vote entropy (nats) is normalized by ln(committee size) when it
enters a selection, and diversity is rescaled by the pool diameter.
"""

from __future__ import annotations

import threading
import uuid
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import LeaseError, NotFoundError
from .types import Prediction, Sample, now_ms, require_simplex

STRATEGIES = ("random", "least_confidence", "margin", "entropy", "qbc_vote_entropy", "combined")


@dataclass
class StrategyParams:
    name: str = "entropy"
    weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # info, repr, div
    committee_size: int = 3
    stream_threshold: float = 0.5
    budget: int = 100
    kernel_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.name!r}")
        w = self.weights
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("combined weights must be nonnegative and sum to 1")
        if self.name == "qbc_vote_entropy" and self.committee_size < 2:
            raise ValueError("committee needs at least 2 members")
        if not 0.0 <= self.stream_threshold <= 1.0:
            raise ValueError("stream threshold must lie in [0, 1]")


# --------------------------------------------------------------------------
# scores


def score_informativeness(prediction: Prediction, method: str = "entropy") -> float:
    """Uncertainty of one prediction, normalized to [0, 1]."""
    p = require_simplex(prediction.scores)
    if method == "least_confidence":
        return float(1.0 - p.max())
    if method == "margin":
        top2 = np.sort(p)[::-1][:2]
        return float(1.0 - (top2[0] - top2[1]))
    if method == "entropy":
        nz = p[p > 0]
        h = float(-(nz * np.log(nz)).sum())
        return h / np.log(len(p))
    raise ValueError(f"unknown informativeness method {method!r}")


def score_qbc(features: np.ndarray, committee: Sequence) -> float:
    """Vote entropy (nats) of the committee argmax votes."""
    if len(committee) < 2:
        raise ValueError("committee needs at least 2 members")
    classes = committee[0].classes
    if any(m.classes != classes for m in committee):
        raise ValueError("committee members disagree on the class set")
    votes: Dict[int, int] = {}
    x = np.asarray(features, dtype=float).reshape(1, -1)
    for m in committee:
        j = int(np.argmax(m.predict_proba(x)[0]))
        votes[j] = votes.get(j, 0) + 1
    c = float(len(committee))
    return float(-sum((v / c) * np.log(v / c) for v in votes.values()))


def pool_diameter(pool_features: np.ndarray) -> float:
    pool = np.atleast_2d(np.asarray(pool_features, dtype=float))
    if len(pool) < 2:
        return 0.0
    d2 = ((pool[:, None, :] - pool[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def score_repr_div(features: np.ndarray, pool_features: np.ndarray,
                   labeled_features: Optional[np.ndarray], sigma: float,
                   diameter: Optional[float] = None) -> Tuple[float, float]:
    """(representativeness, diversity) of one candidate.

    Representativeness is the mean RBF similarity to the pool; diversity is
    the minimum distance to the labeled set rescaled by the pool diameter
    (1.0 when nothing is labeled yet). Pass a precomputed diameter when
    scoring many candidates against the same pool.
    """
    if sigma <= 0:
        raise ValueError("kernel width must be positive")
    x = np.asarray(features, dtype=float)
    pool = np.atleast_2d(np.asarray(pool_features, dtype=float))
    if pool.size == 0:
        raise ValueError("empty pool")
    d2 = ((pool - x) ** 2).sum(axis=1)
    representativeness = float(np.exp(-d2 / (sigma * sigma)).mean())

    if labeled_features is None or len(labeled_features) == 0:
        return representativeness, 1.0
    labeled = np.atleast_2d(np.asarray(labeled_features, dtype=float))
    min_dist = float(np.sqrt(((labeled - x) ** 2).sum(axis=1)).min())
    if diameter is None:
        diameter = pool_diameter(pool)
    if diameter <= 0:
        return representativeness, 1.0 if min_dist > 0 else 0.0
    return representativeness, float(min(1.0, min_dist / diameter))


# --------------------------------------------------------------------------
# pool and stream selection


def pool_scores(pool: Sequence[Sample], params: StrategyParams,
                predictions: Optional[Sequence[Prediction]] = None,
                committee: Optional[Sequence] = None,
                labeled: Optional[Sequence[Sample]] = None) -> np.ndarray:
    """Per-sample strategy score on [0, 1] for every pool member."""
    n = len(pool)
    if n == 0:
        raise ValueError("empty pool")
    name = params.name
    if name == "random":
        rng = np.random.default_rng(params.seed)
        return rng.random(n)
    if name == "qbc_vote_entropy":
        if committee is None:
            raise ValueError("qbc strategy needs a committee")
        c = len(committee)
        return np.array(
            [score_qbc(s.features, committee) / np.log(c) for s in pool]
        )
    if predictions is None:
        raise ValueError(f"strategy {name!r} needs predictions")
    if name in ("least_confidence", "margin", "entropy"):
        return np.array([score_informativeness(p, name) for p in predictions])
    # combined: alpha * info + beta * repr + gamma * div
    a, b, g = params.weights
    pool_feats = np.stack([s.features for s in pool])
    labeled_feats = np.stack([s.features for s in labeled]) if labeled else None
    diameter = pool_diameter(pool_feats)
    out = np.empty(n)
    for i, (s, p) in enumerate(zip(pool, predictions)):
        info = score_informativeness(p, "entropy")
        rep, div = score_repr_div(s.features, pool_feats, labeled_feats,
                                  params.kernel_sigma, diameter=diameter)
        out[i] = a * info + b * rep + g * div
    return out


def select_pool(pool: Sequence[Sample], params: StrategyParams, batch_size: int,
                predictions: Optional[Sequence[Prediction]] = None,
                committee: Optional[Sequence] = None,
                labeled: Optional[Sequence[Sample]] = None):
    """Top-batch_size pool members by strategy score (ties by pool order).

    Returns (selected samples, their scores, truncated_flag); asking for more
    than the pool holds selects everything and flags the truncation.
    """
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    scores = pool_scores(pool, params, predictions=predictions,
                         committee=committee, labeled=labeled)
    truncated = batch_size > len(pool)
    take = min(batch_size, len(pool))
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], i))[:take]
    return [pool[i] for i in order], [float(scores[i]) for i in order], truncated


class StreamBudget:
    """Query budget over a sliding window of observed stream samples."""

    def __init__(self, budget: int, horizon: int = 1000):
        if budget < 0 or horizon < 1:
            raise ValueError("budget must be >= 0 and horizon >= 1")
        self.budget = budget
        self.horizon = horizon
        self._seen = 0
        self._queried_at: deque = deque()

    def observe(self) -> int:
        self._seen += 1
        while self._queried_at and self._queried_at[0] <= self._seen - self.horizon:
            self._queried_at.popleft()
        return self._seen

    @property
    def remaining(self) -> int:
        return self.budget - len(self._queried_at)

    def spend(self) -> None:
        self._queried_at.append(self._seen)


def select_stream(prediction: Prediction, threshold: float, budget: StreamBudget,
                  method: str = "entropy") -> bool:
    """True to query the label of this stream sample, False to skip."""
    budget.observe()
    info = score_informativeness(prediction, method)
    if info >= threshold and budget.remaining > 0:
        budget.spend()
        return True
    return False


# --------------------------------------------------------------------------
# annotation queue


@dataclass
class QueryTask:
    task_id: str
    sample_id: str
    strategy_name: str
    info_score: float
    hints: List[str] = field(default_factory=list)  # explanation ids
    state: str = "queued"  # queued | leased | answered | expired
    lease: Optional[Tuple[str, int]] = None  # (annotator_id, deadline ms)

    def to_doc(self) -> dict:
        return {
            "task_id": self.task_id,
            "sample_id": self.sample_id,
            "strategy_name": self.strategy_name,
            "info_score": self.info_score,
            "hints": list(self.hints),
            "state": self.state,
            "lease": list(self.lease) if self.lease else None,
        }


@dataclass
class LabelRecord:
    record_id: str
    task_id: str
    sample_id: str
    label: str
    annotator: str
    elapsed_ms: int
    hint_shown: Optional[str]
    ts: int

    def to_doc(self) -> dict:
        return {
            "record_id": self.record_id,
            "task_id": self.task_id,
            "sample_id": self.sample_id,
            "label": self.label,
            "annotator": self.annotator,
            "elapsed_ms": self.elapsed_ms,
            "hint_shown": self.hint_shown,
            "ts": self.ts,
        }


class AnnotationQueue:
    """Linearizable task queue: a task is leased by at most one annotator.

    Expired leases push the task back to the queue head. All transitions run
    under one lock, so concurrent lease_next calls can never double-lease.
    """

    def __init__(self, lease_ttl_ms: int = 300_000, clock=now_ms):
        self.lease_ttl_ms = lease_ttl_ms
        self._clock = clock
        self._lock = threading.Lock()
        self._order: deque = deque()  # task ids in queue order
        self._tasks: Dict[str, QueryTask] = {}
        self._answered: List[LabelRecord] = []
        self._expired_count = 0

    def enqueue(self, sample_id: str, strategy_name: str, info_score: float,
                hints: Optional[List[str]] = None) -> QueryTask:
        task = QueryTask(
            task_id=uuid.uuid4().hex[:12],
            sample_id=sample_id,
            strategy_name=strategy_name,
            info_score=float(info_score),
            hints=list(hints or []),
        )
        with self._lock:
            self._tasks[task.task_id] = task
            self._order.append(task.task_id)
        return task

    def _expire_stale(self) -> None:
        now = self._clock()
        for task in self._tasks.values():
            if task.state == "leased" and task.lease and task.lease[1] < now:
                task.state = "queued"
                task.lease = None
                self._expired_count += 1
                self._order.appendleft(task.task_id)

    def lease_next(self, annotator_id: str) -> Optional[QueryTask]:
        with self._lock:
            self._expire_stale()
            while self._order:
                task_id = self._order.popleft()
                task = self._tasks[task_id]
                if task.state != "queued":
                    continue
                task.state = "leased"
                task.lease = (annotator_id, self._clock() + self.lease_ttl_ms)
                return task
            return None

    def answer(self, task_id: str, annotator_id: str, label: str,
               elapsed_ms: int, hint_shown: Optional[str] = None) -> LabelRecord:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise NotFoundError(f"no task {task_id!r}")
            if task.state != "leased" or not task.lease or task.lease[0] != annotator_id:
                raise LeaseError(f"task {task_id!r} is not leased by {annotator_id!r}")
            if task.lease[1] < self._clock():
                task.state = "queued"
                task.lease = None
                self._expired_count += 1
                self._order.appendleft(task.task_id)
                raise LeaseError(f"lease on task {task_id!r} expired; task re-queued")
            task.state = "answered"
            record = LabelRecord(
                record_id=uuid.uuid4().hex[:12],
                task_id=task_id,
                sample_id=task.sample_id,
                label=label,
                annotator=annotator_id,
                elapsed_ms=int(elapsed_ms),
                hint_shown=hint_shown,
                ts=self._clock(),
            )
            self._answered.append(record)
            return record

    def counts(self) -> Dict[str, int]:
        with self._lock:
            out = {"queued": 0, "leased": 0, "answered": 0}
            for task in self._tasks.values():
                out[task.state] = out.get(task.state, 0) + 1
            out["expired_transitions"] = self._expired_count
            out["total"] = len(self._tasks)
            return out

    def get(self, task_id: str) -> QueryTask:
        with self._lock:
            if task_id not in self._tasks:
                raise NotFoundError(f"no task {task_id!r}")
            return self._tasks[task_id]

    def pending(self) -> int:
        with self._lock:
            self._expire_stale()
            return sum(1 for t in self._tasks.values() if t.state == "queued")

    def active_sample_ids(self) -> set:
        """Sample ids currently queued or leased (not answerable again)."""
        with self._lock:
            return {
                t.sample_id for t in self._tasks.values() if t.state in ("queued", "leased")
            }

    def records(self) -> List[LabelRecord]:
        with self._lock:
            return list(self._answered)
