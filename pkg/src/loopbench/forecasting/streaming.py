"""Streaming k-nearest-neighbors classifier over a sliding labeled window.

Learns incrementally: each labeled observation enters a bounded memory (last
M samples) and predictions are distance-weighted votes of the k nearest
neighbors. Updates are serialized behind a lock; reads take a snapshot.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Optional, Sequence

import numpy as np

from ..errors import ColdModelError
from ..types import Prediction, Sample


class StreamingKnn:
    mode = "streaming"

    def __init__(self, classes: Sequence[str], k: int = 5, window: int = 500,
                 feature_subset: Optional[Sequence[int]] = None,
                 model_id: str = "streaming-knn"):
        if k < 1:
            raise ValueError("k must be >= 1")
        if window < k:
            raise ValueError("window must be >= k")
        self.classes = tuple(classes)
        self.k = k
        self.window = window
        self.feature_subset = None if feature_subset is None else tuple(feature_subset)
        self.model_id = model_id
        self.calibrator = None
        self._memory: deque = deque(maxlen=window)
        self._lock = threading.Lock()

    def learn(self, features: np.ndarray, label: str) -> None:
        if label not in self.classes:
            raise ValueError(f"label {label!r} outside declared classes")
        x = self._project(np.asarray(features, dtype=float))
        with self._lock:
            self._memory.append((x, label))

    def learn_sample(self, sample: Sample) -> None:
        if sample.label is None:
            raise ValueError("sample has no label")
        self.learn(sample.features, sample.label)

    def __len__(self) -> int:
        with self._lock:
            return len(self._memory)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        p = np.stack([self._predict_one(row) for row in X])
        if self.calibrator is not None:
            from .calibration import platt_apply

            cal = np.column_stack(
                [platt_apply(p[:, j], *self.calibrator[j]) for j in range(p.shape[1])]
            )
            p = cal / cal.sum(axis=1, keepdims=True)
        return p

    def _predict_one(self, features: np.ndarray) -> np.ndarray:
        x = self._project(features)
        with self._lock:
            memory = list(self._memory)
        if not memory:
            raise ColdModelError("cold model: no labeled samples seen yet")
        pts = np.stack([m[0] for m in memory])
        if pts.shape[1] != x.shape[0]:
            raise ValueError("feature dimension mismatch")
        d = np.sqrt(((pts - x) ** 2).sum(axis=1))
        order = np.argsort(d, kind="stable")[: self.k]
        weights = 1.0 / (d[order] + 1e-9)
        votes = np.zeros(len(self.classes))
        index = {c: i for i, c in enumerate(self.classes)}
        for rank, i in enumerate(order):
            votes[index[memory[i][1]]] += weights[rank]
        return votes / votes.sum()

    def predict(self, sample: Sample) -> Prediction:
        p = self.predict_proba(sample.features.reshape(1, -1))[0]
        return Prediction(
            sample_id=sample.id,
            model_id=self.model_id,
            classes=self.classes,
            scores=p,
            calibrated=self.calibrator is not None,
        )

    def _project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.feature_subset is None:
            return x
        return x[list(self.feature_subset)]

    # -- model artifact (de)serialization -------------------------------------

    def to_doc(self) -> dict:
        from .net import MODEL_DOC_VERSION

        with self._lock:
            memory = [(x.tolist(), label) for x, label in self._memory]
        return {
            "format_version": MODEL_DOC_VERSION,
            "model_id": self.model_id,
            "mode": self.mode,
            "classes": list(self.classes),
            "k": self.k,
            "window": self.window,
            "feature_subset": list(self.feature_subset) if self.feature_subset else None,
            "memory": memory,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "StreamingKnn":
        from .net import MODEL_DOC_VERSION

        version = doc.get("format_version")
        if version != MODEL_DOC_VERSION:
            raise ValueError(
                f"refusing model artifact version {version!r}; expected {MODEL_DOC_VERSION}"
            )
        knn = cls(
            doc["classes"],
            k=int(doc["k"]),
            window=int(doc["window"]),
            feature_subset=doc.get("feature_subset"),
            model_id=doc.get("model_id", "streaming-knn"),
        )
        for x, label in doc.get("memory", []):
            knn._memory.append((np.asarray(x, dtype=float), label))
        return knn
