"""Shared domain types: samples, images, events, predictions.

Everything here is a plain dataclass that serializes to a JSON document via
``to_doc`` / ``from_doc`` so the storage layer and the HTTP surface can stay
schema-free.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np


class SampleKind(str, Enum):
    IMAGE = "image"
    DEMAND_WINDOW = "demand_window"
    IMU_WINDOW = "imu_window"
    TABULAR = "tabular"


class Provenance(str, Enum):
    REAL = "real"
    SYNTHETIC = "synthetic"
    INJECTED_KNOWN_DEFECT = "injected_known_defect"


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass(frozen=True)
class Sample:
    """One observable unit of data (image, demand window, IMU window, ...).

    Provenance is immutable by construction; re-labeling never mutates a
    sample but produces a new LabelRecord instead.
    """

    id: str
    kind: SampleKind
    payload_ref: str
    features: np.ndarray
    provenance: Provenance
    label: Optional[str] = None
    created_at: int = field(default_factory=now_ms)

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1:
            raise ValueError("sample features must be a flat vector")
        if not np.all(np.isfinite(feats)):
            raise ValueError("sample features must be finite")
        object.__setattr__(self, "features", feats)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "payload_ref": self.payload_ref,
            "features": [float(x) for x in self.features],
            "label": self.label,
            "provenance": self.provenance.value,
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Sample":
        return cls(
            id=doc["id"],
            kind=SampleKind(doc["kind"]),
            payload_ref=doc.get("payload_ref", ""),
            features=np.asarray(doc["features"], dtype=float),
            provenance=Provenance(doc["provenance"]),
            label=doc.get("label"),
            created_at=int(doc.get("created_at", 0)),
        )


@dataclass
class GrayImage:
    """Row-major grayscale image with intensities in [0, 1]."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=float).reshape(-1)
        if px.size != self.width * self.height:
            raise ValueError(
                f"pixel count {px.size} != {self.width}x{self.height}"
            )
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        self.pixels = px

    def as_array(self) -> np.ndarray:
        """(height, width) view of the pixel buffer."""
        return self.pixels.reshape(self.height, self.width)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayImage":
        arr = np.asarray(arr, dtype=float)
        h, w = arr.shape
        return cls(width=w, height=h, pixels=arr.reshape(-1).copy())


@dataclass(frozen=True)
class Event:
    """Immutable bus event; seq is strictly increasing per topic."""

    topic: str
    seq: int
    actor: str
    payload: dict
    ts: int

    def to_doc(self) -> dict:
        return {
            "topic": self.topic,
            "seq": self.seq,
            "actor": self.actor,
            "ts": self.ts,
            "payload": self.payload,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Event":
        return cls(
            topic=doc["topic"],
            seq=int(doc["seq"]),
            actor=doc["actor"],
            payload=doc["payload"],
            ts=int(doc["ts"]),
        )


SIMPLEX_TOL = 1e-9


@dataclass
class Prediction:
    """Model output: a probability simplex over the model's class set.

    ``scalar`` carries regression/forecast outputs when the model is not a
    classifier; classifier predictions leave it None.
    """

    sample_id: str
    model_id: str
    classes: tuple
    scores: np.ndarray
    calibrated: bool = False
    scalar: Optional[float] = None

    def __post_init__(self) -> None:
        self.classes = tuple(self.classes)
        sc = np.asarray(self.scores, dtype=float)
        if sc.shape != (len(self.classes),):
            raise ValueError("scores must align with the class set")
        if np.any(sc < -SIMPLEX_TOL):
            raise ValueError("scores must be nonnegative")
        if abs(float(sc.sum()) - 1.0) > SIMPLEX_TOL:
            raise ValueError("scores must sum to 1")
        self.scores = np.clip(sc, 0.0, None)

    @property
    def argmax(self) -> str:
        return self.classes[int(np.argmax(self.scores))]

    def score_of(self, cls_name: str) -> float:
        return float(self.scores[self.classes.index(cls_name)])

    def to_doc(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "classes": list(self.classes),
            "scores": [float(s) for s in self.scores],
            "calibrated": self.calibrated,
            "scalar": self.scalar,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Prediction":
        return cls(
            sample_id=doc["sample_id"],
            model_id=doc["model_id"],
            classes=tuple(doc["classes"]),
            scores=np.asarray(doc["scores"], dtype=float),
            calibrated=bool(doc.get("calibrated", False)),
            scalar=doc.get("scalar"),
        )


def require_simplex(scores: Sequence[float], tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and return a probability vector; raises ValueError otherwise."""
    p = np.asarray(scores, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need a probability vector over >= 2 classes")
    if np.any(p < -tol) or not math.isclose(float(p.sum()), 1.0, abs_tol=max(tol, 1e-9)):
        raise ValueError("scores do not form a probability simplex")
    return np.clip(p, 0.0, None)


def doc_of(obj: Any) -> dict:
    """Uniform ``to_doc`` dispatch for the storage layer."""
    if hasattr(obj, "to_doc"):
        return obj.to_doc()
    if isinstance(obj, dict):
        return obj
    raise TypeError(f"cannot convert {type(obj)!r} to a document")
