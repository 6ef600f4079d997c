"""One-hidden-layer feedforward classifier trained with mini-batch gradient
descent on cross-entropy.

Deterministic given a seed: weights initialize uniform within +/- 1/sqrt(fan_in)
from a seeded generator, and the epoch shuffling comes from the same stream.
Training stops at the epoch limit or when the loss plateaus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ColdModelError
from ..types import Prediction, Sample

MODEL_DOC_VERSION = 1


@dataclass
class BatchNetConfig:
    hidden: int = 32
    lr: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    plateau_tol: float = 1e-5
    plateau_patience: int = 8


class BatchNet:
    """Immutable-after-fit MLP: input -> ReLU(hidden) -> softmax."""

    mode = "batch"

    def __init__(self, classes: Sequence[str], config: Optional[BatchNetConfig] = None,
                 feature_subset: Optional[Sequence[int]] = None, model_id: str = "batch-net"):
        self.classes = tuple(classes)
        if len(self.classes) < 2:
            raise ValueError("degenerate label set: need >= 2 classes")
        self.config = config or BatchNetConfig()
        self.feature_subset = None if feature_subset is None else tuple(feature_subset)
        if self.feature_subset is not None:
            if len(set(self.feature_subset)) != len(self.feature_subset):
                raise ValueError("feature subset indices must be unique")
        self.model_id = model_id
        self.calibrator = None  # per-class (A, B), set by calibrate()
        self._fitted = False
        self.W1 = self.b1 = self.W2 = self.b2 = None
        self._mu = self._sigma = None

    # -- training ---------------------------------------------------------

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "BatchNet":
        X = self._project(np.asarray(X, dtype=float))
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite feature values")
        y_idx = self._encode(y)
        if len(set(y_idx.tolist())) < 2:
            raise ValueError("degenerate label set: single class in training data")

        n, d = X.shape
        k = len(self.classes)
        h = self.config.hidden
        rng = np.random.default_rng(self.config.seed)

        self._mu = X.mean(axis=0)
        std = X.std(axis=0)
        # floor per-feature scale at a fraction of the average spread so a
        # low-variance training subset cannot blow up out-of-sample inputs
        floor = max(1e-8, 0.05 * float(std.mean()))
        self._sigma = np.maximum(std, floor)
        Xs = self._standardize(X)

        self.W1 = rng.uniform(-1, 1, size=(d, h)) / np.sqrt(d)
        self.b1 = np.zeros(h)
        self.W2 = rng.uniform(-1, 1, size=(h, k)) / np.sqrt(h)
        self.b2 = np.zeros(k)

        prev_loss = np.inf
        stale = 0
        bs = max(1, self.config.batch_size)
        for _ in range(self.config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                gW1, gb1, gW2, gb2 = self._grads(Xs[idx], y_idx[idx])
                self.W1 -= self.config.lr * gW1
                self.b1 -= self.config.lr * gb1
                self.W2 -= self.config.lr * gW2
                self.b2 -= self.config.lr * gb2
            loss = self._loss(Xs, y_idx)
            if prev_loss - loss < self.config.plateau_tol:
                stale += 1
                if stale >= self.config.plateau_patience:
                    break
            else:
                stale = 0
            prev_loss = loss
        self._fitted = True
        return self

    # -- forward / backward ------------------------------------------------

    def _forward(self, Xs: np.ndarray):
        z1 = Xs @ self.W1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.W2 + self.b2
        z2 = z2 - z2.max(axis=1, keepdims=True)
        e = np.exp(z2)
        p = e / e.sum(axis=1, keepdims=True)
        return z1, a1, p

    def _loss(self, Xs: np.ndarray, y_idx: np.ndarray) -> float:
        _, _, p = self._forward(Xs)
        return float(-np.mean(np.log(np.clip(p[np.arange(len(y_idx)), y_idx], 1e-300, None))))

    def _grads(self, Xs: np.ndarray, y_idx: np.ndarray):
        n = Xs.shape[0]
        z1, a1, p = self._forward(Xs)
        dz2 = p.copy()
        dz2[np.arange(n), y_idx] -= 1.0
        dz2 /= n
        gW2 = a1.T @ dz2
        gb2 = dz2.sum(axis=0)
        da1 = dz2 @ self.W2.T
        dz1 = da1 * (z1 > 0.0)
        gW1 = Xs.T @ dz1
        gb1 = dz1.sum(axis=0)
        return gW1, gb1, gW2, gb2

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        # clip at 8 sigma: out-of-distribution magnitudes would otherwise
        # saturate the softmax and destroy the ranking
        return np.clip((X - self._mu) / self._sigma, -8.0, 8.0)

    # exposed for the finite-difference check
    def loss_on(self, X: np.ndarray, y: Sequence[str]) -> float:
        return self._loss(self._standardize(self._project(np.asarray(X, dtype=float))),
                          self._encode(y))

    def grads_on(self, X: np.ndarray, y: Sequence[str]):
        return self._grads(self._standardize(self._project(np.asarray(X, dtype=float))),
                           self._encode(y))

    # -- prediction ---------------------------------------------------------

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self._fitted:
            raise ColdModelError("batch net has not been trained")
        X = self._project(np.atleast_2d(np.asarray(X, dtype=float)))
        if X.shape[1] != self.W1.shape[0]:
            raise ValueError(
                f"feature dimension {X.shape[1]} != model dimension {self.W1.shape[0]}"
            )
        _, _, p = self._forward(self._standardize(X))
        if self.calibrator is not None:
            from .calibration import platt_apply

            cal = np.column_stack(
                [platt_apply(p[:, j], *self.calibrator[j]) for j in range(p.shape[1])]
            )
            p = cal / cal.sum(axis=1, keepdims=True)
        return p

    def predict(self, sample: Sample) -> Prediction:
        p = self.predict_proba(sample.features.reshape(1, -1))[0]
        return Prediction(
            sample_id=sample.id,
            model_id=self.model_id,
            classes=self.classes,
            scores=p,
            calibrated=self.calibrator is not None,
        )

    # -- helpers -------------------------------------------------------------

    def _project(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.feature_subset is None:
            return X
        if max(self.feature_subset) >= X.shape[1]:
            raise ValueError("feature subset index outside feature dimension")
        return X[:, list(self.feature_subset)]

    def _encode(self, y: Sequence[str]) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.classes)}
        try:
            return np.array([lookup[v] for v in y], dtype=int)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} outside declared classes") from exc

    def weights_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.W1.ravel(), self.b1.ravel(), self.W2.ravel(), self.b2.ravel()]
        )

    # -- model artifact (de)serialization -------------------------------------

    def to_doc(self) -> dict:
        if not self._fitted:
            raise ColdModelError("cannot serialize an untrained model")
        return {
            "format_version": MODEL_DOC_VERSION,
            "model_id": self.model_id,
            "mode": self.mode,
            "classes": list(self.classes),
            "feature_subset": list(self.feature_subset) if self.feature_subset else None,
            "calibrator": [list(p) for p in self.calibrator] if self.calibrator else None,
            "config": dict(self.config.__dict__),
            "mu": self._mu.tolist(),
            "sigma": self._sigma.tolist(),
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BatchNet":
        version = doc.get("format_version")
        if version != MODEL_DOC_VERSION:
            raise ValueError(
                f"refusing model artifact version {version!r}; expected {MODEL_DOC_VERSION}"
            )
        net = cls(
            doc["classes"],
            config=BatchNetConfig(**doc["config"]),
            feature_subset=doc.get("feature_subset"),
            model_id=doc.get("model_id", "batch-net"),
        )
        net._mu = np.asarray(doc["mu"], dtype=float)
        net._sigma = np.asarray(doc["sigma"], dtype=float)
        net.W1 = np.asarray(doc["W1"], dtype=float)
        net.b1 = np.asarray(doc["b1"], dtype=float)
        net.W2 = np.asarray(doc["W2"], dtype=float)
        net.b2 = np.asarray(doc["b2"], dtype=float)
        if doc.get("calibrator"):
            net.calibrator = tuple(tuple(p) for p in doc["calibrator"])
        net._fitted = True
        return net


def train_batch(samples: Sequence[Sample], config: Optional[BatchNetConfig] = None,
                feature_subset: Optional[Sequence[int]] = None,
                model_id: str = "batch-net") -> BatchNet:
    """Train a BatchNet from labeled samples."""
    labeled = [s for s in samples if s.label is not None]
    if not labeled:
        raise ValueError("no labeled samples")
    classes = sorted({s.label for s in labeled})
    if len(classes) < 2:
        raise ValueError("degenerate label set: single class in training data")
    X = np.stack([s.features for s in labeled])
    y = [s.label for s in labeled]
    net = BatchNet(classes, config=config, feature_subset=feature_subset, model_id=model_id)
    return net.fit(X, y)
