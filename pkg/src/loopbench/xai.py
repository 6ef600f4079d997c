"""Explanations: surrogate feature ranking, concept mapping with redaction,
occlusion saliency, reference-difference anomaly maps, SSIM nearest-labeled
hints, and a pluggable enrichment client.

Saliency and anomaly maps always match the subject image dimensions and live
in [0, 1]. Concept-only payloads never carry raw feature identifiers; the
redaction invariant is string-auditable over the serialized payload.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .imaging import bilinear_resize, gaussian_blur
from .types import GrayImage, Prediction

EXPLANATION_KINDS = (
    "feature_ranking",
    "concept_ranking",
    "saliency_map",
    "anomaly_map",
    "nearest_neighbor",
)


@dataclass
class Explanation:
    id: str
    prediction_ref: str
    kind: str
    payload: dict
    redaction: str = "full"  # full | concept_only
    audience: str = "any"
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in EXPLANATION_KINDS:
            raise ValueError(f"unknown explanation kind {self.kind!r}")

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "prediction_ref": self.prediction_ref,
            "kind": self.kind,
            "payload": self.payload,
            "redaction": self.redaction,
            "audience": self.audience,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Explanation":
        return cls(
            id=doc["id"],
            prediction_ref=doc["prediction_ref"],
            kind=doc["kind"],
            payload=doc["payload"],
            redaction=doc.get("redaction", "full"),
            audience=doc.get("audience", "any"),
            warnings=list(doc.get("warnings", [])),
        )


def _new_id() -> str:
    return uuid.uuid4().hex[:12]


# --------------------------------------------------------------------------
# shallow decision-tree surrogate


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "label")

    def __init__(self, label: int):
        self.feature = -1
        self.threshold = 0.0
        self.left: Optional["_TreeNode"] = None
        self.right: Optional["_TreeNode"] = None
        self.label = label


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


class SurrogateTree:
    """Depth-limited CART used to mimic a black-box classifier.

    Feature importance is the total impurity decrease attributed to each
    split feature, weighted by the fraction of samples reaching the node.
    """

    def __init__(self, max_depth: int = 4, min_leaf: int = 2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.root: Optional[_TreeNode] = None
        self.importances: Optional[np.ndarray] = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "SurrogateTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.n_classes = int(y.max()) + 1 if len(y) else 0
        self.importances = np.zeros(X.shape[1])
        self._n_total = len(y)
        self.root = self._build(X, y, depth=0)
        total = self.importances.sum()
        if total > 0:
            self.importances = self.importances / total
        return self

    def _build(self, X: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        counts = np.bincount(y, minlength=self.n_classes)
        node = _TreeNode(label=int(counts.argmax()))
        impurity = _gini(counts)
        if depth >= self.max_depth or impurity == 0.0 or len(y) < 2 * self.min_leaf:
            return node
        best = None  # (weighted_impurity, feature, threshold, mask)
        for j in range(X.shape[1]):
            col = X[:, j]
            values = np.unique(col)
            if len(values) < 2:
                continue
            for thr in (values[:-1] + values[1:]) / 2.0:
                mask = col <= thr
                n_l = int(mask.sum())
                if n_l < self.min_leaf or len(y) - n_l < self.min_leaf:
                    continue
                g = (
                    n_l * _gini(np.bincount(y[mask], minlength=self.n_classes))
                    + (len(y) - n_l) * _gini(np.bincount(y[~mask], minlength=self.n_classes))
                ) / len(y)
                if best is None or g < best[0] - 1e-15:
                    best = (g, j, float(thr), mask)
        if best is None or best[0] >= impurity:
            return node
        g, j, thr, mask = best
        self.importances[j] += (len(y) / self._n_total) * (impurity - g)
        node.feature = j
        node.threshold = thr
        node.left = self._build(X[mask], y[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(len(X), dtype=int)
        for i, row in enumerate(X):
            node = self.root
            while node.left is not None:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out


def explain_surrogate(model, background_X: np.ndarray, prediction: Prediction,
                      feature_names: Optional[Sequence[str]] = None,
                      max_depth: int = 4, fidelity_floor: float = 0.7) -> Explanation:
    """Feature ranking from a shallow tree fit to the model's own labels."""
    X = np.asarray(background_X, dtype=float)
    if len(X) < 50:
        raise ValueError("background set must hold at least 50 samples")
    probs = model.predict_proba(X)
    target = probs.argmax(axis=1)
    tree = SurrogateTree(max_depth=max_depth).fit(X, target)
    agree = float((tree.predict(X) == target).mean())
    names = list(feature_names) if feature_names else [f"f{j}" for j in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise ValueError("feature_names length mismatch")
    imp = tree.importances
    order = sorted(range(len(imp)), key=lambda j: (-imp[j], j))
    warnings = []
    if imp.sum() == 0.0:
        warnings.append("constant model: no informative split found")
    if agree < fidelity_floor:
        warnings.append(f"low surrogate fidelity {agree:.3f} < {fidelity_floor}")
    payload = {
        "ranking": [{"feature": names[j], "importance": float(imp[j])} for j in order],
        "fidelity": agree,
    }
    return Explanation(
        id=_new_id(),
        prediction_ref=prediction.sample_id,
        kind="feature_ranking",
        payload=payload,
        warnings=warnings,
    )


# --------------------------------------------------------------------------
# concept mapping and redaction


@dataclass
class ConceptMap:
    entries: Dict[str, str]           # feature id -> concept id (many-to-one)
    labels: Dict[str, str] = field(default_factory=dict)  # concept id -> text

    def concept_of(self, feature: str) -> str:
        return self.entries.get(feature, "other")


def map_to_concepts(explanation: Explanation, concept_map: ConceptMap,
                    redaction: str = "concept_only", strict: bool = False) -> Explanation:
    """Aggregate a feature ranking into concepts, optionally hiding features.

    Concept importance is the sum of member-feature importances; the output
    ranking is descending with alphabetical tie-breaks. With
    redaction="concept_only" the payload carries no feature identifiers.
    """
    if explanation.kind != "feature_ranking":
        raise ValueError("can only map feature rankings to concepts")
    if strict and not concept_map.entries:
        raise ValueError("empty concept map in strict mode")
    if redaction not in ("full", "concept_only"):
        raise ValueError(f"unknown redaction level {redaction!r}")
    totals: Dict[str, float] = {}
    members: Dict[str, List[dict]] = {}
    for item in explanation.payload["ranking"]:
        concept = concept_map.concept_of(item["feature"])
        totals[concept] = totals.get(concept, 0.0) + float(item["importance"])
        members.setdefault(concept, []).append(dict(item))
    order = sorted(totals, key=lambda c: (-totals[c], c))
    ranking = []
    for concept in order:
        entry = {
            "concept": concept,
            "label": concept_map.labels.get(concept, concept),
            "importance": totals[concept],
        }
        if redaction == "full":
            entry["features"] = members[concept]
        ranking.append(entry)
    return Explanation(
        id=_new_id(),
        prediction_ref=explanation.prediction_ref,
        kind="concept_ranking",
        payload={"ranking": ranking},
        redaction=redaction,
        audience=explanation.audience,
        warnings=list(explanation.warnings),
    )


def audit_redaction(explanation: Explanation, feature_names: Sequence[str]) -> List[str]:
    """Feature identifiers leaking into a serialized payload (empty = clean)."""
    blob = json.dumps(explanation.payload)
    return [name for name in feature_names if name in blob]


# --------------------------------------------------------------------------
# occlusion saliency


def saliency_occlusion(predict_image: Callable[[GrayImage], np.ndarray],
                       image: GrayImage, prediction: Prediction,
                       patch: int = 8, stride: int = 8,
                       fill: float = 0.5) -> Explanation:
    """Black-box saliency: probability drop when each patch is hidden.

    ``predict_image`` maps an image to a probability vector aligned with
    ``prediction.classes``. The drop grid is clipped at zero, bilinearly
    upsampled to the image size, and max-normalized (an all-zero map stays
    zero).
    """
    if patch < 1 or stride < 1:
        raise ValueError("patch and stride must be >= 1")
    if patch > image.width or patch > image.height:
        raise ValueError("patch larger than image")
    arr = image.as_array()
    base_scores = np.asarray(predict_image(image), dtype=float)
    cls_idx = int(np.argmax(prediction.scores))
    base = float(base_scores[cls_idx])

    ys = list(range(0, image.height - patch + 1, stride))
    xs = list(range(0, image.width - patch + 1, stride))
    grid = np.zeros((len(ys), len(xs)))
    for gi, y0 in enumerate(ys):
        for gj, x0 in enumerate(xs):
            occluded = arr.copy()
            occluded[y0 : y0 + patch, x0 : x0 + patch] = fill
            p = np.asarray(predict_image(GrayImage.from_array(occluded)), dtype=float)
            grid[gi, gj] = max(0.0, base - float(p[cls_idx]))

    saliency = bilinear_resize(grid, image.height, image.width)
    peak = saliency.max()
    if peak > 0:
        saliency = saliency / peak
    return Explanation(
        id=_new_id(),
        prediction_ref=prediction.sample_id,
        kind="saliency_map",
        payload={
            "width": image.width,
            "height": image.height,
            "map": [float(v) for v in saliency.reshape(-1)],
        },
    )


# --------------------------------------------------------------------------
# reference-difference anomaly map


def anomaly_map(image: GrayImage, references: Sequence[GrayImage],
                smoothing_sigma: float = 1.0, z: float = 2.0,
                prediction_ref: str = "") -> Explanation:
    """Binary anomaly mask: smoothed |image - mean(references)| thresholded
    at mean + z * std of the difference map."""
    if len(references) < 10:
        raise ValueError("need at least 10 reference images")
    shape = (image.height, image.width)
    stack = []
    for ref in references:
        if (ref.height, ref.width) != shape:
            raise ValueError("reference image size mismatch")
        stack.append(ref.as_array())
    mean_ref = np.stack(stack).mean(axis=0)
    diff = np.abs(image.as_array() - mean_ref)
    smooth = gaussian_blur(diff, smoothing_sigma)
    thr = float(smooth.mean() + z * smooth.std())
    mask = (smooth > thr).astype(float)
    return Explanation(
        id=_new_id(),
        prediction_ref=prediction_ref,
        kind="anomaly_map",
        payload={
            "width": image.width,
            "height": image.height,
            "map": [float(v) for v in mask.reshape(-1)],
            "threshold": thr,
        },
    )


# --------------------------------------------------------------------------
# SSIM and nearest-labeled hint

SSIM_C1 = (0.01 * 1.0) ** 2
SSIM_C2 = (0.03 * 1.0) ** 2


def ssim(a: GrayImage, b: GrayImage, window: int = 8,
         c1: float = SSIM_C1, c2: float = SSIM_C2) -> float:
    """Mean structural similarity over sliding windows (stride 1).

    Population statistics per window; returns a value in [-1, 1] and exactly
    1.0 for identical images.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("image dimensions differ")
    if a.width < window or a.height < window:
        raise ValueError("image smaller than the SSIM window")
    from numpy.lib.stride_tricks import sliding_window_view

    xa = a.as_array()
    xb = b.as_array()
    wa = sliding_window_view(xa, (window, window))
    wb = sliding_window_view(xb, (window, window))
    mu_a = wa.mean(axis=(2, 3))
    mu_b = wb.mean(axis=(2, 3))
    var_a = (wa * wa).mean(axis=(2, 3)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(2, 3)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(2, 3)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


def nearest_hint(image: GrayImage, gallery: Sequence[Tuple[GrayImage, str, str]],
                 prediction_ref: str = "", window: int = 8) -> Explanation:
    """Most similar labeled gallery image by SSIM (ties -> earliest insert).

    Gallery entries are (image, label, ref_id).
    """
    if not gallery:
        raise ValueError("empty gallery")
    best_i = 0
    best_s = -np.inf
    for i, (img, _, _) in enumerate(gallery):
        s = ssim(image, img, window=window)
        if s > best_s:
            best_s = s
            best_i = i
    _, label, ref_id = gallery[best_i]
    return Explanation(
        id=_new_id(),
        prediction_ref=prediction_ref,
        kind="nearest_neighbor",
        payload={"neighbor_ref": ref_id, "neighbor_label": label, "ssim": float(best_s)},
    )


# --------------------------------------------------------------------------
# enrichment


class FixtureEnrichmentClient:
    """Default enrichment source: canned items, optionally from a JSON file."""

    def __init__(self, fixtures: Optional[List[dict]] = None, path: Optional[str] = None):
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                fixtures = json.load(fh)
        self.fixtures = list(fixtures or [])

    def search(self, keywords: Sequence[str], time_range=None) -> List[dict]:
        kw = [k.lower() for k in keywords]
        out = []
        for item in self.fixtures:
            text = (item.get("title", "") + " " + item.get("source", "")).lower()
            if not kw or any(k in text for k in kw):
                out.append(dict(item))
        return out


def enrich(explanation: Explanation, keywords: Sequence[str],
           client=None, deadline_s: float = 2.0) -> Explanation:
    """Attach context items (title, source, relevance) sorted by relevance.

    Degrades gracefully: a missing, failing, or slow client leaves the
    explanation valid and flags a warning instead of blocking delivery.
    """
    out = Explanation.from_doc(explanation.to_doc())
    if client is None:
        out.warnings.append("enrichment unavailable: no client registered")
        return out

    result: Dict[str, object] = {}

    def call():
        try:
            result["items"] = client.search(keywords)
        except Exception as exc:  # noqa: BLE001 - degrade, never propagate
            result["error"] = str(exc)

    worker = threading.Thread(target=call, daemon=True)
    worker.start()
    worker.join(timeout=deadline_s)
    if worker.is_alive() or "error" in result:
        reason = result.get("error", f"timeout after {deadline_s}s")
        out.warnings.append(f"enrichment failed: {reason}")
        return out
    items = sorted(
        (dict(i) for i in result.get("items", [])),
        key=lambda i: -float(i.get("relevance", 0.0)),
    )
    out.payload = dict(out.payload)
    out.payload["enrichment"] = items
    return out
