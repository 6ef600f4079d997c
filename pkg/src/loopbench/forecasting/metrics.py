"""Classifier evaluation: AUC, threshold metrics, stratified cross-validation.

AUC is computed by pair counting in its Mann-Whitney rank form (ties count
0.5); ``auc_trapezoid`` integrates the ROC curve directly and is kept as an
independent route to the same number.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Sequence

import numpy as np

from .calibration import brier_score


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # 1-based average rank
        i = j + 1
    return ranks


def auc_pair(y_true: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    y = np.asarray(y_true, dtype=int)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = _average_ranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_trapezoid(y_true: Sequence[int], scores: Sequence[float]) -> float:
    """Trapezoidal area under the ROC curve (thresholds at unique scores)."""
    y = np.asarray(y_true, dtype=int)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tps = np.cumsum(y_sorted)
    fps = np.cumsum(1 - y_sorted)
    # keep the last point of each tied-score group
    distinct = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tpr = np.r_[0.0, tps[distinct] / n_pos]
    fpr = np.r_[0.0, fps[distinct] / n_neg]
    return float(np.trapezoid(tpr, fpr))


def binary_metrics(y_true: Sequence[int], scores: Sequence[float],
                   threshold: float = 0.5) -> Dict[str, float]:
    y = np.asarray(y_true, dtype=int)
    s = np.asarray(scores, dtype=float)
    pred = (s >= threshold).astype(int)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    onehot = np.column_stack([1 - y, y]).astype(float)
    probs = np.column_stack([1 - s, s])
    return {
        "auc_roc": auc_pair(y, s),
        "accuracy": (tp + tn) / len(y),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "brier": brier_score(onehot, probs),
    }


def stratified_folds(y: Sequence, folds: int, seed: int = 0) -> List[np.ndarray]:
    """Index folds preserving class proportions within +/- 1 sample."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    buckets: List[List[int]] = [[] for _ in range(folds)]
    offset = 0
    for cls in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == cls)
        if len(idx) < folds:
            raise ValueError(
                f"cannot stratify: class {cls!r} has {len(idx)} samples < {folds} folds"
            )
        idx = idx[rng.permutation(len(idx))]
        for i, sample_idx in enumerate(idx):
            buckets[(i + offset) % folds].append(int(sample_idx))
        offset += len(idx) % folds
    return [np.array(sorted(b), dtype=int) for b in buckets]


def evaluate(model_factory: Callable[[np.ndarray, Sequence], object],
             X: np.ndarray, y: Sequence[str], positive: str,
             folds: int = 10, seed: int = 0) -> Dict[str, float]:
    """Stratified k-fold evaluation of a binary scoring model.

    ``model_factory(X_train, y_train)`` must return an object with
    ``predict_proba`` and a ``classes`` tuple containing ``positive``.
    Metrics are averaged over folds.
    """
    X = np.asarray(X, dtype=float)
    y = list(y)
    fold_idx = stratified_folds(y, folds, seed=seed)
    totals: Dict[str, float] = {}
    for test_idx in fold_idx:
        mask = np.ones(len(y), dtype=bool)
        mask[test_idx] = False
        model = model_factory(X[mask], [y[i] for i in np.flatnonzero(mask)])
        probs = model.predict_proba(X[test_idx])
        pos_col = model.classes.index(positive)
        scores = probs[:, pos_col]
        truth = np.array([1 if y[i] == positive else 0 for i in test_idx])
        m = binary_metrics(truth, scores)
        for key, val in m.items():
            totals[key] = totals.get(key, 0.0) + val
    return {k: v / folds for k, v in totals.items()}
