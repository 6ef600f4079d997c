"""Mutual-information feature ranking.

Each feature is discretized into B equal-width bins over its observed range;
MI(X;Y) = sum p(x,y) * ln(p(x,y) / (p(x) p(y))) with 0*ln(0) = 0. The sort is
descending with ties broken by the lower feature index, so rankings are
deterministic and permutation-equivariant.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np


def _discretize(col: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(col.min()), float(col.max())
    if hi <= lo:  # constant feature: one bin, MI will be 0
        return np.zeros(len(col), dtype=int)
    idx = np.floor((col - lo) / (hi - lo) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


def mutual_information(x_bins: np.ndarray, y_codes: np.ndarray,
                       n_x: int, n_y: int) -> float:
    joint = np.zeros((n_x, n_y))
    for xb, yc in zip(x_bins, y_codes):
        joint[xb, yc] += 1.0
    joint /= joint.sum()
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    mi = 0.0
    for i in range(n_x):
        for j in range(n_y):
            pxy = joint[i, j]
            if pxy > 0.0:
                mi += pxy * np.log(pxy / (px[i] * py[j]))
    return float(max(mi, 0.0))


def rank_features_mi(X: np.ndarray, y: Sequence[str], bins: int = 16) -> List[Tuple[int, float]]:
    """Rank features by MI with the label; returns (index, score) pairs."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = sorted(set(y))
    if len(labels) < 2:
        raise ValueError("need at least 2 classes")
    code = {c: i for i, c in enumerate(labels)}
    y_codes = np.array([code[v] for v in y], dtype=int)
    scores = []
    for j in range(X.shape[1]):
        xb = _discretize(X[:, j], bins)
        scores.append(mutual_information(xb, y_codes, bins, len(labels)))
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    return [(j, scores[j]) for j in order]
