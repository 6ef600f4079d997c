"""Platt scaling: sigmoid calibration of classifier scores.

The calibrator maps a raw positive-class probability p through its log-odds
s = ln(p/(1-p)) and returns 1 / (1 + exp(A*s + B)). Perfectly calibrated
input therefore fits A ~ -1, B ~ 0. Parameters are found by Newton's method
on the two-parameter logistic log-likelihood with Platt's smoothed targets,
which keeps the fit finite on separable data.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

_EPS = 1e-12


def brier_score(y_onehot: np.ndarray, probs: np.ndarray) -> float:
    """Multiclass Brier score: mean over samples of sum (p_c - y_c)^2."""
    y = np.atleast_2d(np.asarray(y_onehot, dtype=float))
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    return float(((p - y) ** 2).sum(axis=1).mean())


def _logit(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), _EPS, 1.0 - _EPS)
    return np.log(p / (1.0 - p))


def platt_fit(raw_scores: np.ndarray, targets: np.ndarray,
              max_iter: int = 100, tol: float = 1e-10) -> Tuple[float, float]:
    """Fit (A, B) of p_cal = 1/(1+exp(A*logit(p_raw) + B)).

    Targets are 0/1; they are smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2)
    before the fit (Platt's prior), so separable inputs stay bounded.
    """
    y = np.asarray(targets, dtype=float)
    if len(set(y.tolist())) < 2:
        raise ValueError("calibration targets contain a single class")
    s = _logit(raw_scores)
    n_pos = float(y.sum())
    n_neg = float(len(y) - n_pos)
    t = np.where(y > 0.5, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(a: float, b: float) -> float:
        p = 1.0 / (1.0 + np.exp(a * s + b))
        p = np.clip(p, _EPS, 1.0 - _EPS)
        return float(-np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))

    A, B = -1.0, 0.0
    current = nll(A, B)
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(A * s + B))
        # negative log-likelihood of t under p; gradient wrt (A, B)
        d = p - t
        gA = float(np.sum(-d * s))
        gB = float(np.sum(-d))
        w = np.clip(p * (1.0 - p), _EPS, None)
        hAA = float(np.sum(w * s * s))
        hAB = float(np.sum(w * s))
        hBB = float(np.sum(w))
        det = hAA * hBB - hAB * hAB
        if abs(det) < _EPS:
            break
        dA = (hBB * gA - hAB * gB) / det
        dB = (hAA * gB - hAB * gA) / det
        step = 1.0
        while step > 1e-10:
            cand = nll(A - step * dA, B - step * dB)
            if cand <= current + 1e-12:
                A -= step * dA
                B -= step * dB
                current = cand
                break
            step /= 2.0
        else:
            break
        if abs(step * dA) < tol and abs(step * dB) < tol:
            break
    return A, B


def platt_apply(raw_scores, A: float, B: float):
    """Calibrated probability for raw positive-class probability scores."""
    s = _logit(np.asarray(raw_scores, dtype=float))
    return 1.0 / (1.0 + np.exp(A * s + B))


def calibrate(model, holdout_X: np.ndarray, holdout_y: Sequence[str]):
    """Fit one-vs-rest sigmoid calibrators on a held-out labeled set.

    Calibration is only kept when it does not worsen the holdout Brier score
    (identity parameters otherwise), so the post-calibration Brier is always
    <= the raw one up to float noise.
    """
    X = np.asarray(holdout_X, dtype=float)
    y = list(holdout_y)
    if len(set(y)) < 2:
        raise ValueError("single-class holdout cannot calibrate")
    model.calibrator = None
    raw = model.predict_proba(X)
    onehot = np.zeros_like(raw)
    for i, label in enumerate(y):
        onehot[i, model.classes.index(label)] = 1.0
    pre = brier_score(onehot, raw)

    params = []
    for j in range(len(model.classes)):
        tj = onehot[:, j]
        if len(set(tj.tolist())) < 2:      # class absent from holdout: identity
            params.append((-1.0, 0.0))
        else:
            params.append(platt_fit(raw[:, j], tj))

    model.calibrator = tuple(params)
    post = brier_score(onehot, model.predict_proba(X))
    if post > pre + 1e-9:
        model.calibrator = tuple((-1.0, 0.0) for _ in model.classes)
    return model
