"""Platt scaling oracles: synthetic calibrated and miscalibrated score sets."""

import numpy as np
import pytest

from loopbench.forecasting import BatchNet, BatchNetConfig, brier_score, calibrate
from loopbench.forecasting.calibration import platt_apply, platt_fit


def _binary_brier(y, p):
    onehot = np.column_stack([1 - y, y]).astype(float)
    probs = np.column_stack([1 - p, p])
    return brier_score(onehot, probs)


def test_perfectly_calibrated_scores_fit_near_identity():
    # probabilities that match empirical frequencies by construction
    rng = np.random.default_rng(0)
    p = rng.uniform(0.05, 0.95, size=5000)
    y = (rng.random(5000) < p).astype(float)
    A, B = platt_fit(p, y)
    assert A == pytest.approx(-1.0, abs=0.1)
    assert B == pytest.approx(0.0, abs=0.1)
    post = platt_apply(p, A, B)
    assert abs(_binary_brier(y, post) - _binary_brier(y, p)) < 1e-3


def test_overconfident_scores_improve_strictly():
    # raw says 0.99 / 0.01 while the true rates are 0.7 / 0.3
    rng = np.random.default_rng(1)
    n = 4000
    raw = np.where(rng.random(n) < 0.5, 0.99, 0.01)
    true_p = np.where(raw > 0.5, 0.7, 0.3)
    y = (rng.random(n) < true_p).astype(float)
    A, B = platt_fit(raw, y)
    post = platt_apply(raw, A, B)
    assert _binary_brier(y, post) < _binary_brier(y, raw)


def test_single_class_targets_rejected():
    with pytest.raises(ValueError):
        platt_fit(np.array([0.2, 0.8]), np.array([1.0, 1.0]))


def _fit_model(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1.2, size=(120, 2)), rng.normal(2.2, 1.2, size=(120, 2))])
    y = ["neg"] * 120 + ["pos"] * 120
    net = BatchNet(["neg", "pos"], BatchNetConfig(seed=seed, epochs=60)).fit(X, y)
    return net, rng


def test_calibrate_never_worsens_holdout_brier():
    net, rng = _fit_model(2)
    Xh = np.vstack([rng.normal(0, 1.2, size=(200, 2)), rng.normal(2.2, 1.2, size=(200, 2))])
    yh = ["neg"] * 200 + ["pos"] * 200
    raw = net.predict_proba(Xh)
    onehot = np.zeros_like(raw)
    for i, label in enumerate(yh):
        onehot[i, net.classes.index(label)] = 1.0
    pre = brier_score(onehot, raw)
    calibrate(net, Xh, yh)
    post = brier_score(onehot, net.predict_proba(Xh))
    assert post <= pre + 1e-6


def test_calibrated_scores_stay_on_simplex():
    net, rng = _fit_model(3)
    Xh = np.vstack([rng.normal(0, 1.2, size=(80, 2)), rng.normal(2.2, 1.2, size=(80, 2))])
    yh = ["neg"] * 80 + ["pos"] * 80
    calibrate(net, Xh, yh)
    p = net.predict_proba(Xh)
    assert np.all(p >= 0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)
    pred = net.predict_proba(Xh[:1])
    assert pred.shape == (1, 2)


def test_single_class_holdout_rejected():
    net, rng = _fit_model(4)
    Xh = rng.normal(size=(30, 2))
    with pytest.raises(ValueError):
        calibrate(net, Xh, ["pos"] * 30)
