"""Batch classifier: convergence, determinism, and the gradient check."""

import numpy as np
import pytest

from loopbench.forecasting import BatchNet, BatchNetConfig, train_batch
from loopbench.types import Provenance, Sample, SampleKind


def make_blobs(n=200, seed=42, gap=6.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(0.0, 1.0, size=(half, 2))
    b = rng.normal(gap, 1.0, size=(n - half, 2))
    X = np.vstack([a, b])
    y = ["a"] * half + ["b"] * (n - half)
    return X, y


def test_separable_blobs_reach_high_training_accuracy():
    X, y = make_blobs()
    net = BatchNet(["a", "b"], BatchNetConfig(seed=42, epochs=120)).fit(X, y)
    pred = net.predict_proba(X).argmax(axis=1)
    truth = np.array([0 if v == "a" else 1 for v in y])
    assert (pred == truth).mean() >= 0.99


def test_training_point_argmax_matches_label():
    X, y = make_blobs(n=100, seed=3)
    net = BatchNet(["a", "b"], BatchNetConfig(seed=1, epochs=150)).fit(X, y)
    p = net.predict_proba(X[:1])
    assert net.classes[int(p.argmax())] == y[0]


def test_single_class_input_rejected():
    X = np.random.default_rng(0).normal(size=(10, 3))
    net = BatchNet(["a", "b"], BatchNetConfig(seed=0))
    with pytest.raises(ValueError, match="degenerate"):
        net.fit(X, ["a"] * 10)


def test_nonfinite_features_rejected():
    X = np.ones((4, 2))
    X[1, 1] = np.nan
    net = BatchNet(["a", "b"], BatchNetConfig(seed=0))
    with pytest.raises(ValueError):
        net.fit(X, ["a", "b", "a", "b"])


def test_same_seed_gives_identical_weights():
    X, y = make_blobs(n=80, seed=5)
    w1 = BatchNet(["a", "b"], BatchNetConfig(seed=9)).fit(X, y).weights_vector()
    w2 = BatchNet(["a", "b"], BatchNetConfig(seed=9)).fit(X, y).weights_vector()
    assert np.array_equal(w1, w2)


def test_prediction_scores_on_simplex():
    X, y = make_blobs(n=60, seed=6)
    net = BatchNet(["a", "b"], BatchNetConfig(seed=2, epochs=40)).fit(X, y)
    p = net.predict_proba(X)
    assert np.all(p >= 0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_dimension_mismatch_rejected():
    X, y = make_blobs(n=40, seed=7)
    net = BatchNet(["a", "b"], BatchNetConfig(seed=0, epochs=10)).fit(X, y)
    with pytest.raises(ValueError, match="dimension"):
        net.predict_proba(np.ones((1, 5)))


def test_train_batch_from_samples():
    X, y = make_blobs(n=50, seed=8)
    samples = [
        Sample(id=str(i), kind=SampleKind.TABULAR, payload_ref="", features=X[i],
               provenance=Provenance.REAL, label=y[i])
        for i in range(len(y))
    ]
    net = train_batch(samples, BatchNetConfig(seed=0, epochs=60))
    assert net.classes == ("a", "b")


def test_feature_subset_projection():
    rng = np.random.default_rng(11)
    X, y = make_blobs(n=60, seed=11)
    # pad with noise columns; the informative pair sits at indices 1 and 3
    widened = np.column_stack([rng.normal(size=60), X[:, 0], rng.normal(size=60), X[:, 1]])
    net = BatchNet(["a", "b"], BatchNetConfig(seed=0, epochs=80),
                   feature_subset=(1, 3)).fit(widened, y)
    pred = net.predict_proba(widened).argmax(axis=1)
    truth = np.array([0 if v == "a" else 1 for v in y])
    assert (pred == truth).mean() >= 0.99
    with pytest.raises(ValueError, match="unique"):
        BatchNet(["a", "b"], feature_subset=(1, 1))


def _relative_error(a, b):
    denom = max(1e-12, abs(a) + abs(b))
    return abs(a - b) / denom


@pytest.mark.parametrize("case", range(20))
def test_gradient_check_against_central_differences(case):
    """Analytic grads match (f(w+eps) - f(w-eps)) / 2eps on random small nets."""
    rng = np.random.default_rng(100 + case)
    n = int(rng.integers(4, 9))
    d = int(rng.integers(2, 5))
    k = int(rng.integers(2, 4))
    h = int(rng.integers(2, 6))
    X = rng.normal(size=(n, d))
    classes = [f"c{j}" for j in range(k)]
    y = [classes[int(v)] for v in rng.integers(0, k, size=n)]
    if len(set(y)) < 2:
        y[0], y[1] = classes[0], classes[1]

    net = BatchNet(classes, BatchNetConfig(hidden=h, seed=case, epochs=1, batch_size=n))
    net.fit(X, y)
    gW1, gb1, gW2, gb2 = net.grads_on(X, y)
    # grads_on averages over n; loss_on does too, so they line up directly
    eps = 1e-5
    checked = 0
    for mat, grad in ((net.W1, gW1), (net.b1, gb1), (net.W2, gW2), (net.b2, gb2)):
        flat = mat.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        idx = rng.choice(len(flat), size=min(4, len(flat)), replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            up = net.loss_on(X, y)
            flat[i] = orig - eps
            down = net.loss_on(X, y)
            flat[i] = orig
            fd = (up - down) / (2 * eps)
            if abs(fd) < 1e-10 and abs(gflat[i]) < 1e-10:
                continue  # dead ReLU path: both sides zero
            assert _relative_error(fd, gflat[i]) < 1e-4
            checked += 1
    assert checked > 0
