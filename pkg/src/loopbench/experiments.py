"""Desk-scale experiments: AL label efficiency, batch-vs-streaming ordering,
calibration effect, oversampling effect. Shared by the CLI, the scripts, and
the acceptance suite.

Everything is deterministic given the seed; the annotation oracle simply
reveals the generator's ground-truth labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .forecasting import BatchNet, BatchNetConfig, StreamingKnn, auc_pair, calibrate
from .forecasting.calibration import brier_score
from .simreal import make_logo_dataset, oversample_minority
from .types import Sample

POSITIVE = "defect"

EXPERIMENT_NET = BatchNetConfig(hidden=32, lr=0.1, epochs=100, batch_size=32,
                                plateau_tol=1e-5, plateau_patience=8)

# scene parameter ranges for the inspection datasets: defects subtle enough
# that ranking them needs broad defect coverage, classes still separable
DATASET_PARAMS = dict(
    noise_std=0.05,
    offset_range=(1.0, 2.4),
    gap_range=(0.05, 0.2),
    thickness_range=(2.0, 3.0),
)

# moderate defects: both model families separate them well, useful where the
# comparison is between models rather than between query strategies
MODERATE_PARAMS = dict(
    noise_std=0.06,
    offset_range=(2.0, 4.5),
    gap_range=(0.15, 0.45),
    thickness_range=(2.0, 3.0),
)


def stratified_split(samples: Sequence[Sample], test_frac: float, seed: int
                     ) -> Tuple[List[Sample], List[Sample]]:
    rng = np.random.default_rng(seed)
    by_class: Dict[str, List[Sample]] = {}
    for s in samples:
        by_class.setdefault(s.label, []).append(s)
    train: List[Sample] = []
    test: List[Sample] = []
    for label in sorted(by_class):
        group = by_class[label]
        order = rng.permutation(len(group))
        n_test = max(1, int(round(test_frac * len(group))))
        for i, j in enumerate(order):
            (test if i < n_test else train).append(group[j])
    return train, test


def _net_for(seed: int, classes: Sequence[str]) -> BatchNet:
    cfg = BatchNetConfig(**{**EXPERIMENT_NET.__dict__, "seed": seed})
    return BatchNet(sorted(classes), cfg)


def train_on(samples: Sequence[Sample], seed: int, balance: bool = True) -> BatchNet:
    """Train the experiment classifier, minority-balanced by interpolation.

    Balancing the training set keeps the learning curve stable under the
    heavy class imbalance of inspection data; the full-data reference model
    goes through the same path so comparisons stay apples-to-apples.
    """
    samples = list(samples)
    if balance:
        by_class: Dict[str, List[Sample]] = {}
        for s in samples:
            by_class.setdefault(s.label, []).append(s)
        if len(by_class) == 2 and len(min(by_class.values(), key=len)) >= 2:
            samples = samples + oversample_minority(samples, target_ratio=0.5, seed=seed)
    X = np.stack([s.features for s in samples])
    y = [s.label for s in samples]
    return _net_for(seed, set(y)).fit(X, y)


def test_auc(model: BatchNet, test: Sequence[Sample], positive: str = POSITIVE) -> float:
    X = np.stack([s.features for s in test])
    scores = model.predict_proba(X)[:, model.classes.index(positive)]
    truth = [1 if s.label == positive else 0 for s in test]
    return auc_pair(truth, scores)


@dataclass
class ALCurve:
    strategy: str
    seed: int
    labels: List[int] = field(default_factory=list)
    aucs: List[float] = field(default_factory=list)
    full_auc: float = 0.0

    def labels_to_reach(self, frac: float = 0.95) -> Optional[int]:
        target = frac * self.full_auc
        for n, a in zip(self.labels, self.aucs):
            if a >= target:
                return n
        return None


def run_al_curve(pool: Sequence[Sample], test: Sequence[Sample], strategy: str,
                 seed: int, seed_size: int = 20, batch: int = 20,
                 max_labels: int = 400, full_auc: Optional[float] = None) -> ALCurve:
    """One active-learning run: reveal labels in batches picked by the
    strategy, retrain from scratch each round, track test AUC.

    Until the revealed set holds two classes no model exists, so both
    strategies fall back to seeded random selection (identical draws).
    """
    if full_auc is None:
        full_auc = test_auc(train_on(pool, seed), test)
    curve = ALCurve(strategy=strategy, seed=seed, full_auc=full_auc)
    rng = np.random.default_rng([seed, 0 if strategy == "random" else 1])

    remaining = list(pool)
    revealed: List[Sample] = []
    model: Optional[BatchNet] = None

    def reveal(chosen: List[int]) -> None:
        nonlocal remaining
        chosen_set = set(chosen)
        revealed.extend(remaining[i] for i in chosen)
        remaining = [s for i, s in enumerate(remaining) if i not in chosen_set]

    reveal(list(rng.choice(len(remaining), size=min(seed_size, len(remaining)),
                           replace=False)))
    while True:
        classes = {s.label for s in revealed}
        if len(classes) >= 2:
            model = train_on(revealed, seed)
            curve.labels.append(len(revealed))
            curve.aucs.append(test_auc(model, test))
            if curve.aucs[-1] >= 0.95 * full_auc and curve.labels_to_reach() is not None:
                break
        if len(revealed) >= max_labels or not remaining:
            break
        take = min(batch, len(remaining))
        if model is None or strategy == "random":
            chosen = list(rng.choice(len(remaining), size=take, replace=False))
        else:
            X = np.stack([s.features for s in remaining])
            probs = model.predict_proba(X)
            nz = np.clip(probs, 1e-12, None)
            entropy = -(nz * np.log(nz)).sum(axis=1)
            chosen = list(np.argsort(-entropy, kind="stable")[:take])
        reveal(chosen)
    return curve


@dataclass
class EfficiencyResult:
    per_seed: List[dict]

    @property
    def median_ratio(self) -> float:
        return float(np.median([r["ratio"] for r in self.per_seed]))


def al_efficiency(seeds: Sequence[int], n: int = 2000, defect_rate: float = 0.05,
                  test_frac: float = 0.3, seed_size: int = 30, batch: int = 10,
                  max_labels: int = 400) -> EfficiencyResult:
    """Uncertainty-vs-random label efficiency over a seed set."""
    rows = []
    for seed in seeds:
        data = make_logo_dataset(n, defect_rate, seed=seed, binary=True, **DATASET_PARAMS)
        pool, test = stratified_split(data, test_frac, seed)
        full = test_auc(train_on(pool, seed), test)
        unc = run_al_curve(pool, test, "uncertainty", seed, seed_size, batch,
                           max_labels, full_auc=full)
        rnd = run_al_curve(pool, test, "random", seed, seed_size, batch,
                           max_labels, full_auc=full)
        n_unc = unc.labels_to_reach() or max_labels
        n_rnd = rnd.labels_to_reach() or max_labels
        rows.append(
            {
                "seed": seed,
                "full_auc": full,
                "labels_uncertainty": n_unc,
                "labels_random": n_rnd,
                "ratio": n_unc / n_rnd,
            }
        )
    return EfficiencyResult(per_seed=rows)


def batch_vs_streaming(seed: int, n: int = 1200, defect_rate: float = 0.1,
                       knn_k: int = 5, knn_window: int = 500) -> Tuple[float, float]:
    """(batch AUC, streaming AUC) on one stratified split.

    The streaming model sees the training items as a seeded arrival stream
    and keeps only its sliding window, which is exactly its production
    handicap against a retrained batch model.
    """
    data = make_logo_dataset(n, defect_rate, seed=seed, binary=True, **MODERATE_PARAMS)
    train, test = stratified_split(data, 0.3, seed)
    net = train_on(train, seed)
    knn = StreamingKnn(sorted({s.label for s in train}), k=knn_k, window=knn_window)
    order = np.random.default_rng(seed).permutation(len(train))  # arrival order
    for i in order:
        knn.learn(train[i].features, train[i].label)
    X = np.stack([s.features for s in test])
    truth = [1 if s.label == POSITIVE else 0 for s in test]
    knn_scores = knn.predict_proba(X)[:, knn.classes.index(POSITIVE)]
    return test_auc(net, test), auc_pair(truth, knn_scores)


def calibration_effect(seed: int, n: int = 3000) -> Tuple[float, float]:
    """(pre, post) holdout Brier on a deliberately overconfident score setup."""
    rng = np.random.default_rng(seed)
    raw = np.where(rng.random(n) < 0.5, 0.97, 0.03)
    true_p = np.where(raw > 0.5, 0.65, 0.35)
    y = (rng.random(n) < true_p).astype(int)

    class RawModel:
        classes = ("neg", "pos")
        calibrator = None
        model_id = "raw"

        def predict_proba(self, X):
            p = np.asarray(X, dtype=float).reshape(-1)
            base = np.column_stack([1 - p, p])
            if self.calibrator is not None:
                from .forecasting.calibration import platt_apply

                cal = np.column_stack(
                    [platt_apply(base[:, j], *self.calibrator[j]) for j in range(2)]
                )
                base = cal / cal.sum(axis=1, keepdims=True)
            return base

    model = RawModel()
    labels = ["pos" if v else "neg" for v in y]
    onehot = np.column_stack([1 - y, y]).astype(float)[:, [0, 1]]
    pre = brier_score(onehot, model.predict_proba(raw))
    calibrate(model, raw, labels)
    post = brier_score(onehot, model.predict_proba(raw))
    return pre, post


OVERSAMPLING_PARAMS = dict(
    noise_std=0.07,
    offset_range=(1.2, 2.2),
    gap_range=(0.05, 0.18),
    thickness_range=(2.0, 3.0),
)


def oversampling_effect(seed: int, n: int = 1200, defect_rate: float = 0.05,
                        target_ratio: float = 0.5, epochs: int = 15) -> Tuple[float, float]:
    """(plain minority recall, oversampled minority recall) at 95:5.

    Both models share the identical architecture and a fixed small training
    budget; the only difference is the synthetic minority points, so the
    recall gap isolates the balancing effect.
    """
    data = make_logo_dataset(n, defect_rate, seed=seed, binary=True, **OVERSAMPLING_PARAMS)
    train, test = stratified_split(data, 0.5, seed)
    Xt = np.stack([s.features for s in test])
    truth = np.array([1 if s.label == POSITIVE else 0 for s in test])

    def budget_train(samples):
        X = np.stack([s.features for s in samples])
        y = [s.label for s in samples]
        cfg = BatchNetConfig(hidden=32, lr=0.1, epochs=epochs, batch_size=32,
                             plateau_tol=0.0, plateau_patience=epochs + 1, seed=seed)
        return BatchNet(sorted(set(y)), cfg).fit(X, y)

    def recall_of(model) -> float:
        pred = model.predict_proba(Xt).argmax(axis=1)
        pos_idx = model.classes.index(POSITIVE)
        hits = ((pred == pos_idx) & (truth == 1)).sum()
        return float(hits / truth.sum())

    plain = budget_train(train)
    synth = oversample_minority(train, target_ratio=target_ratio, seed=seed)
    balanced = budget_train(list(train) + synth)
    return recall_of(plain), recall_of(balanced)
