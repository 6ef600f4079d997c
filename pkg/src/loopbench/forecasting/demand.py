"""Intermittent-demand forecasting: pattern classification, magnitude pooling,
Croston/SBA smoothing, a two-fold occurrence x size forecaster, and the
stock-keeping-oriented prediction error cost metric.

Pattern categories follow the usual ADI/CV^2 quadrants (cutoffs 1.32 and
0.49). Croston initializes the size estimate at the first nonzero size and
the interval estimate at the first inter-demand gap, which makes the forecast
invariant to leading zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .net import BatchNet, BatchNetConfig

ADI_CUTOFF = 1.32
CV2_CUTOFF = 0.49


@dataclass
class DemandSeries:
    product_id: str
    periods: List[int]
    quantities: List[float]
    pool_id: Optional[str] = None

    def __post_init__(self) -> None:
        if len(self.periods) != len(self.quantities):
            raise ValueError("periods and quantities must align")
        if any(q < 0 for q in self.quantities):
            raise ValueError("quantities must be nonnegative")
        if any(b <= a for a, b in zip(self.periods, self.periods[1:])):
            raise ValueError("periods must be strictly increasing")

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.quantities, dtype=float)

    def to_doc(self) -> dict:
        return {
            "product_id": self.product_id,
            "periods": list(self.periods),
            "quantities": [float(q) for q in self.quantities],
            "pool_id": self.pool_id,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DemandSeries":
        return cls(
            product_id=doc["product_id"],
            periods=[int(p) for p in doc["periods"]],
            quantities=[float(q) for q in doc["quantities"]],
            pool_id=doc.get("pool_id"),
        )


@dataclass
class DemandClass:
    adi: float
    cv2: float
    category: str  # smooth | erratic | lumpy | intermittent | intermittent-degenerate


@dataclass
class SpecParams:
    alpha1: float = 0.5  # opportunity-cost weight
    alpha2: float = 0.5  # stock-keeping-cost weight

    def __post_init__(self) -> None:
        if self.alpha1 < 0 or self.alpha2 < 0 or self.alpha1 + self.alpha2 <= 0:
            raise ValueError("weights must be nonnegative with a positive sum")


def classify_demand(series: DemandSeries) -> DemandClass:
    q = series.values
    if len(q) == 0:
        raise ValueError("empty series")
    nonzero = q[q > 0]
    if len(nonzero) == 0:
        return DemandClass(adi=float("inf"), cv2=0.0, category="intermittent-degenerate")
    adi = len(q) / len(nonzero)
    mean = nonzero.mean()
    cv2 = float((nonzero.std() / mean) ** 2)  # population std
    if adi < ADI_CUTOFF:
        category = "smooth" if cv2 < CV2_CUTOFF else "erratic"
    else:
        category = "intermittent" if cv2 < CV2_CUTOFF else "lumpy"
    return DemandClass(adi=float(adi), cv2=cv2, category=category)


def pool_by_magnitude(series_set: Sequence[DemandSeries], n_pools: int) -> dict:
    """Equal-frequency pools over mean nonzero demand; all-zero series excluded."""
    if n_pools < 1:
        raise ValueError("need at least one pool")
    eligible = []
    for s in series_set:
        nz = s.values[s.values > 0]
        if len(nz):
            eligible.append((s.product_id, float(nz.mean())))
    eligible.sort(key=lambda t: (t[1], t[0]))
    assignments = {}
    n = len(eligible)
    for pool in range(n_pools):
        lo = (pool * n) // n_pools
        hi = ((pool + 1) * n) // n_pools
        for product_id, _ in eligible[lo:hi]:
            assignments[product_id] = f"pool_{pool}"
    return assignments


@dataclass
class CrostonForecast:
    next_forecast: float
    per_period: np.ndarray  # one-step-ahead, backfilled before initialization
    size_level: float
    interval_level: float


def _occurrences(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(q > 0)
    sizes = q[idx]
    gaps = np.diff(idx).astype(float)  # inter-demand intervals
    return sizes, gaps


def forecast_croston(series: DemandSeries, alpha: float = 0.1) -> CrostonForecast:
    """Croston's method with occurrence-driven exponential smoothing.

    Size level starts at the first nonzero size; interval level starts at the
    first observed inter-demand gap (1 when the history holds a single
    occurrence). Both levels update only when demand occurs.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    q = series.values
    sizes, gaps = _occurrences(q)
    if len(sizes) == 0:
        raise ValueError("no demand observed")

    z = float(sizes[0])
    p = float(gaps[0]) if len(gaps) else 1.0
    for j in range(1, len(sizes)):
        z = alpha * float(sizes[j]) + (1.0 - alpha) * z
        if j >= 2:  # the first gap seeded p
            p = alpha * float(gaps[j - 1]) + (1.0 - alpha) * p

    # per-period one-step-ahead trace for backtesting
    per = np.empty(len(q))
    idx = np.flatnonzero(q > 0)
    zz = float(sizes[0])
    pp = float(gaps[0]) if len(gaps) else 1.0
    level = zz / pp
    per[:] = level
    occ_seen = 0
    for t in range(len(q)):
        if q[t] > 0:
            occ_seen += 1
            if occ_seen >= 2:
                j = occ_seen - 1
                zz = alpha * float(sizes[j]) + (1.0 - alpha) * zz
                if j >= 2:
                    pp = alpha * float(gaps[j - 1]) + (1.0 - alpha) * pp
                level = zz / pp
        if t + 1 < len(q):
            per[t + 1] = level
    return CrostonForecast(
        next_forecast=float(z / p),
        per_period=per,
        size_level=z,
        interval_level=p,
    )


def forecast_sba(series: DemandSeries, alpha: float = 0.1) -> CrostonForecast:
    """Syntetos-Boylan approximation: Croston scaled by (1 - alpha/2)."""
    base = forecast_croston(series, alpha)
    factor = 1.0 - alpha / 2.0
    return CrostonForecast(
        next_forecast=base.next_forecast * factor,
        per_period=base.per_period * factor,
        size_level=base.size_level,
        interval_level=base.interval_level,
    )


class TwofoldForecaster:
    """Occurrence classifier x nonzero-size smoother.

    The occurrence model is a small feedforward net over lag occurrence
    indicators (lags 1..L), the period index, and the rolling nonzero rate;
    the size model is exponential smoothing of nonzero sizes. The point
    forecast is P(demand > 0) * E[size | demand > 0].
    """

    def __init__(self, lags: int = 4, alpha: float = 0.1, seed: int = 0,
                 rolling_window: int = 8):
        if lags < 1:
            raise ValueError("need at least one lag")
        self.lags = lags
        self.alpha = alpha
        self.seed = seed
        self.rolling_window = rolling_window
        self._net: Optional[BatchNet] = None
        self._size_level: Optional[float] = None
        self._history: Optional[np.ndarray] = None

    def _features(self, q: np.ndarray, t: int) -> np.ndarray:
        lags = [1.0 if q[t - k] > 0 else 0.0 for k in range(1, self.lags + 1)]
        win = q[max(0, t - self.rolling_window) : t]
        rate = float((win > 0).mean()) if len(win) else 0.0
        return np.array(lags + [float(t % 7), rate])

    def fit(self, series: DemandSeries) -> "TwofoldForecaster":
        q = series.values
        if len(q) <= self.lags:
            raise ValueError(f"insufficient history: need more than {self.lags} periods")
        X = np.stack([self._features(q, t) for t in range(self.lags, len(q))])
        y = ["demand" if q[t] > 0 else "none" for t in range(self.lags, len(q))]
        if len(set(y)) == 1:
            # degenerate but legal history (all demand or none): constant model
            self._net = None
            self._constant_occurrence = 1.0 if y[0] == "demand" else 0.0
        else:
            cfg = BatchNetConfig(hidden=8, lr=0.3, epochs=300, batch_size=16, seed=self.seed)
            self._net = BatchNet(["demand", "none"], config=cfg).fit(X, y)
        sizes = q[q > 0]
        level = float(sizes[0]) if len(sizes) else 0.0
        for s in sizes[1:]:
            level = self.alpha * float(s) + (1.0 - self.alpha) * level
        self._size_level = level
        self._history = q
        return self

    def predict_next(self) -> Tuple[float, float, float]:
        """(occurrence probability, expected nonzero size, point forecast)."""
        if self._history is None:
            raise ValueError("model not fitted")
        q = np.append(self._history, 0.0)  # features for the next period
        t = len(q) - 1
        if self._net is None:
            p_occ = self._constant_occurrence
        else:
            p = self._net.predict_proba(self._features(q, t).reshape(1, -1))[0]
            p_occ = float(p[self._net.classes.index("demand")])
        size = float(self._size_level or 0.0)
        return p_occ, size, p_occ * size

    def occurrence_probability(self, q_prefix: np.ndarray, t: int) -> float:
        if self._net is None:
            return self._constant_occurrence
        p = self._net.predict_proba(self._features(q_prefix, t).reshape(1, -1))[0]
        return float(p[self._net.classes.index("demand")])


def spec_metric(actual: Sequence[float], forecast: Sequence[float],
                params: Optional[SpecParams] = None) -> float:
    """Stock-keeping-oriented prediction error cost.

    For each period t, every earlier period i contributes the larger of an
    opportunity cost (unmet cumulative demand) and a stock-keeping cost
    (excess cumulative forecast), weighted by its age t - i + 1:

        (1/n) * sum_t sum_{i<=t} max(0,
            a1 * min(y_i, cumY_t - cumF_t),
            a2 * min(f_i, cumF_t - cumY_t)) * (t - i + 1)
    """
    params = params or SpecParams()
    y = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if y.shape != f.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("actual and forecast must be equal-length nonempty vectors")
    if np.any(y < 0) or np.any(f < 0):
        raise ValueError("negative demand or forecast")
    n = len(y)
    cum_y = np.cumsum(y)
    cum_f = np.cumsum(f)
    total = 0.0
    for t in range(n):
        gap_unmet = cum_y[t] - cum_f[t]
        gap_excess = cum_f[t] - cum_y[t]
        ages = np.arange(t, -1, -1) + 1.0  # t - i + 1 for i = 0..t
        opp = params.alpha1 * np.minimum(y[: t + 1], gap_unmet)
        keep = params.alpha2 * np.minimum(f[: t + 1], gap_excess)
        total += float((np.maximum(0.0, np.maximum(opp, keep)) * ages).sum())
    return total / n
