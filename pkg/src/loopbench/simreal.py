"""Simulated reality: synthetic defect images, interpolation oversampling,
annotation-stream balancing, what-if demand scenarios, synthetic IMU windows.

All generators are pure given (params, seed) and everything they emit carries
a provenance other than `real`.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .forecasting.demand import CrostonForecast, DemandSeries, forecast_croston
from .imaging import extract_image_features
from .intention import ImuWindow, featurize_window
from .types import GrayImage, Provenance, Sample, SampleKind

DEFECT_GOOD = "good"
DEFECT_DOUBLE = "double_print"
DEFECT_INTERRUPTED = "interrupted_print"
DEFECT_CLASSES = (DEFECT_DOUBLE, DEFECT_INTERRUPTED)

# the printed glyph, as a polyline in unit coordinates
_GLYPH = np.array(
    [
        (0.22, 0.78),
        (0.22, 0.22),
        (0.55, 0.18),
        (0.70, 0.30),
        (0.62, 0.48),
        (0.36, 0.52),
        (0.72, 0.78),
    ]
)


@dataclass
class LogoSceneParams:
    size: int = 64
    thickness: float = 2.5
    noise_std: float = 0.05
    defect: str = DEFECT_GOOD
    double_offset: float = 3.0
    gap_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.defect not in (DEFECT_GOOD, DEFECT_DOUBLE, DEFECT_INTERRUPTED):
            raise ValueError(f"unknown defect {self.defect!r}")
        if not 0.0 <= self.noise_std <= 0.2:
            raise ValueError("noise stddev must lie in [0, 0.2]")
        if self.defect == DEFECT_DOUBLE and self.double_offset < 1:
            raise ValueError("double-print offset must be >= 1 px")
        if self.defect == DEFECT_INTERRUPTED and not 0.0 < self.gap_fraction < 1.0:
            raise ValueError("interruption gap fraction must lie in (0, 1)")


def _glyph_segments(size: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    pts = _GLYPH * size
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]


def _cut_segments(segments: Sequence[Tuple[np.ndarray, np.ndarray]],
                  gap_start: float, gap_len: float) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Remove the arc-length interval [gap_start, gap_start+gap_len) from a
    polyline, splitting segments at the boundaries."""
    out = []
    pos = 0.0
    gap_end = gap_start + gap_len
    for a, b in segments:
        length = float(np.linalg.norm(b - a))
        s0, s1 = pos, pos + length
        pos = s1
        if length == 0.0 or s1 <= gap_start or s0 >= gap_end:
            out.append((a, b))
            continue
        if s0 < gap_start:
            t = (gap_start - s0) / length
            out.append((a, a + t * (b - a)))
        if s1 > gap_end:
            t = (gap_end - s0) / length
            out.append((a + t * (b - a), b))
    return [(a, b) for a, b in out if np.linalg.norm(b - a) > 1e-9]


_GRID_CACHE: Dict[int, np.ndarray] = {}


def _pixel_grid(size: int) -> np.ndarray:
    grid = _GRID_CACHE.get(size)
    if grid is None:
        xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float))
        grid = np.column_stack([xs.reshape(-1), ys.reshape(-1)])  # row-major (y, x) order
        _GRID_CACHE[size] = grid
    return grid


def _stamp(canvas: np.ndarray, segments: Sequence[Tuple[np.ndarray, np.ndarray]],
           radius: float) -> None:
    """Mark every pixel within `radius` of any polyline segment (capsule union)."""
    if not segments:
        return
    grid = _pixel_grid(canvas.shape[0])
    r2 = radius * radius
    hit = np.zeros(len(grid), dtype=bool)
    for a, b in segments:
        ab = b - a
        denom = float(ab @ ab)
        rel = grid - a
        t = np.clip((rel @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(grid))
        closest = a + t[:, None] * ab
        d2 = ((grid - closest) ** 2).sum(axis=1)
        hit |= d2 <= r2
    canvas.reshape(-1)[hit] = 1.0


def render_logo(params: LogoSceneParams) -> GrayImage:
    """Deterministic scene render; same params and seed give identical pixels."""
    rng_geom = np.random.default_rng([params.seed, 1])
    rng_noise = np.random.default_rng([params.seed, 0])
    size = params.size
    canvas = np.zeros((size, size))
    segments = _glyph_segments(size)
    total = sum(float(np.linalg.norm(b - a)) for a, b in segments)
    radius = params.thickness / 2.0

    if params.defect == DEFECT_INTERRUPTED:
        gap_len = params.gap_fraction * total
        start_lo, start_hi = 0.1 * total, max(0.1 * total + 1e-9, 0.9 * total - gap_len)
        gap_start = float(rng_geom.uniform(start_lo, start_hi))
        _stamp(canvas, _cut_segments(segments, gap_start, gap_len), radius)
    else:
        _stamp(canvas, segments, radius)
        if params.defect == DEFECT_DOUBLE:
            shift = np.array([params.double_offset, params.double_offset * 0.5])
            ghost = [(a + shift, b + shift) for a, b in segments]
            _stamp(canvas, ghost, radius)

    if params.noise_std > 0:
        canvas = canvas + rng_noise.normal(0.0, params.noise_std, size=canvas.shape)
    return GrayImage.from_array(np.clip(canvas, 0.0, 1.0))


def generate_logo_sample(params: LogoSceneParams,
                         provenance: Provenance = Provenance.SYNTHETIC) -> Tuple[Sample, GrayImage]:
    """Render a synthetic inspection image and wrap it as a Sample."""
    if provenance == Provenance.REAL:
        raise ValueError("synthetic generator cannot emit provenance=real")
    img = render_logo(params)
    sample = Sample(
        id=f"logo-{params.defect}-{params.seed}-{uuid.uuid4().hex[:8]}",
        kind=SampleKind.IMAGE,
        payload_ref=f"images/{params.defect}/{params.seed}",
        features=extract_image_features(img),
        provenance=provenance,
        label=params.defect,
    )
    return sample, img


def make_logo_dataset(n: int, defect_rate: float, seed: int, size: int = 64,
                      noise_std: float = 0.08, binary: bool = False,
                      thickness_range: Tuple[float, float] = (2.0, 3.2),
                      offset_range: Tuple[float, float] = (2.0, 5.0),
                      gap_range: Tuple[float, float] = (0.2, 0.5),
                      with_images: bool = False):
    """Inspection-line stand-in dataset (provenance real, labels known).

    Scene parameters (thickness, offsets, gaps) vary per item so the classes
    are separable but not trivially so; narrower offset/gap ranges make the
    defects subtler. ``binary`` collapses both defect kinds into one "defect"
    label. With ``with_images`` the return value is a list of
    (sample, image) pairs instead of bare samples.
    """
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        is_defect = rng.random() < defect_rate
        defect = DEFECT_GOOD
        if is_defect:
            defect = DEFECT_DOUBLE if rng.random() < 0.5 else DEFECT_INTERRUPTED
        params = LogoSceneParams(
            size=size,
            thickness=float(rng.uniform(*thickness_range)),
            noise_std=noise_std,
            defect=defect,
            double_offset=float(rng.uniform(*offset_range)),
            gap_fraction=float(rng.uniform(*gap_range)),
            seed=int(rng.integers(0, 2**31 - 1)),
        )
        img = render_logo(params)
        label = defect if not binary else ("defect" if defect != DEFECT_GOOD else DEFECT_GOOD)
        sample = Sample(
            id=f"insp-{seed}-{i:05d}",
            kind=SampleKind.IMAGE,
            payload_ref=f"images/{seed}/{i}",
            features=extract_image_features(img),
            provenance=Provenance.REAL,
            label=label,
        )
        samples.append((sample, img) if with_images else sample)
    return samples


# --------------------------------------------------------------------------
# interpolation oversampling


def oversample_minority(samples: Sequence[Sample], target_ratio: float,
                        k: int = 5, seed: int = 0) -> List[Sample]:
    """Interpolation oversampling of the minority class.

    New points are x + u*(x' - x) for a random minority sample x, one of its k
    minority nearest neighbors x', and u ~ U(0,1). Synthesis continues until
    the minority count reaches target_ratio * (pre-balancing total), so a
    95:5 set of 200 asked for 0.5 yields 90 synthetic points.
    """
    if not 0.0 < target_ratio < 1.0:
        raise ValueError("target ratio must lie in (0, 1)")
    labeled = [s for s in samples if s.label is not None]
    by_class: Dict[str, List[Sample]] = {}
    for s in labeled:
        by_class.setdefault(s.label, []).append(s)
    if len(by_class) < 2:
        raise ValueError("need at least two classes")
    minority_label = min(by_class, key=lambda c: (len(by_class[c]), c))
    minority = by_class[minority_label]
    if len(minority) < 2:
        raise ValueError("cannot interpolate: minority class has a single sample")

    total = len(labeled)
    need = int(np.ceil(target_ratio * total)) - len(minority)
    if need <= 0:
        return []

    feats = np.stack([s.features for s in minority])
    d2 = ((feats[:, None, :] - feats[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    k_eff = min(k, len(minority) - 1)
    neighbor_idx = np.argsort(d2, axis=1)[:, :k_eff]

    rng = np.random.default_rng(seed)
    out = []
    for j in range(need):
        i = int(rng.integers(len(minority)))
        nb = int(neighbor_idx[i, int(rng.integers(k_eff))])
        u = float(rng.random())
        x = feats[i] + u * (feats[nb] - feats[i])
        out.append(
            Sample(
                id=f"synth-{minority_label}-{seed}-{j:05d}",
                kind=minority[i].kind,
                payload_ref="",
                features=x,
                provenance=Provenance.SYNTHETIC,
                label=minority_label,
            )
        )
    return out


# --------------------------------------------------------------------------
# annotation stream balancing


@dataclass
class BalancerConfig:
    target_ratio: float = 0.3
    window: int = 100
    defect_labels: Tuple[str, ...] = DEFECT_CLASSES
    # which reserve items to spend first when injecting
    source_priority: Tuple[Provenance, ...] = (
        Provenance.SYNTHETIC,
        Provenance.INJECTED_KNOWN_DEFECT,
    )

    def __post_init__(self) -> None:
        if not 0.0 < self.target_ratio < 1.0:
            raise ValueError("target ratio must lie in (0, 1)")
        if self.window < 10:
            raise ValueError("window must be >= 10")
        if Provenance.REAL in self.source_priority:
            raise ValueError("real items cannot be an injection source")


@dataclass
class BalanceResult:
    emitted: List[Sample]
    injected: int
    warning: Optional[str] = None


class StreamBalancer:
    """Keeps the presented defect ratio of a revision stream at or above the
    target by injecting reserve items after each real sample.

    Injected items never enter the production statistics and real samples are
    never dropped.
    """

    def __init__(self, config: BalancerConfig, reserve: Optional[List[Sample]] = None):
        self.config = config
        self._reserve: List[Sample] = list(reserve or [])
        self._window: List[bool] = []  # defect flags of emitted items
        self.production_total = 0
        self.production_defects = 0
        self.emitted_total = 0
        self.injected_total = 0

    def add_reserve(self, samples: Sequence[Sample]) -> None:
        for s in samples:
            if s.provenance == Provenance.REAL:
                raise ValueError("reserve items must not be provenance=real")
        self._reserve.extend(samples)

    @property
    def reserve_size(self) -> int:
        return len(self._reserve)

    def window_ratio(self) -> float:
        if not self._window:
            return 0.0
        return sum(self._window) / len(self._window)

    def _emit(self, sample: Sample, is_defect: bool) -> None:
        self._window.append(is_defect)
        if len(self._window) > self.config.window:
            self._window.pop(0)
        self.emitted_total += 1

    def _pop_reserve(self) -> Optional[Sample]:
        for provenance in self.config.source_priority:
            for i, sample in enumerate(self._reserve):
                if sample.provenance == provenance:
                    return self._reserve.pop(i)
        return self._reserve.pop(0) if self._reserve else None

    def process(self, sample: Sample) -> BalanceResult:
        is_defect = sample.label in self.config.defect_labels
        if sample.provenance == Provenance.REAL:
            self.production_total += 1
            if is_defect:
                self.production_defects += 1
        self._emit(sample, is_defect)
        emitted = [sample]
        injected = 0
        warning = None
        while self.window_ratio() < self.config.target_ratio:
            extra = self._pop_reserve()
            if extra is None:
                warning = "reserve empty; stream proceeds unbalanced"
                break
            self._emit(extra, extra.label in self.config.defect_labels)
            emitted.append(extra)
            injected += 1
        self.injected_total += injected
        return BalanceResult(emitted=emitted, injected=injected, warning=warning)

    def production_stats(self) -> Dict[str, float]:
        rate = self.production_defects / self.production_total if self.production_total else 0.0
        return {
            "real_items": self.production_total,
            "real_defects": self.production_defects,
            "real_defect_rate": rate,
            "emitted_items": self.emitted_total,
            "injected_items": self.injected_total,
            "window_ratio": self.window_ratio(),
        }


# --------------------------------------------------------------------------
# what-if demand scenarios


@dataclass
class Adjustment:
    period_start: int
    period_end: int  # inclusive
    multiplier: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.multiplier is None) == (self.delta is None):
            raise ValueError("adjustment needs exactly one of multiplier or delta")
        if self.multiplier is not None and self.multiplier <= 0:
            raise ValueError("multiplier must be positive")


@dataclass
class ScenarioSpec:
    base: DemandSeries
    adjustments: List[Adjustment] = field(default_factory=list)
    label: str = ""


@dataclass
class ScenarioResult:
    base_series: DemandSeries
    adjusted_series: DemandSeries
    base_forecast: CrostonForecast
    adjusted_forecast: CrostonForecast

    @property
    def delta(self) -> float:
        return self.adjusted_forecast.next_forecast - self.base_forecast.next_forecast


def simulate_scenario(spec: ScenarioSpec,
                      forecaster: Callable[[DemandSeries], CrostonForecast] = forecast_croston
                      ) -> ScenarioResult:
    """Apply adjustments, re-run the forecaster on base and adjusted series."""
    base = spec.base
    span = (base.periods[0], base.periods[-1])
    quantities = list(base.quantities)
    for adj in spec.adjustments:
        if adj.period_start > adj.period_end:
            raise ValueError("adjustment range is inverted")
        if adj.period_start < span[0] or adj.period_end > span[1]:
            raise ValueError(
                f"adjustment [{adj.period_start}, {adj.period_end}] outside series span {span}"
            )
        for i, period in enumerate(base.periods):
            if adj.period_start <= period <= adj.period_end:
                if adj.multiplier is not None:
                    quantities[i] *= adj.multiplier
                else:
                    quantities[i] += adj.delta
                if quantities[i] < 0:
                    raise ValueError(f"adjustment drives period {period} negative")
    adjusted = DemandSeries(
        product_id=base.product_id,
        periods=list(base.periods),
        quantities=quantities,
        pool_id=base.pool_id,
    )
    return ScenarioResult(
        base_series=base,
        adjusted_series=adjusted,
        base_forecast=forecaster(base),
        adjusted_forecast=forecaster(adjusted),
    )


# --------------------------------------------------------------------------
# synthetic IMU sequences

IMU_RATE_HZ = 20
IMU_CHANNELS = (
    "accel_x", "accel_y", "accel_z",
    "gyro_x", "gyro_y", "gyro_z",
    "mag_x", "mag_y", "mag_z",
    "capacitance",
)

# per-activity motion template: channel -> list of (freq_hz, amplitude, phase)
# plus a DC offset; capacitance gets drift + activity-correlated bursts
_ACTIVITY_TEMPLATES: Dict[str, Dict[str, dict]] = {
    "idle": {
        "freq": 0.0, "accel_amp": 0.0, "gyro_amp": 0.0, "mag_amp": 0.0,
        "cap_burst": 0.0,
    },
    "walk": {
        "freq": 2.0, "accel_amp": 2.6, "gyro_amp": 1.2, "mag_amp": 1.5,
        "cap_burst": 0.8,
    },
    "assemble": {
        "freq": 3.5, "accel_amp": 1.1, "gyro_amp": 2.2, "mag_amp": 0.4,
        "cap_burst": 1.6,
    },
    "carry": {
        "freq": 1.2, "accel_amp": 1.7, "gyro_amp": 0.5, "mag_amp": 2.4,
        "cap_burst": 0.4,
    },
}

_IMU_DC = {
    "accel_x": 0.0, "accel_y": 0.0, "accel_z": 9.81,
    "gyro_x": 0.0, "gyro_y": 0.0, "gyro_z": 0.0,
    "mag_x": 22.0, "mag_y": 5.0, "mag_z": 41.0,
    "capacitance": 1.0,
}

IMU_NOISE_STD = 0.08


def generate_imu_sequence(activity: str, duration_s: float, seed: int = 0
                          ) -> Tuple[Sample, ImuWindow]:
    """Synthesize a 10-channel IMU window at 20 Hz for one activity."""
    if activity not in _ACTIVITY_TEMPLATES:
        raise ValueError(f"unknown activity {activity!r}")
    if duration_s < 2.0:
        raise ValueError("duration must be at least 2 s")
    tpl = _ACTIVITY_TEMPLATES[activity]
    n = int(round(duration_s * IMU_RATE_HZ))
    t = np.arange(n) / IMU_RATE_HZ
    activity_code = sorted(_ACTIVITY_TEMPLATES).index(activity)
    rng = np.random.default_rng([seed, activity_code])

    channels: Dict[str, np.ndarray] = {}
    f = tpl["freq"]
    for i, axis in enumerate(("x", "y", "z")):
        phase = i * np.pi / 3.0
        channels[f"accel_{axis}"] = (
            _IMU_DC[f"accel_{axis}"]
            + tpl["accel_amp"] * (1.0 - 0.2 * i) * np.sin(2 * np.pi * f * t + phase)
        )
        channels[f"gyro_{axis}"] = (
            tpl["gyro_amp"] * (1.0 - 0.15 * i) * np.sin(2 * np.pi * f * t + phase + 0.7)
        )
        channels[f"mag_{axis}"] = (
            _IMU_DC[f"mag_{axis}"]
            + tpl["mag_amp"] * np.sin(2 * np.pi * 0.5 * f * t + phase)
        )
    drift = 0.05 * np.sin(2 * np.pi * 0.05 * t)
    bursts = tpl["cap_burst"] * np.maximum(0.0, np.sin(2 * np.pi * f * t)) ** 3
    channels["capacitance"] = _IMU_DC["capacitance"] + drift + bursts

    for name in IMU_CHANNELS:
        channels[name] = channels[name] + rng.normal(0.0, IMU_NOISE_STD, size=n)

    window = ImuWindow(channels=channels)
    sample = Sample(
        id=f"imu-{activity}-{seed}-{uuid.uuid4().hex[:8]}",
        kind=SampleKind.IMU_WINDOW,
        payload_ref=f"imu/{activity}/{seed}",
        features=featurize_window(window),
        provenance=Provenance.SYNTHETIC,
        label=activity,
    )
    return sample, window
