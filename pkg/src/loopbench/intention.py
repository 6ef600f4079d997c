"""Worker intention recognition and robot safe-zone commands.

A 10-channel IMU window at 20 Hz becomes a 60-dim statistical feature vector
(mean, std, min, max, RMS, zero-crossing rate per channel, fixed order); the
activity classifier is the shared batch net; the predicted displacement over
a short horizon is checked against the robot corridor to pick one of
proceed_fast / slow / stop, with boundary contact resolving to the more
cautious command.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ColdModelError
from .types import Prediction

IMU_CHANNEL_ORDER = (
    "accel_x", "accel_y", "accel_z",
    "gyro_x", "gyro_y", "gyro_z",
    "mag_x", "mag_y", "mag_z",
    "capacitance",
)
FEATURES_PER_CHANNEL = ("mean", "std", "min", "max", "rms", "zcr")
ACTIVITIES = ("idle", "walk", "assemble", "carry")
IMU_RATE_HZ = 20


@dataclass
class ImuWindow:
    channels: Dict[str, np.ndarray]
    rate_hz: int = IMU_RATE_HZ

    def __post_init__(self) -> None:
        if set(self.channels) != set(IMU_CHANNEL_ORDER):
            missing = set(IMU_CHANNEL_ORDER) - set(self.channels)
            raise ValueError(f"window must carry all 10 channels (missing {sorted(missing)})")
        if self.rate_hz != IMU_RATE_HZ:
            raise ValueError("rate is fixed at 20 Hz")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise ValueError("all channels must have equal length")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}

    @property
    def length(self) -> int:
        return len(next(iter(self.channels.values())))

    def to_doc(self) -> dict:
        return {
            "rate_hz": self.rate_hz,
            "channels": {k: [float(x) for x in v] for k, v in self.channels.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ImuWindow":
        return cls(
            channels={k: np.asarray(v, dtype=float) for k, v in doc["channels"].items()},
            rate_hz=int(doc.get("rate_hz", IMU_RATE_HZ)),
        )


def zero_crossing_rate(signal: np.ndarray) -> float:
    """Sign changes of the mean-centered signal per transition."""
    x = np.asarray(signal, dtype=float)
    if len(x) < 2:
        return 0.0
    centered = x - x.mean()
    crossings = int(np.sum(centered[:-1] * centered[1:] < 0.0))
    return crossings / (len(x) - 1)


def featurize_window(window: ImuWindow) -> np.ndarray:
    """60 features: (mean, std, min, max, rms, zcr) per channel in fixed order."""
    if window.length < IMU_RATE_HZ:
        raise ValueError("window must cover at least 1 s (20 samples)")
    feats: List[float] = []
    for name in IMU_CHANNEL_ORDER:
        x = window.channels[name]
        feats.extend(
            [
                float(x.mean()),
                float(x.std()),
                float(x.min()),
                float(x.max()),
                float(np.sqrt((x * x).mean())),
                zero_crossing_rate(x),
            ]
        )
    return np.asarray(feats)


def imu_feature_names() -> List[str]:
    return [f"{ch}_{stat}" for ch in IMU_CHANNEL_ORDER for stat in FEATURES_PER_CHANNEL]


def window_from_frames(frames: Sequence[dict]) -> ImuWindow:
    """Assemble a window from line-delimited frames {ts, <10 channel values>}."""
    if not frames:
        raise ValueError("no frames")
    channels = {}
    for name in IMU_CHANNEL_ORDER:
        try:
            channels[name] = np.array([float(f[name]) for f in frames])
        except KeyError as exc:
            raise ValueError(f"frame missing channel {exc.args[0]!r}") from exc
    return ImuWindow(channels=channels)


def sliding_windows(window: ImuWindow, span_s: float = 2.0, overlap: float = 0.5
                    ) -> List[ImuWindow]:
    """Cut a long recording into fixed-span windows with fractional overlap."""
    span = int(round(span_s * window.rate_hz))
    step = max(1, int(round(span * (1.0 - overlap))))
    out = []
    for start in range(0, window.length - span + 1, step):
        out.append(
            ImuWindow(
                channels={k: v[start : start + span] for k, v in window.channels.items()},
                rate_hz=window.rate_hz,
            )
        )
    return out


def classify_activity(model, window: ImuWindow, sample_id: str = "imu-window") -> Prediction:
    """Simplex over activities for one window using a trained classifier."""
    if model is None:
        raise ColdModelError("no activity model trained")
    features = featurize_window(window)
    p = model.predict_proba(features.reshape(1, -1))[0]
    return Prediction(
        sample_id=sample_id,
        model_id=model.model_id,
        classes=model.classes,
        scores=p,
        calibrated=model.calibrator is not None,
    )


# --------------------------------------------------------------------------
# displacement and safe zone

DEFAULT_SPEED_TABLE = {
    # activity -> (speed m/s, heading persistence in [0,1])
    "idle": (0.0, 1.0),
    "walk": (1.2, 0.9),
    "assemble": (0.05, 1.0),
    "carry": (0.9, 0.9),
}


def predict_displacement(prediction: Prediction, heading: Tuple[float, float],
                         horizon_s: float = 2.0,
                         speed_table: Optional[dict] = None) -> np.ndarray:
    """Expected displacement vector over the horizon along the last heading."""
    table = DEFAULT_SPEED_TABLE if speed_table is None else speed_table
    for cls in prediction.classes:
        if cls not in table:
            raise ValueError(f"speed table has no entry for activity {cls!r}")
    h = np.asarray(heading, dtype=float)
    norm = float(np.linalg.norm(h))
    unit = h / norm if norm > 0 else np.zeros(2)
    speed = sum(
        float(prediction.scores[i]) * float(table[cls][0])
        for i, cls in enumerate(prediction.classes)
    )
    return unit * speed * horizon_s


@dataclass
class SafeZoneState:
    position: Tuple[float, float]
    displacement: Tuple[float, float]
    corridor: List[Tuple[float, float]]  # polygon vertices (m)
    buffer_m: float = 1.0


# -- tiny 2D geometry helpers ------------------------------------------------


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p, eps: float = 1e-12) -> bool:
    if abs(_orient(a, b, p)) > eps * (1 + abs(a[0]) + abs(b[0]) + abs(p[0])):
        return False
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return (
        _on_segment(q1, q2, p1)
        or _on_segment(q1, q2, p2)
        or _on_segment(p1, p2, q1)
        or _on_segment(p1, p2, q2)
    )


def point_in_polygon(point, polygon) -> bool:
    """Ray casting; boundary points count as inside."""
    x, y = point
    n = len(polygon)
    for i in range(n):
        if _on_segment(polygon[i], polygon[(i + 1) % n], point):
            return True
    inside = False
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > x:
                inside = not inside
    return inside


def _point_segment_dist(p, a, b) -> float:
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + t * ab - p))


def segment_segment_dist(p1, p2, q1, q2) -> float:
    if segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        _point_segment_dist(p1, q1, q2),
        _point_segment_dist(p2, q1, q2),
        _point_segment_dist(q1, p1, p2),
        _point_segment_dist(q2, p1, p2),
    )


def _polygon_area(polygon) -> float:
    area = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


def path_distance_to_polygon(start, end, polygon) -> float:
    """Min distance from the path segment to the polygon; 0 when they touch
    or either endpoint lies inside."""
    if point_in_polygon(start, polygon) or point_in_polygon(end, polygon):
        return 0.0
    n = len(polygon)
    best = np.inf
    for i in range(n):
        d = segment_segment_dist(start, end, polygon[i], polygon[(i + 1) % n])
        if d < best:
            best = d
        if best == 0.0:
            break
    return float(best)


def safe_zone_command(state: SafeZoneState) -> str:
    """stop when the predicted path touches the corridor, slow within the
    buffer (boundary inclusive), proceed_fast otherwise."""
    polygon = [tuple(map(float, v)) for v in state.corridor]
    if len(polygon) < 3 or _polygon_area(polygon) <= 0.0:
        raise ValueError("degenerate corridor polygon")
    if state.buffer_m < 0:
        raise ValueError("buffer must be nonnegative")
    start = tuple(map(float, state.position))
    end = (start[0] + float(state.displacement[0]), start[1] + float(state.displacement[1]))
    dist = path_distance_to_polygon(start, end, polygon)
    if dist == 0.0:
        return "stop"
    if dist <= state.buffer_m:
        return "slow"
    return "proceed_fast"
