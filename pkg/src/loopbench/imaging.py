"""Grayscale image utilities: PGM I/O, blur, resizing, deterministic features.

The feature extractor stands in for a learned embedding: block means plus
row/column profiles and a few global statistics. It is deterministic, cheap,
and good enough to separate the synthetic defect classes.
"""

from __future__ import annotations

import numpy as np

from .types import GrayImage


def write_pgm(img: GrayImage, path: str) -> None:
    """Binary PGM (P5), 8-bit."""
    arr = np.clip(np.rint(img.as_array() * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def read_pgm(path: str) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("only binary PGM (P5) is supported")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    raw = parts[4][: width * height]
    arr = np.frombuffer(raw, dtype=np.uint8).astype(float).reshape(height, width)
    return GrayImage.from_array(arr / float(maxval))


def gaussian_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian filter with reflect padding."""
    arr = np.asarray(arr, dtype=float)
    if sigma <= 0:
        return arr.copy()
    radius = max(1, int(np.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=float)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()

    def conv_rows(a: np.ndarray) -> np.ndarray:
        padded = np.pad(a, ((0, 0), (radius, radius)), mode="reflect")
        out = np.zeros_like(a)
        for i, k in enumerate(kernel):
            out += k * padded[:, i : i + a.shape[1]]
        return out

    return conv_rows(conv_rows(arr).T).T


def bilinear_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear upsampling with edge clamping (grid cell centers aligned)."""
    arr = np.asarray(arr, dtype=float)
    in_h, in_w = arr.shape
    if in_h == 1 and in_w == 1:
        return np.full((out_h, out_w), arr[0, 0])
    ys = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0, in_h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0, in_w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = arr[np.ix_(y0, x0)] * (1 - wx) + arr[np.ix_(y0, x1)] * wx
    bot = arr[np.ix_(y1, x0)] * (1 - wx) + arr[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def _band_means(arr: np.ndarray, n_bands: int, axis: int) -> np.ndarray:
    other = 1 - axis
    profile = arr.mean(axis=other)
    return np.array([chunk.mean() for chunk in np.array_split(profile, n_bands)])


def extract_image_features(img: GrayImage, block: int = 8) -> np.ndarray:
    """Deterministic image embedding: block means + band profiles + globals.

    For a 64x64 image with block=8: 8x8 block means (64), 16 row bands,
    16 column bands, 4 global statistics -> 100 dims.
    """
    arr = img.as_array()
    h, w = arr.shape
    bh, bw = max(1, h // block), max(1, w // block)
    blocks = arr[: bh * block, : bw * block].reshape(block, bh, block, bw).mean(axis=(1, 3))
    row_bands = _band_means(arr, 16, axis=0)
    col_bands = _band_means(arr, 16, axis=1)
    ink = arr > 0.5
    globals_ = np.array(
        [
            arr.mean(),
            arr.std(),
            float(ink.mean()),
            float(np.abs(np.diff(arr, axis=1)).mean() + np.abs(np.diff(arr, axis=0)).mean()),
        ]
    )
    return np.concatenate([blocks.reshape(-1), row_bands, col_bands, globals_])


def image_feature_names(block: int = 8) -> list:
    """Stable identifiers matching extract_image_features ordering."""
    names = [f"blk_{r}_{c}" for r in range(block) for c in range(block)]
    names += [f"rowband_{i}" for i in range(16)]
    names += [f"colband_{i}" for i in range(16)]
    names += ["px_mean", "px_std", "ink_frac", "edge_energy"]
    return names
