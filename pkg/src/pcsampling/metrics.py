"""Peak signal-to-noise ratios against 8-bit full scale."""

from __future__ import annotations

import math

import numpy as np

from .pc_io import PointCloud, rgb_to_yuv

__all__ = ["PEAK", "psnr", "psnr_rgb", "psnr_y", "format_db"]

PEAK = 255.0


def psnr(f, fhat, peak: float = PEAK) -> float:
    """``-10 log10(|f - fhat|^2 / (peak^2 N))``; ``inf`` when the signals agree.

    Multi-channel input is averaged over all entries, so an (N, 3) array gives
    the joint RGB figure with ``3N`` in the denominator.
    """
    f = np.asarray(f, dtype=np.float64)
    fhat = np.asarray(fhat, dtype=np.float64)
    if f.shape != fhat.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {fhat.shape}")
    if f.size == 0:
        raise ValueError("empty signal")
    err = float(np.sum((f - fhat) ** 2))
    if err == 0.0:
        return math.inf
    return -10.0 * math.log10(err / (peak**2 * f.size))


def _colors(x):
    if isinstance(x, PointCloud):
        if x.colors is None:
            raise ValueError("point cloud has no colors")
        return x.colors
    return np.asarray(x)


def psnr_rgb(original, reconstructed) -> float:
    a, b = _colors(original), _colors(reconstructed)
    if a.shape != b.shape:
        raise ValueError(f"point count mismatch: {len(a)} vs {len(b)}")
    return psnr(a, b)


def psnr_y(original, reconstructed) -> float:
    """Luminance PSNR of two colored clouds (or (N, 3) RGB arrays)."""
    a, b = _colors(original), _colors(reconstructed)
    if a.shape != b.shape:
        raise ValueError(f"point count mismatch: {len(a)} vs {len(b)}")
    return psnr(rgb_to_yuv(a)[0], rgb_to_yuv(b)[0])


def format_db(value: float):
    """JSON-friendly value: the string ``"inf"`` for identical signals."""
    return "inf" if math.isinf(value) else round(float(value), 6)
