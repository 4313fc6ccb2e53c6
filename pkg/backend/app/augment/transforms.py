"""The five signal transformations used as pretext labels.

Each transform maps a 1-D float sequence to a sequence of the same length
and is deterministic given its ``numpy.random.Generator``. Every transform
has an identity setting (snr=inf, sigma=0, n=1, k=1, ratio=1).
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from app.config import TransformConfig
from app.dsp.filters import resize_linear
from app.errors import InputError

Transform = Callable[[np.ndarray, TransformConfig, np.random.Generator], np.ndarray]


def add_gaussian_noise(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Additive white Gaussian noise with power P_sig / 10^(snr/10)."""
    x = np.asarray(x, dtype=np.float64)
    if np.isposinf(snr_db):
        return x.copy()
    p_sig = float(np.mean(x**2))
    if p_sig <= 0.0:
        raise InputError("noise addition needs a signal with non-zero power")
    p_sig_db = 10.0 * np.log10(p_sig)
    noise_var = 10.0 ** ((p_sig_db - snr_db) / 10.0)
    return x + rng.normal(0.0, np.sqrt(noise_var), size=x.shape)


def smooth_curve(length: int, sigma: float, knots: int, rng: np.random.Generator) -> np.ndarray:
    """Cubic spline through ``knots + 2`` evenly spaced values drawn from N(1, sigma²)."""
    xs = np.linspace(0.0, length - 1, knots + 2)
    ys = rng.normal(1.0, sigma, size=knots + 2)
    return CubicSpline(xs, ys)(np.arange(length))


def magnitude_warp(x: np.ndarray, mw_sigma: float, mw_knots: int, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if mw_knots < 2:
        raise InputError("magnitude warping needs at least 2 knots")
    if mw_sigma == 0 or len(x) < 2:
        return x.copy()
    return x * smooth_curve(len(x), mw_sigma, mw_knots, rng)


def permute(x: np.ndarray, perm_segments: int, rng: np.random.Generator) -> np.ndarray:
    """Shuffle contiguous segments into a non-identity order.

    Segment counts above the sequence length are clipped to it.
    """
    x = np.asarray(x, dtype=np.float64)
    n = min(perm_segments, len(x))
    if n <= 1:
        return x.copy()
    segments = np.array_split(x, n)
    identity = np.arange(n)
    order = rng.permutation(n)
    while np.array_equal(order, identity):
        order = rng.permutation(n)
    return np.concatenate([segments[i] for i in order])


def time_warp(x: np.ndarray, tw_segments: int, tw_stretch: float, rng: np.random.Generator) -> np.ndarray:
    """Stretch ceil(n/2) random segments by k, squeeze the rest by 1/k, resize to the input length."""
    x = np.asarray(x, dtype=np.float64)
    if tw_stretch < 1.0:
        raise InputError(f"stretch factor must be >= 1, got {tw_stretch}")
    n = min(tw_segments, len(x))
    if n < 2:
        return x.copy()
    segments = np.array_split(x, n)
    stretched = set(rng.choice(n, size=(n + 1) // 2, replace=False).tolist())
    warped = []
    for i, seg in enumerate(segments):
        factor = tw_stretch if i in stretched else 1.0 / tw_stretch
        warped.append(resize_linear(seg, max(1, int(np.floor(len(seg) * factor + 0.5)))))
    return resize_linear(np.concatenate(warped), len(x))


def crop_resize(x: np.ndarray, crop_ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Pick one contiguous segment of round(ratio·N) samples and resample it back to N."""
    x = np.asarray(x, dtype=np.float64)
    keep = int(np.floor(crop_ratio * len(x) + 0.5))
    if keep < 2:
        raise InputError(f"crop of {keep} samples is too short (ratio {crop_ratio}, length {len(x)})")
    if keep >= len(x):
        return x.copy()
    start = int(rng.integers(0, len(x) - keep + 1))
    return resize_linear(x[start:start + keep], len(x))


# ── Registry ──────────────────────────────────────────────────────────────

TRANSFORMS: dict[str, Transform] = {
    "noise": lambda x, cfg, rng: add_gaussian_noise(x, cfg.snr_db, rng),
    "magnitude_warp": lambda x, cfg, rng: magnitude_warp(x, cfg.mw_sigma, cfg.mw_knots, rng),
    "permutation": lambda x, cfg, rng: permute(x, cfg.perm_segments, rng),
    "time_warp": lambda x, cfg, rng: time_warp(x, cfg.tw_segments, cfg.tw_stretch, rng),
    "crop": lambda x, cfg, rng: crop_resize(x, cfg.crop_ratio, rng),
}


def apply_transform(name: str, x: np.ndarray, cfg: TransformConfig, rng: np.random.Generator) -> np.ndarray:
    if name == "original":
        return np.asarray(x, dtype=np.float64).copy()
    return TRANSFORMS[name](x, cfg, rng)
