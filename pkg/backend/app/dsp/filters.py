"""Per-stream filters — low-pass, z-score and downsampling.

All functions are pure: they never modify their input and return a new
float64 array.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from app.errors import ConfigError, InputError

ZSCORE_EPS = 1e-8


def butterworth_lowpass(samples: np.ndarray, fs: float, cutoff: float, order: int = 4) -> np.ndarray:
    """Zero-phase (forward-backward) Butterworth low-pass.

    Raises:
        ConfigError: cutoff outside (0, fs/2) or order < 1.
        InputError: fewer than 3·order + 1 samples.
    """
    x = np.asarray(samples, dtype=np.float64)
    nyquist = 0.5 * fs
    if not 0.0 < cutoff < nyquist:
        raise ConfigError(f"cutoff {cutoff} Hz must lie in (0, {nyquist}) Hz for fs={fs}")
    if order < 1:
        raise ConfigError(f"filter order must be >= 1, got {order}")
    if len(x) <= 3 * order:
        raise InputError(f"sequence of length {len(x)} is too short for an order-{order} filter (need > {3 * order})")

    sos = signal.butter(order, cutoff, btype="low", fs=fs, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), len(x) - 1)
    return signal.sosfiltfilt(sos, x, padlen=padlen)


def zscore_normalize(samples: np.ndarray) -> np.ndarray:
    """Zero mean, unit population std. Near-constant input maps to all zeros."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise InputError("cannot normalise an empty sequence")
    std = x.std()
    if std < ZSCORE_EPS:
        return np.zeros_like(x)
    return (x - x.mean()) / std


def resampled_length(n: int, src_fs: float, dst_fs: float) -> int:
    return int(np.floor(n * dst_fs / src_fs + 0.5))


def resample_to(samples: np.ndarray, src_fs: float, dst_fs: float) -> np.ndarray:
    """Downsample by linear interpolation onto the target time grid.

    The caller is expected to have low-pass filtered the stream already.
    """
    x = np.asarray(samples, dtype=np.float64)
    if dst_fs <= 0 or src_fs <= 0:
        raise ConfigError("sampling rates must be > 0")
    if dst_fs > src_fs:
        raise ConfigError(f"upsampling ({src_fs} Hz -> {dst_fs} Hz) is not supported")
    if dst_fs == src_fs:
        return x.copy()

    n_out = resampled_length(len(x), src_fs, dst_fs)
    t_src = np.arange(len(x)) / src_fs
    t_dst = np.arange(n_out) / dst_fs
    return np.interp(t_dst, t_src, x)


def resize_linear(x: np.ndarray, length: int) -> np.ndarray:
    """Linearly resample ``x`` onto ``length`` evenly spaced points spanning its extent."""
    x = np.asarray(x, dtype=np.float64)
    if length == len(x):
        return x.copy()
    if len(x) == 1:
        return np.full(length, x[0])
    grid = np.linspace(0.0, len(x) - 1, length)
    return np.interp(grid, np.arange(len(x)), x)
