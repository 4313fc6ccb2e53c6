"""Transformation Harness — tests the five signal transforms and the pretext dataset builder.

Run:  cd backend && python -m pytest ../tests/harness/test_transforms.py -v
"""

import numpy as np
import pytest

from app.augment.pretext import build_pretext_dataset
from app.augment.transforms import (
    TRANSFORMS,
    add_gaussian_noise,
    apply_transform,
    crop_resize,
    magnitude_warp,
    permute,
    time_warp,
)
from app.config import TransformConfig
from app.errors import InputError
from app.models import PretextSet, Window


def _signal(length: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    return np.sin(2 * np.pi * t / 37.0) + 0.5 * rng.standard_normal(length)


def _windows(n: int = 4, length: int = 32) -> list[Window]:
    rng = np.random.default_rng(5)
    return [
        Window(values=rng.standard_normal((length, 3)), subject_id=f"S{i % 2 + 1:02d}", t_start=float(i), window_id=i)
        for i in range(n)
    ]


# ═══════════════════════════════════════════════════════════════════════════
# 1. Transforms — shape, identity settings, characteristic properties
# ═══════════════════════════════════════════════════════════════════════════

class TestTransformShapes:
    """Every transform keeps the sequence length and is reproducible from its generator."""

    cfg = TransformConfig()

    @pytest.mark.parametrize("name", sorted(TRANSFORMS))
    @pytest.mark.parametrize("length", [8, 240, 1024])
    def test_length_preserved(self, name: str, length: int):
        y = apply_transform(name, _signal(length), self.cfg, np.random.default_rng(1))
        assert y.shape == (length,)
        assert np.all(np.isfinite(y))

    @pytest.mark.parametrize("name", sorted(TRANSFORMS))
    def test_same_generator_same_output(self, name: str):
        x = _signal(240)
        a = apply_transform(name, x, self.cfg, np.random.default_rng(9))
        b = apply_transform(name, x, self.cfg, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_original_is_copy(self):
        x = _signal(16)
        y = apply_transform("original", x, self.cfg, np.random.default_rng(0))
        np.testing.assert_array_equal(x, y)
        assert y is not x


class TestIdentitySettings:

    x = _signal(240)

    def test_noise_infinite_snr(self):
        np.testing.assert_array_equal(add_gaussian_noise(self.x, np.inf, np.random.default_rng(0)), self.x)

    def test_magnitude_warp_zero_sigma(self):
        np.testing.assert_array_equal(magnitude_warp(self.x, 0.0, 4, np.random.default_rng(0)), self.x)

    def test_permute_one_segment(self):
        np.testing.assert_array_equal(permute(self.x, 1, np.random.default_rng(0)), self.x)

    def test_time_warp_unit_stretch(self):
        np.testing.assert_allclose(time_warp(self.x, 4, 1.0, np.random.default_rng(0)), self.x)

    def test_crop_full_ratio(self):
        np.testing.assert_array_equal(crop_resize(self.x, 1.0, np.random.default_rng(0)), self.x)


class TestTransformProperties:

    def test_noise_snr(self):
        x = _signal(20000)
        y = add_gaussian_noise(x, 15.0, np.random.default_rng(3))
        snr = 10 * np.log10(np.mean(x**2) / np.mean((y - x) ** 2))
        assert abs(snr - 15.0) < 1.0, f"measured SNR {snr:.2f} dB"

    def test_noise_needs_signal_power(self):
        with pytest.raises(InputError):
            add_gaussian_noise(np.zeros(10), 15.0, np.random.default_rng(0))

    @pytest.mark.parametrize("segments", [2, 5, 9, 500])
    def test_permutation_keeps_values(self, segments: int):
        x = _signal(240)
        y = permute(x, segments, np.random.default_rng(4))
        np.testing.assert_array_equal(np.sort(y), np.sort(x))
        assert not np.array_equal(y, x)

    def test_magnitude_warp_is_smooth_scaling(self):
        x = np.ones(240)
        y = magnitude_warp(x, 0.1, 4, np.random.default_rng(2))
        assert not np.allclose(y, x)
        assert np.max(np.abs(np.diff(y))) < 0.1

    def test_magnitude_warp_needs_two_knots(self):
        with pytest.raises(InputError):
            magnitude_warp(_signal(20), 0.1, 1, np.random.default_rng(0))

    def test_crop_stays_within_range(self):
        x = _signal(240)
        y = crop_resize(x, 0.2, np.random.default_rng(6))
        assert y.min() >= x.min() and y.max() <= x.max()

    def test_crop_too_short(self):
        with pytest.raises(InputError):
            crop_resize(_signal(4), 0.2, np.random.default_rng(0))

    def test_time_warp_changes_signal(self):
        x = _signal(240)
        y = time_warp(x, 4, 1.05, np.random.default_rng(8))
        assert y[0] == pytest.approx(x[0])
        assert not np.allclose(y, x)


# ═══════════════════════════════════════════════════════════════════════════
# 2. Pretext dataset — label space, determinism, skipping
# ═══════════════════════════════════════════════════════════════════════════

class TestPretextBuilder:

    cfg = TransformConfig()

    def test_one_sample_per_label(self):
        samples = build_pretext_dataset(_windows(), self.cfg, seed=0)
        assert len(samples) == 4 * 6
        for j, s in enumerate(samples[:6]):
            assert s.transform_labels == (j, j, j)
            assert s.source_window_id == 0

    def test_original_sample_is_the_window(self):
        windows = _windows()
        samples = build_pretext_dataset(windows, self.cfg, seed=0)
        np.testing.assert_array_equal(samples[0].values, windows[0].values)

    def test_jobs_do_not_change_samples(self):
        serial = build_pretext_dataset(_windows(), self.cfg, seed=11, jobs=1)
        parallel = build_pretext_dataset(_windows(), self.cfg, seed=11, jobs=3)
        assert len(serial) == len(parallel)
        for a, b in zip(serial, parallel):
            assert a.transform_labels == b.transform_labels
            np.testing.assert_array_equal(a.values, b.values)

    def test_different_seed_different_samples(self):
        a = build_pretext_dataset(_windows(), self.cfg, seed=1)
        b = build_pretext_dataset(_windows(), self.cfg, seed=2)
        assert not np.array_equal(a[1].values, b[1].values)

    def test_zero_power_window_skipped(self):
        windows = _windows()
        windows[1] = Window(values=np.zeros((32, 3)), subject_id="S02", t_start=1.0, window_id=1)
        samples = build_pretext_dataset(windows, self.cfg, seed=0)
        assert len(samples) == 3 * 6
        assert 1 not in {s.source_window_id for s in samples}

    def test_zero_power_kept_without_noise(self):
        cfg = TransformConfig(enabled=("permutation",))
        windows = [Window(values=np.zeros((32, 3)), subject_id="S01", t_start=0.0, window_id=0)]
        assert len(build_pretext_dataset(windows, cfg, seed=0)) == 2

    def test_subset_label_space(self):
        cfg = TransformConfig(enabled=("noise",))
        samples = build_pretext_dataset(_windows(), cfg, seed=0)
        pset = PretextSet.from_samples(samples, cfg.label_names)
        assert pset.label_names == ["original", "noise"]
        assert set(np.unique(pset.labels).tolist()) == {0, 1}

    def test_label_names_follow_canonical_order(self):
        cfg = TransformConfig(enabled=("crop", "noise"))
        assert cfg.label_names == ["original", "noise", "crop"]

    def test_independent_labels_are_balanced(self):
        cfg = TransformConfig(independent_per_modality=True)
        samples = build_pretext_dataset(_windows(n=2), cfg, seed=0)
        for wid in (0, 1):
            table = np.array([s.transform_labels for s in samples if s.source_window_id == wid])
            for m in range(3):
                assert sorted(table[:, m].tolist()) == list(range(6))

    def test_empty_input_rejected(self):
        with pytest.raises(InputError):
            build_pretext_dataset([], self.cfg, seed=0)
