"""Dataset I/O Harness — tests manifests, CSV loading, the synthetic corpus, stores, checkpoints and reports.

Run:  cd backend && python -m pytest ../tests/harness/test_datasets.py -v
"""

import pickle
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml

from app.config import PreprocessConfig
from app.datasets.adapters import bin_continuous, convert_wesad, scale_thresholds
from app.datasets.checkpoint import Checkpoint, load_checkpoint, restore_into, save_checkpoint
from app.datasets.loader import load_dataset
from app.datasets.manifest import DatasetManifest, TaskDefinition, load_manifest, manifest_hash
from app.datasets.pretext_store import load_pretext_dataset, save_pretext_dataset
from app.datasets.reports import summary_table, write_report
from app.datasets.stores import load_windows, save_windows
from app.datasets.synthetic import frequency_threshold_predict, generate_synthetic_corpus, write_corpus
from app.dsp.pipeline import preprocess_dataset
from app.dsp.windowing import label_windows
from app.errors import CheckpointError, ConfigError, InputError
from app.models import FoldResult, MetricsReport, Modality, PretextSet, TrainingStage, Window
from app.network.models import build_emotion_model, build_pretext_model

REPO_ROOT = Path(__file__).resolve().parents[2]


# ═══════════════════════════════════════════════════════════════════════════
# 1. Manifests
# ═══════════════════════════════════════════════════════════════════════════

class TestManifest:

    def test_load_synthetic(self, synthetic_manifest):
        manifest = load_manifest(synthetic_manifest)
        assert manifest.dataset_id == "synthetic"
        assert [s.id for s in manifest.subjects] == ["S01", "S02", "S03"]
        assert manifest.task("class2").n_classes == 2
        assert manifest.resolve(manifest.subjects[0].files["EDA"]).exists()

    @pytest.mark.parametrize("name", ["wesad.yaml", "case.yaml", "kemocon.yaml"])
    def test_templates_parse(self, name: str):
        manifest = load_manifest(REPO_ROOT / "manifests" / name)
        assert manifest.tasks
        assert manifest.preset == manifest.dataset_id

    def test_unknown_task(self, synthetic_manifest):
        with pytest.raises(ConfigError):
            load_manifest(synthetic_manifest).task("valence3")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_manifest(tmp_path / "nope.yaml")

    @pytest.mark.parametrize("content", [
        "dataset_id: [unclosed",
        "- just\n- a list\n",
        "dataset_id: x\nunknown_key: 1\n",
        "format_version: 2\ndataset_id: x\n",
    ])
    def test_invalid_content(self, tmp_path, content: str):
        path = tmp_path / "manifest.yaml"
        path.write_text(content)
        with pytest.raises(ConfigError):
            load_manifest(path)

    def test_task_targets_checked(self):
        with pytest.raises(ValueError):
            TaskDefinition(id="t", n_classes=2, label_map={1: 0, 2: 2})

    def test_task_mapped_and_ignored(self):
        with pytest.raises(ValueError):
            TaskDefinition(id="t", n_classes=2, label_map={1: 0, 2: 1}, ignore=[2])

    def test_hash_tracks_bytes(self, tmp_path):
        a, b = tmp_path / "a.yaml", tmp_path / "b.yaml"
        a.write_text("dataset_id: x\n")
        b.write_text("dataset_id: y\n")
        assert manifest_hash(a) != manifest_hash(b)
        assert len(manifest_hash(a)) == 64


# ═══════════════════════════════════════════════════════════════════════════
# 2. Loader — CSV parsing and validation
# ═══════════════════════════════════════════════════════════════════════════

class TestLoader:

    def test_load_synthetic(self, synthetic_manifest):
        recordings = load_dataset(synthetic_manifest)
        assert [r.subject_id for r in recordings] == ["S01", "S02", "S03"]
        rec = recordings[0]
        assert rec.streams[Modality.BVP].fs == 64.0
        assert len(rec.streams[Modality.EDA].samples) == 360 * 4
        assert set(np.unique(rec.labels["class"][:, 1]).tolist()) == {0.0, 1.0}

    def test_jobs_do_not_change_output(self, synthetic_manifest):
        serial = load_dataset(synthetic_manifest, jobs=1)
        parallel = load_dataset(synthetic_manifest, jobs=3)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.streams[Modality.TEMP].samples, b.streams[Modality.TEMP].samples)

    def test_rate_inferred_without_native_fs(self, synthetic_manifest):
        data = yaml.safe_load(synthetic_manifest.read_text())
        data.pop("native_fs")
        synthetic_manifest.write_text(yaml.safe_dump(data))
        recordings = load_dataset(synthetic_manifest)
        assert recordings[0].streams[Modality.BVP].fs == pytest.approx(64.0)

    def test_non_numeric_value_reports_line(self, synthetic_manifest):
        path = synthetic_manifest.parent / "S01" / "EDA.csv"
        lines = path.read_text().splitlines()
        lines[3] = "0.500000,abc"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(InputError, match=r"EDA\.csv:4"):
            load_dataset(synthetic_manifest)

    def test_wrong_column_count(self, synthetic_manifest):
        path = synthetic_manifest.parent / "S02" / "TEMP.csv"
        path.write_text("t_sec,value,extra\n0,1,2\n")
        with pytest.raises(InputError):
            load_dataset(synthetic_manifest)

    def test_unmapped_label(self, synthetic_manifest):
        path = synthetic_manifest.parent / "S01" / "labels.csv"
        frame = pd.read_csv(path)
        frame.loc[5, "label"] = 9
        frame.to_csv(path, index=False)
        with pytest.raises(InputError, match="no mapping"):
            load_dataset(synthetic_manifest)

    def test_missing_modality(self, synthetic_manifest):
        data = yaml.safe_load(synthetic_manifest.read_text())
        del data["subjects"][1]["files"]["TEMP"]
        synthetic_manifest.write_text(yaml.safe_dump(data))
        with pytest.raises(InputError, match="TEMP"):
            load_dataset(synthetic_manifest)

    def test_empty_subject_list(self, tmp_path):
        manifest = DatasetManifest(dataset_id="empty").with_root(tmp_path)
        assert load_dataset(manifest) == []
        assert preprocess_dataset([], PreprocessConfig()) == []


# ═══════════════════════════════════════════════════════════════════════════
# 3. Synthetic corpus
# ═══════════════════════════════════════════════════════════════════════════

class TestSynthetic:

    def test_same_seed_same_bytes(self, tmp_path):
        paths = []
        for name in ("a", "b"):
            recordings, manifest = generate_synthetic_corpus(n_subjects=2, seconds_per_subject=200, seed=4)
            paths.append(write_corpus(recordings, manifest, tmp_path / name).parent)
        files_a = sorted(p.relative_to(paths[0]) for p in paths[0].rglob("*.csv"))
        files_b = sorted(p.relative_to(paths[1]) for p in paths[1].rglob("*.csv"))
        assert files_a == files_b and len(files_a) == 2 * 4
        for rel in files_a:
            assert (paths[0] / rel).read_bytes() == (paths[1] / rel).read_bytes()

    def test_different_seed_different_signal(self):
        a, _ = generate_synthetic_corpus(n_subjects=2, seconds_per_subject=200, seed=1)
        b, _ = generate_synthetic_corpus(n_subjects=2, seconds_per_subject=200, seed=2)
        assert not np.array_equal(a[0].streams[Modality.EDA].samples, b[0].streams[Modality.EDA].samples)

    def test_needs_two_subjects(self):
        with pytest.raises(InputError):
            generate_synthetic_corpus(n_subjects=1)

    def test_frequency_oracle(self):
        recordings, _ = generate_synthetic_corpus(n_subjects=2, seconds_per_subject=900, n_classes=2, seed=0)
        cfg = PreprocessConfig(target_fs=4.0, window_s=60.0, overlap_frac=0.5)
        windows = label_windows(preprocess_dataset(recordings, cfg), {0: 0, 1: 1})
        # keep windows that lie inside one 180 s label segment
        pure = [w for w in windows if w.t_start % 180.0 <= 120.0]
        preds = frequency_threshold_predict(pure, fs=4.0, n_classes=2)
        accuracy = np.mean(preds == np.array([w.label for w in pure]))
        assert accuracy > 0.9, f"oracle accuracy {accuracy:.3f}"


# ═══════════════════════════════════════════════════════════════════════════
# 4. Stores — windows and the pretext dataset
# ═══════════════════════════════════════════════════════════════════════════

class TestStores:

    def _windows(self) -> list[Window]:
        rng = np.random.default_rng(0)
        return [
            Window(
                values=rng.standard_normal((8, 3)),
                subject_id=f"S{i % 2 + 1:02d}",
                t_start=1.5 * i,
                label=None if i == 2 else i % 2,
                raw_labels={"class": None if i == 2 else i % 2 + 1},
                window_id=i,
            )
            for i in range(4)
        ]

    def test_window_store_round_trip(self, tmp_path):
        windows = self._windows()
        loaded = load_windows(save_windows(windows, tmp_path / "windows.npz"))
        assert len(loaded) == 4
        for a, b in zip(windows, loaded):
            np.testing.assert_array_equal(a.values, b.values)
            assert (a.subject_id, a.t_start, a.label, a.raw_labels, a.window_id) == (
                b.subject_id, b.t_start, b.label, b.raw_labels, b.window_id
            )

    def test_window_store_missing(self, tmp_path):
        with pytest.raises(InputError):
            load_windows(tmp_path / "none.npz")

    def _pset(self) -> PretextSet:
        rng = np.random.default_rng(1)
        return PretextSet(
            values=rng.standard_normal((5, 8, 3)),
            labels=rng.integers(0, 6, (5, 3)),
            window_ids=np.array([0, 0, 1, 1, 2]),
            subject_ids=np.array(["S01", "S01", "S02", "S02", "S03"], dtype=object),
            label_names=["original", "noise", "magnitude_warp", "permutation", "time_warp", "crop"],
        )

    def test_pretext_store_round_trip(self, tmp_path):
        pset = self._pset()
        loaded = load_pretext_dataset(save_pretext_dataset(pset, tmp_path / "pretext", seed=3))
        np.testing.assert_allclose(loaded.values, pset.values, atol=1e-6)
        np.testing.assert_array_equal(loaded.labels, pset.labels)
        np.testing.assert_array_equal(loaded.window_ids, pset.window_ids)
        assert loaded.subject_ids.tolist() == pset.subject_ids.tolist()
        assert loaded.label_names == pset.label_names
        meta = yaml.safe_load((tmp_path / "pretext" / "meta.yaml").read_text())
        assert meta["seed"] == 3 and meta["n_samples"] == 5

    def test_pretext_store_size_checked(self, tmp_path):
        out = save_pretext_dataset(self._pset(), tmp_path / "pretext")
        raw = (out / "samples.bin").read_bytes()
        (out / "samples.bin").write_bytes(raw[:-4])
        with pytest.raises(InputError):
            load_pretext_dataset(out)


# ═══════════════════════════════════════════════════════════════════════════
# 5. Checkpoints
# ═══════════════════════════════════════════════════════════════════════════

class TestCheckpoint:

    def _ckpt(self, cfg) -> Checkpoint:
        model = build_pretext_model(cfg, 6, seed=0)
        return Checkpoint.from_model(model, cfg, 6, 0, TrainingStage.PRETRAINED, label_names=["original"] * 6)

    def test_round_trip(self, tiny_encoder_cfg, tmp_path):
        ckpt = self._ckpt(tiny_encoder_cfg)
        loaded = load_checkpoint(save_checkpoint(ckpt, tmp_path / "p.ckpt"))
        assert loaded.encoder_config == tiny_encoder_cfg
        assert loaded.stage == TrainingStage.PRETRAINED
        assert (loaded.n_labels, loaded.seed, loaded.label_names) == (6, 0, ckpt.label_names)
        assert list(loaded.arrays) == list(ckpt.arrays)
        for name, arr in ckpt.arrays.items():
            np.testing.assert_array_equal(loaded.arrays[name], arr)
            assert loaded.arrays[name].dtype == arr.dtype

    def test_finetuned_round_trip(self, tiny_encoder_cfg, tmp_path):
        model = build_emotion_model(tiny_encoder_cfg, 3, seed=0)
        ckpt = Checkpoint.from_model(model, tiny_encoder_cfg, 3, 0, TrainingStage.FINETUNED)
        loaded = load_checkpoint(save_checkpoint(ckpt, tmp_path / "m.ckpt"))
        assert loaded.stage == TrainingStage.FINETUNED

    def test_truncated(self, tiny_encoder_cfg, tmp_path):
        path = save_checkpoint(self._ckpt(tiny_encoder_cfg), tmp_path / "p.ckpt")
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    @pytest.mark.parametrize("blob", [b"", b"PSSL", b"NOTACKPT" + b"\x00" * 16])
    def test_garbage(self, tmp_path, blob: bytes):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(blob)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "none.ckpt")

    def test_shape_mismatch_named(self, tiny_encoder_cfg, tmp_path):
        ckpt = self._ckpt(tiny_encoder_cfg)
        name = "heads.0.mlp.0.weight"
        ckpt.arrays[name] = np.zeros((3, 3), dtype=np.float32)
        path = save_checkpoint(ckpt, tmp_path / "p.ckpt")
        with pytest.raises(CheckpointError) as exc:
            load_checkpoint(path)
        assert exc.value.array_name == name

    def test_restore_into_mismatch(self, tiny_encoder_cfg):
        ckpt = self._ckpt(tiny_encoder_cfg)
        other = build_emotion_model(tiny_encoder_cfg.model_copy(update={"tcn_filters": 6}), 2, seed=0)
        with pytest.raises(CheckpointError) as exc:
            restore_into(other, ckpt, prefix="encoder.")
        assert exc.value.array_name.startswith("encoder.")

    def test_restore_into_copies_encoder(self, tiny_encoder_cfg):
        ckpt = self._ckpt(tiny_encoder_cfg)
        model = build_emotion_model(tiny_encoder_cfg, 2, seed=7)
        restored = restore_into(model, ckpt, prefix="encoder.")
        state = model.state_dict()
        assert restored and all(n.startswith("encoder.") for n in restored)
        for name in restored:
            np.testing.assert_array_equal(state[name].numpy(), ckpt.arrays[name])


# ═══════════════════════════════════════════════════════════════════════════
# 6. Reports and label binning
# ═══════════════════════════════════════════════════════════════════════════

class TestReports:

    def _report(self) -> MetricsReport:
        folds = [
            FoldResult(subject_id="S01", accuracy=1.0, f1=1.0, n_test=4),
            FoldResult(subject_id="S02", accuracy=0.5, f1=0.25, n_test=4, flags=["single_class_fold"]),
        ]
        return MetricsReport.from_folds(folds, task_id="class2", mode="scratch", seed=0)

    def test_from_folds(self):
        report = self._report()
        assert report.mean_accuracy == 0.75
        assert report.std_accuracy == 0.25
        assert report.mean_f1 == 0.625

    def test_write_report(self, tmp_path):
        yaml_path = write_report(self._report(), tmp_path, "metrics", effective_config={"seed": 0})
        table = pd.read_csv(tmp_path / "metrics.csv")
        assert table["subject_id"].tolist() == ["S01", "S02"]
        assert table["flags"].fillna("").tolist() == ["", "single_class_fold"]
        summary = yaml.safe_load(yaml_path.read_text())
        assert summary["effective_config"] == {"seed": 0}
        assert summary["mean_accuracy"] == 0.75

    def test_summary_table(self):
        table = summary_table([self._report()])
        assert table.loc[0, "task"] == "class2"
        assert table.loc[0, "folds"] == 2


class TestBinning:

    @pytest.mark.parametrize("low,high,n_bins,expected", [
        (1, 9, 2, [5.0]),
        (0.5, 9.5, 3, [3.5, 6.5]),
        (1, 5, 2, [3.0]),
    ])
    def test_thresholds(self, low, high, n_bins, expected):
        assert scale_thresholds(low, high, n_bins) == pytest.approx(expected)

    def test_bin_continuous(self):
        assert bin_continuous(np.array([1.0, 4.9, 5.0, 9.0]), [5.0]).tolist() == [0, 0, 1, 1]
        assert bin_continuous(np.array([0.5, 3.5, 7.0]), [3.5, 6.5]).tolist() == [0, 1, 2]

    def test_non_finite_annotations(self):
        with pytest.raises(InputError):
            bin_continuous(np.array([1.0, np.nan]), [5.0])


# ═══════════════════════════════════════════════════════════════════════════
# 7. WESAD conversion
# ═══════════════════════════════════════════════════════════════════════════

class TestConvertWesad:

    def _write_pickle(self, src: Path, sid: str) -> None:
        rng = np.random.default_rng(0)
        data = {
            "signal": {
                "wrist": {
                    "EDA": rng.random((4 * 40, 1)),
                    "BVP": rng.standard_normal((64 * 40, 1)),
                    "TEMP": 32 + rng.random((4 * 40, 1)),
                    "ACC": rng.standard_normal((32 * 40, 3)),
                }
            },
            "label": np.repeat([1, 2, 3, 0], 700 * 10),
        }
        (src / sid).mkdir(parents=True)
        with open(src / sid / f"{sid}.pkl", "wb") as f:
            pickle.dump(data, f)

    def test_convert_and_load(self, tmp_path):
        for sid in ("S2", "S10"):
            self._write_pickle(tmp_path / "src", sid)
        manifest_path = convert_wesad(tmp_path / "src", tmp_path / "out")
        manifest = load_manifest(manifest_path)
        assert [s.id for s in manifest.subjects] == ["S2", "S10"]
        assert {t.id for t in manifest.tasks} == {"stress2", "emotion3"}
        recordings = load_dataset(manifest)
        labels = recordings[0].labels["class"]
        assert len(labels) == 4 * 40
        assert set(np.unique(labels[:, 1]).tolist()) == {0.0, 1.0, 2.0, 3.0}

    def test_no_pickles(self, tmp_path):
        with pytest.raises(InputError):
            convert_wesad(tmp_path, tmp_path / "out")
