"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    magic        8 bytes   b"PSSLCKPT"
    version      u32
    header_len   u32
    header       header_len bytes of UTF-8 JSON
    data         concatenated raw little-endian arrays

The header carries the encoder config, label names, seed, training stage
and an array index (name, dtype, shape, offset, nbytes) in state-dict order.
``document/FORMATS.md`` spells out the same layout for other readers.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from filelock import FileLock
from pydantic import ValidationError
from torch import nn

from app.config import EncoderConfig
from app.errors import CheckpointError
from app.models import TrainingStage
from app.network.models import EmotionModel, PretextModel

log = logging.getLogger(__name__)

MAGIC = b"PSSLCKPT"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sII")


@dataclass
class Checkpoint:
    arrays: dict[str, np.ndarray]
    encoder_config: EncoderConfig
    n_labels: int                   # head width: transform labels (pretrained) or classes (finetuned)
    seed: int
    stage: TrainingStage = TrainingStage.PRETRAINED
    label_names: list[str] = field(default_factory=list)

    @classmethod
    def from_model(
        cls,
        model: nn.Module,
        encoder_config: EncoderConfig,
        n_labels: int,
        seed: int,
        stage: TrainingStage = TrainingStage.PRETRAINED,
        label_names: list[str] | None = None,
    ) -> "Checkpoint":
        arrays = {name: t.detach().cpu().numpy().copy() for name, t in model.state_dict().items()}
        return cls(arrays, encoder_config, n_labels, seed, stage, list(label_names or []))


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    index = []
    chunks: list[bytes] = []
    offset = 0
    for name, arr in ckpt.arrays.items():
        le = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        raw = le.tobytes()
        index.append({
            "name": name,
            "dtype": le.dtype.str,
            "shape": list(le.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)

    header = json.dumps({
        "encoder_config": ckpt.encoder_config.model_dump(mode="json"),
        "n_labels": ckpt.n_labels,
        "label_names": ckpt.label_names,
        "seed": ckpt.seed,
        "stage": ckpt.stage.value,
        "data_bytes": offset,
        "arrays": index,
    }, sort_keys=True).encode("utf-8")

    tmp = path.with_name(path.name + ".tmp")
    with FileLock(str(path) + ".lock"):
        with open(tmp, "wb") as f:
            f.write(_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header)))
            f.write(header)
            for raw in chunks:
                f.write(raw)
        os.replace(tmp, path)
    log.info("Saved %s checkpoint (%d arrays, %d bytes) to %s", ckpt.stage.value, len(index), offset, path)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint; nothing is returned unless the whole file validates."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    blob = path.read_bytes()

    if len(blob) < _PREAMBLE.size:
        raise CheckpointError(f"{path}: truncated preamble ({len(blob)} bytes)")
    magic, version, header_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})")
    data_start = _PREAMBLE.size + header_len
    if len(blob) < data_start:
        raise CheckpointError(f"{path}: truncated header")

    try:
        header = json.loads(blob[_PREAMBLE.size:data_start].decode("utf-8"))
        cfg = EncoderConfig(**header["encoder_config"])
        stage = TrainingStage(header["stage"])
    except (ValueError, KeyError, ValidationError) as e:
        raise CheckpointError(f"{path}: unreadable header: {e}") from e

    data = blob[data_start:]
    if len(data) != header["data_bytes"]:
        raise CheckpointError(
            f"{path}: data section is {len(data)} bytes, header declares {header['data_bytes']} (truncated file?)"
        )

    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(data):
            raise CheckpointError(f"{path}: array '{entry['name']}' runs past end of file", entry["name"])
        arr = np.frombuffer(data, dtype=np.dtype(entry["dtype"]), count=nbytes // np.dtype(entry["dtype"]).itemsize,
                            offset=start)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()

    ckpt = Checkpoint(arrays, cfg, int(header["n_labels"]), int(header["seed"]), stage, header.get("label_names", []))
    _check_against_config(ckpt, path)
    return ckpt


def _check_against_config(ckpt: Checkpoint, path: Path) -> None:
    if ckpt.stage == TrainingStage.PRETRAINED:
        expected = PretextModel(ckpt.encoder_config, ckpt.n_labels).state_dict()
    else:
        expected = EmotionModel(ckpt.encoder_config, ckpt.n_labels).state_dict()
    for name, tensor in expected.items():
        arr = ckpt.arrays.get(name)
        if arr is None:
            raise CheckpointError(f"{path}: missing array '{name}'", name)
        if tuple(arr.shape) != tuple(tensor.shape):
            raise CheckpointError(
                f"{path}: array '{name}' has shape {list(arr.shape)}, embedded config implies {list(tensor.shape)}",
                name,
            )


def restore_into(model: nn.Module, ckpt: Checkpoint, prefix: str = "") -> list[str]:
    """Copy checkpoint arrays whose names start with ``prefix`` into ``model``.

    Returns the restored names. Raises CheckpointError naming the first
    array that is missing or has a different shape.
    """
    target = model.state_dict()
    wanted = [n for n in target if n.startswith(prefix)]
    update: dict[str, torch.Tensor] = {}
    for name in wanted:
        if name not in ckpt.arrays:
            raise CheckpointError(f"checkpoint has no array '{name}'", name)
        arr = ckpt.arrays[name]
        if tuple(arr.shape) != tuple(target[name].shape):
            raise CheckpointError(
                f"shape mismatch for '{name}': checkpoint {list(arr.shape)} vs model {list(target[name].shape)}",
                name,
            )
        update[name] = torch.from_numpy(arr.copy()).to(target[name].dtype)
    model.load_state_dict(update, strict=False)
    return wanted
