"""Single-file checkpoint container.

Layout::

    FRETS-CHECKPOINT 1\\n
    <header: one line of JSON, keys sorted>\\n
    <parameter blocks: little-endian float64, row-major, in header order>

The header holds the model config, scaler statistics, channel names, the data
settings the model was trained with, a training-log summary and the list of
``{"name", "shape"}`` blocks. Floats in the header are written with ``repr``
precision, so a reload is bit-exact.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from frets.errors import CheckpointError
from frets.model import FreTSParams, ModelConfig, check_params
from frets.training import MinMaxScaler

MAGIC = b"FRETS-CHECKPOINT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    params: FreTSParams
    scaler: MinMaxScaler
    channel_names: list
    data: dict = field(default_factory=dict)
    log_summary: dict = field(default_factory=dict)


def _header(ckpt):
    arrays = ckpt.params.named_arrays()
    return {
        "format_version": FORMAT_VERSION,
        "model_config": ckpt.config.to_dict(),
        "scaler": {"min": ckpt.scaler.min.tolist(), "max": ckpt.scaler.max.tolist()},
        "channel_names": list(ckpt.channel_names),
        "data": ckpt.data,
        "log_summary": ckpt.log_summary,
        "blocks": [{"name": k, "shape": list(a.shape)} for k, a in arrays.items()],
    }


def save_checkpoint(ckpt, path):
    """Write atomically: a failed write never leaves a partial file at ``path``."""
    path = Path(path)
    header = json.dumps(_header(ckpt), sort_keys=True, separators=(",", ":"))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC + b" " + str(FORMAT_VERSION).encode() + b"\n")
            fh.write(header.encode("utf-8") + b"\n")
            for arr in ckpt.params.named_arrays().values():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror or exc}") from None
    first = raw.find(b"\n")
    second = raw.find(b"\n", first + 1)
    if first < 0 or second < 0 or not raw.startswith(MAGIC):
        raise CheckpointError(f"{path} is not a FreTS checkpoint")
    version = raw[len(MAGIC):first].strip()
    if version != str(FORMAT_VERSION).encode():
        raise CheckpointError(f"{path}: unsupported checkpoint version {version.decode()!r}")
    try:
        header = json.loads(raw[first + 1:second].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from None
    body = memoryview(raw)[second + 1:]
    arrays = {}
    offset = 0
    for block in header["blocks"]:
        shape = tuple(block["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = 8 * count
        if offset + nbytes > len(body):
            raise CheckpointError(f"{path}: truncated at block {block['name']}")
        arrays[block["name"]] = (
            np.frombuffer(body[offset:offset + nbytes], dtype="<f8").astype(np.float64).reshape(shape)
        )
        offset += nbytes
    if offset != len(body):
        raise CheckpointError(f"{path}: {len(body) - offset} trailing bytes after last block")
    config = ModelConfig.from_dict(header["model_config"])
    params = FreTSParams.from_arrays(arrays)
    check_params(params, config)
    scaler = MinMaxScaler(
        np.array(header["scaler"]["min"], dtype=np.float64),
        np.array(header["scaler"]["max"], dtype=np.float64),
    )
    return Checkpoint(
        config, params, scaler, header["channel_names"], header.get("data", {}), header.get("log_summary", {})
    )
