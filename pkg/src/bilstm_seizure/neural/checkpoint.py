"""Binary model checkpoints.

Layout, little-endian::

    magic b"BLSM" | version u16 = 1
    input_dim, hidden_size, num_bilstm_layers, num_classes, seq_len   (u32 each)
    parameters as f64, in order:
        for each layer, forward then backward direction:
            W_f W_i W_o W_c U_f U_i U_o U_c b_f b_i b_o b_c   (row-major)
        dense W (num_classes x 2H), dense b (num_classes)
    n_norm u32, then n_norm f64 feature means, then n_norm f64 feature scales

``n_norm`` is 0 when no feature normalisation was used.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..features import NormalizationStats
from .model import Model, ModelConfig

MAGIC = b"BLSM"
VERSION = 1
_HEAD = struct.Struct("<4sH5I")
_U32 = struct.Struct("<I")


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    model: Model, path: str | os.PathLike, norm: NormalizationStats | None = None
) -> None:
    parts = [_HEAD.pack(MAGIC, VERSION, *model.config.as_tuple())]
    parts.extend(np.ascontiguousarray(t, dtype="<f8").tobytes() for t in model.tensors())
    if norm is None:
        parts.append(_U32.pack(0))
    else:
        mean = np.ascontiguousarray(norm.mean, dtype="<f8")
        scale = np.ascontiguousarray(norm.scale, dtype="<f8")
        if mean.shape != scale.shape or mean.ndim != 1:
            raise ValueError("normalisation mean and scale must be equal-length vectors")
        parts += [_U32.pack(mean.size), mean.tobytes(), scale.tobytes()]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path: str | os.PathLike) -> tuple[Model, NormalizationStats | None]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEAD.size or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint")
    _, version, *fields = _HEAD.unpack_from(data)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        config = ModelConfig(*fields)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    template = Model.zeros(config)
    off = _HEAD.size
    tensors = []
    for t in template.tensors():
        nbytes = t.size * 8
        if off + nbytes > len(data):
            raise CheckpointError(f"{path}: truncated parameters")
        tensors.append(np.frombuffer(data, dtype="<f8", count=t.size, offset=off).reshape(t.shape).astype(np.float64))
        off += nbytes
    if off + 4 > len(data):
        raise CheckpointError(f"{path}: missing normalisation block")
    (n_norm,) = _U32.unpack_from(data, off)
    off += 4
    if off + 16 * n_norm != len(data):
        raise CheckpointError(f"{path}: normalisation block has the wrong size")
    norm = None
    if n_norm:
        mean = np.frombuffer(data, dtype="<f8", count=n_norm, offset=off).astype(np.float64)
        scale = np.frombuffer(data, dtype="<f8", count=n_norm, offset=off + 8 * n_norm).astype(np.float64)
        norm = NormalizationStats(mean, scale)
    return template.with_tensors(tensors), norm
