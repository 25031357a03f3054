"""Single-file binary checkpoints.

Layout (all integers little-endian):

    bytes 0..3    magic ``EGSL``
    bytes 4..7    format version (u32)
    bytes 8..11   JSON header length (u32)
    header        UTF-8 JSON: experiment config, counters, and an ordered
                  manifest of named arrays as (name, shape) pairs
    payload       the arrays in manifest order, row-major float32

Arrays cover parameters plus optimizer state (``moment/<name>``) and, when a
gradient-accumulation window was open at save time, the pending gradients
(``grad/<name>``), so resuming reproduces the original run bit for bit when
training in float32 (the shipped default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"EGSL"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class CheckpointData:
    config: dict
    arrays: dict[str, np.ndarray]  # float32, manifest order preserved
    step: int
    epoch: int
    images_seen: int
    accum_count: int


def save_checkpoint(
    path: str | Path,
    config: dict,
    arrays: dict[str, np.ndarray],
    step: int,
    epoch: int,
    images_seen: int,
    accum_count: int,
) -> None:
    manifest = [[name, list(arr.shape)] for name, arr in arrays.items()]
    header = json.dumps(
        {
            "config": config,
            "step": step,
            "epoch": epoch,
            "images_seen": images_seen,
            "accum_count": accum_count,
            "arrays": manifest,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint32(len(header)).tobytes())
        fh.write(header)
        for _, arr in arrays.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> CheckpointData:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    version = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header_len = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
    header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    offset = 12 + header_len
    arrays: dict[str, np.ndarray] = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated payload at {name!r}")
        arrays[name] = np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return CheckpointData(
        config=header["config"],
        arrays=arrays,
        step=int(header["step"]),
        epoch=int(header["epoch"]),
        images_seen=int(header["images_seen"]),
        accum_count=int(header["accum_count"]),
    )
