"""Binary checkpoints: versioned header, JSON metadata and the raw density vector.

Layout (little endian)::

    8 bytes  magic b"VEMTOPO\\0"
    uint32   format version
    uint32   metadata length L
    L bytes  UTF-8 JSON: mesh reference, problem definition, iteration
    uint64   number of densities n
    n float64 raw design densities
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vemtopo.errors import VemTopoError

MAGIC = b"VEMTOPO\0"
VERSION = 1


@dataclass
class Checkpoint:
    mesh_ref: str  # path of the mesh text file, relative to the checkpoint
    raw: np.ndarray
    problem: dict = field(default_factory=dict)
    iteration: int = 0

    def mesh_path(self, checkpoint_path) -> Path:
        ref = Path(self.mesh_ref)
        return ref if ref.is_absolute() else Path(checkpoint_path).parent / ref


def write_checkpoint(ckpt: Checkpoint, path) -> None:
    meta = json.dumps({"mesh": ckpt.mesh_ref, "problem": ckpt.problem,
                       "iteration": int(ckpt.iteration)}, sort_keys=True).encode()
    raw = np.ascontiguousarray(ckpt.raw, dtype="<f8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<Q", raw.size))
        fh.write(raw.tobytes())


def read_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise VemTopoError(f"{path}: not a vemtopo checkpoint")
    version, lmeta = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise VemTopoError(f"{path}: unsupported checkpoint version {version}")
    pos = 16
    meta = json.loads(data[pos:pos + lmeta].decode())
    pos += lmeta
    (n,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) != pos + 8 * n:
        raise VemTopoError(f"{path}: truncated checkpoint")
    raw = np.frombuffer(data, dtype="<f8", count=n, offset=pos).astype(float)
    return Checkpoint(meta["mesh"], raw, meta.get("problem", {}), int(meta.get("iteration", 0)))
