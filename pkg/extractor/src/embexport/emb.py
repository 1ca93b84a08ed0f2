"""Binary embedding container: magic ``EMB1``, little-endian u32 dim,
u64 count, then per entry u16 id-length + UTF-8 id + dim f32 values.

Insertion order of the mapping is the on-disk entry order."""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"EMB1"


def write_emb(entries: dict[str, np.ndarray], dim: int, path) -> None:
    """Atomically write an ordered id -> vector mapping."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", dim, len(entries)))
        for key, vec in entries.items():
            vec = np.asarray(vec, dtype=np.float32)
            if vec.shape != (dim,):
                raise ValueError(f"{key!r}: expected shape ({dim},), got {vec.shape}")
            raw = key.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(vec.astype("<f4", copy=False).tobytes())
    os.replace(tmp, path)


def read_emb(path) -> tuple[int, dict[str, np.ndarray]]:
    """Read a table back; returns (dim, ordered id -> vector mapping)."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not an embedding table")
        dim, count = struct.unpack("<IQ", f.read(12))
        entries: dict[str, np.ndarray] = {}
        for _ in range(count):
            (idlen,) = struct.unpack("<H", f.read(2))
            key = f.read(idlen).decode("utf-8")
            entries[key] = np.frombuffer(f.read(4 * dim), dtype="<f4").copy()
        return dim, entries
