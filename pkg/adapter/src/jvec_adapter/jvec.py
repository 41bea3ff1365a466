"""JVEC serialization.

Layout, little-endian throughout: magic b"JVEC", u32 version=1, u32 n,
u32 d, then n*d float32 values row-major, then n id records of u16
byte-length followed by UTF-8 bytes. Files are written to a temp path
and renamed into place so readers never see a partial file.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"JVEC"
VERSION = 1


def write_jvec(path: str | Path, ids: Sequence[str], vectors: np.ndarray) -> None:
    vectors = np.asarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError("vectors must be 2-D")
    if len(ids) != vectors.shape[0]:
        raise ValueError(f"{len(ids)} ids for {vectors.shape[0]} rows")
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    try:
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<III", VERSION, vectors.shape[0], vectors.shape[1]))
            fh.write(np.ascontiguousarray(vectors).tobytes())
            for vid in ids:
                raw = vid.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise ValueError(f"id exceeds JVEC limit: {vid[:40]}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def read_jvec(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Minimal reader for self-checks; the engine has the canonical one."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    version, n, d = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    vectors = np.frombuffer(data, dtype="<f4", count=n * d, offset=16).reshape(n, d)
    ids = []
    offset = 16 + n * d * 4
    for _ in range(n):
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        ids.append(data[offset:offset + length].decode("utf-8"))
        offset += length
    return ids, vectors.copy()
