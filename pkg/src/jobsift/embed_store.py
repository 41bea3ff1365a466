"""Id-addressed dense vectors: file I/O, cosine search, set augmentation.

Vectors are produced outside the engine (see the adapter package) and
arrive in the JVEC binary format. Rows are unit-normalized on load, and
all search is exact brute force; label sets here are small enough that
approximate indexes would only cloud validation.

JVEC layout (little-endian throughout): magic b"JVEC", u32 version=1,
u32 n, u32 d, then n*d float32 values row-major, then n id records of
u16 byte-length followed by UTF-8 bytes.

A deterministic character n-gram hashing vectorizer is included as the
model-free default backend; any real embedding model can replace it by
supplying JVEC files.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

JVEC_MAGIC = b"JVEC"
JVEC_VERSION = 1
NORM_TOLERANCE = 1e-4


class VectorFormatError(ValueError):
    pass


class EmbeddingMatrix:
    """n unit rows of dimension d, addressable by opaque string ids."""

    def __init__(self, ids: Sequence[str], vectors: np.ndarray) -> None:
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise VectorFormatError("vectors must be a 2-D array")
        if len(ids) != vectors.shape[0]:
            raise VectorFormatError(
                f"{len(ids)} ids for {vectors.shape[0]} vector rows"
            )
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if list(ids).count(i) > 1})
            raise VectorFormatError(f"duplicate vector id(s): {', '.join(dupes[:5])}")
        self.ids = list(ids)
        self.vectors = vectors
        self._index = {vid: i for i, vid in enumerate(self.ids)}

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, vid: str) -> bool:
        return vid in self._index

    def row(self, vid: str) -> np.ndarray:
        return self.vectors[self._index[vid]]

    def renormalized(self) -> "EmbeddingMatrix":
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            bad = [self.ids[i] for i in np.nonzero(norms.ravel() == 0)[0][:5]]
            raise VectorFormatError(f"zero-norm vector(s): {', '.join(bad)}")
        return EmbeddingMatrix(self.ids, (self.vectors / norms).astype(np.float32))


def concat_matrices(a: EmbeddingMatrix, b: EmbeddingMatrix) -> EmbeddingMatrix:
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    if a.d != b.d:
        raise VectorFormatError(f"dimension mismatch: {a.d} vs {b.d}")
    return EmbeddingMatrix(a.ids + b.ids, np.vstack([a.vectors, b.vectors]))


@dataclass(frozen=True)
class LabeledSet:
    """A taxonomy code and the vector ids of its member statements."""

    label_code: str
    member_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.member_ids:
            raise VectorFormatError(f"label {self.label_code}: empty member set")


def load_vectors(path: str | Path) -> EmbeddingMatrix:
    """Read a JVEC file; rows come back unit-normalized."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != JVEC_MAGIC:
        raise VectorFormatError(f"{path}: not a JVEC file (bad magic)")
    version, n, d = struct.unpack_from("<III", data, 4)
    if version != JVEC_VERSION:
        raise VectorFormatError(f"{path}: unsupported JVEC version {version}")
    offset = 16
    vec_bytes = n * d * 4
    if len(data) < offset + vec_bytes:
        raise VectorFormatError(
            f"{path}: truncated vector block, expected at least "
            f"{offset + vec_bytes} bytes, got {len(data)}"
        )
    vectors = np.frombuffer(data, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    offset += vec_bytes
    ids: list[str] = []
    for _ in range(n):
        if len(data) < offset + 2:
            raise VectorFormatError(
                f"{path}: truncated id block, expected {n} ids, got {len(ids)}"
            )
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if len(data) < offset + length:
            raise VectorFormatError(
                f"{path}: truncated id record, expected {offset + length} bytes, "
                f"got {len(data)}"
            )
        ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    matrix = EmbeddingMatrix(ids, vectors.copy())
    if n == 0:
        return matrix
    norms = np.linalg.norm(matrix.vectors, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        matrix = matrix.renormalized()
    return matrix


def write_vectors(path: str | Path, matrix: EmbeddingMatrix) -> None:
    """Write a JVEC file atomically (temp file then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(JVEC_MAGIC)
        fh.write(struct.pack("<III", JVEC_VERSION, matrix.n, matrix.d))
        fh.write(np.ascontiguousarray(matrix.vectors, dtype="<f4").tobytes())
        for vid in matrix.ids:
            raw = vid.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise VectorFormatError(f"id too long for JVEC: {vid[:40]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
    os.replace(tmp, path)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| * |b|); errors on zero vectors or dim mismatch."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.dot(a, b) / (na * nb))


def nearest(
    query: np.ndarray, matrix: EmbeddingMatrix, k: int
) -> list[tuple[str, float]]:
    """Exact top-k rows by cosine, ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if matrix.n == 0:
        raise ValueError("nearest: empty matrix")
    q = np.asarray(query, dtype=np.float64)
    qn = np.linalg.norm(q)
    if qn == 0:
        raise ValueError("cosine undefined for zero vector")
    scores = matrix.vectors.astype(np.float64) @ (q / qn)
    row_norms = np.linalg.norm(matrix.vectors.astype(np.float64), axis=1)
    scores = scores / row_norms
    order = sorted(range(matrix.n), key=lambda i: (-scores[i], matrix.ids[i]))
    return [(matrix.ids[i], float(scores[i])) for i in order[:k]]


def augment(
    seed_sets: Sequence[LabeledSet],
    seed_matrix: EmbeddingMatrix,
    candidates: EmbeddingMatrix,
    threshold: float,
) -> list[LabeledSet]:
    """Grow each labeled set with candidates whose best similarity to any
    member reaches the threshold.

    Membership closes transitively over the pool: a candidate within the
    threshold of an already-added member joins as well, so re-running
    with the same pool is a no-op. A candidate may join several sets;
    original members are always kept.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1]: {threshold}")
    out: list[LabeledSet] = []
    cand_vectors = candidates.vectors.astype(np.float64)
    for labeled in seed_sets:
        member_rows = []
        for mid in labeled.member_ids:
            if mid in seed_matrix:
                member_rows.append(seed_matrix.row(mid))
            elif mid in candidates:
                member_rows.append(candidates.row(mid))
            else:
                raise VectorFormatError(
                    f"label {labeled.label_code}: member {mid} has no vector"
                )
        new_ids = list(labeled.member_ids)
        present = set(new_ids)
        frontier = np.asarray(member_rows, dtype=np.float64)
        while candidates.n and frontier.size:
            best = (cand_vectors @ frontier.T).max(axis=1)
            wave = [
                idx for idx in range(candidates.n)
                if candidates.ids[idx] not in present and best[idx] >= threshold
            ]
            if not wave:
                break
            for idx in wave:
                new_ids.append(candidates.ids[idx])
                present.add(candidates.ids[idx])
            frontier = cand_vectors[wave]
        out.append(LabeledSet(labeled.label_code, tuple(new_ids)))
    return out


class HashEmbedder:
    """Deterministic character n-gram hashing vectorizer.

    The stand-in for external embedding models: every text maps to the
    same unit vector on every run and platform, so full pipeline runs are
    replayable without any model files. Similarity under this backend is
    lexical overlap, which is enough for fixtures and smoke runs.
    """

    def __init__(self, dim: int = 64, ngram_range: tuple[int, int] = (3, 5),
                 seed: int = 0) -> None:
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim
        self.ngram_range = ngram_range
        self.seed = seed

    @property
    def name(self) -> str:
        lo, hi = self.ngram_range
        return f"hash-d{self.dim}-n{lo}.{hi}-s{self.seed}"

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f" {' '.join(text.lower().split())} "
        lo, hi = self.ngram_range
        for n in range(lo, hi + 1):
            for i in range(max(len(padded) - n + 1, 0)):
                gram = padded[i : i + n]
                digest = hashlib.blake2b(
                    gram.encode("utf-8"),
                    digest_size=8,
                    salt=str(self.seed).encode()[:16],
                ).digest()
                value = int.from_bytes(digest, "little")
                bucket = value % self.dim
                sign = 1.0 if (value >> 32) & 1 else -1.0
                vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0:
            # wordless input: park it on a fixed axis so cosine stays defined
            vec[0] = 1.0
            return vec.astype(np.float32)
        return (vec / norm).astype(np.float32)

    def embed_many(self, ids: Sequence[str], texts: Iterable[str]) -> EmbeddingMatrix:
        rows = [self.embed(t) for t in texts]
        if not rows:
            return EmbeddingMatrix(list(ids), np.zeros((0, self.dim), dtype=np.float32))
        return EmbeddingMatrix(list(ids), np.vstack(rows))
