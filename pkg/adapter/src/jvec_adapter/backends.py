"""Embedding backends, selected by an opaque identifier string.

  hash:<dim>      deterministic character n-gram hashing, no model files
  st:<model>      sentence-transformers model name (needs the package
                  and its weights available locally)
  cmd:<program>   external process speaking JSON on stdin/stdout:
                  {"texts": [...]} in, {"vectors": [[...], ...]} out

The adapter pins no specific model; small and large encoder setups are
both reachable through the same interface.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from typing import Protocol, Sequence

import numpy as np


class Backend(Protocol):
    name: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class BackendError(RuntimeError):
    pass


class HashBackend:
    """Hashing vectorizer: cosine similarity tracks character overlap."""

    def __init__(self, dim: int = 64, seed: int = 0) -> None:
        if dim < 2:
            raise BackendError(f"hash backend dim must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed
        self.name = f"hash:{dim}"

    def _one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f" {' '.join(text.lower().split())} "
        for n in (3, 4, 5):
            for i in range(max(len(padded) - n + 1, 0)):
                digest = hashlib.blake2b(
                    padded[i:i + n].encode("utf-8"),
                    digest_size=8,
                    salt=str(self.seed).encode()[:16],
                ).digest()
                value = int.from_bytes(digest, "little")
                vec[value % self.dim] += 1.0 if (value >> 32) & 1 else -1.0
        if not vec.any():
            vec[0] = 1.0
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.vstack([self._one(t) for t in texts]).astype(np.float32)


class SentenceTransformersBackend:
    def __init__(self, model_name: str) -> None:
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendError(
                "sentence-transformers is not installed; use hash:<dim> or cmd:<program>"
            ) from exc
        self.name = f"st:{model_name}"
        self._model = SentenceTransformer(model_name)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            dim = self._model.get_sentence_embedding_dimension()
            return np.zeros((0, dim), dtype=np.float32)
        return np.asarray(
            self._model.encode(list(texts), show_progress_bar=False),
            dtype=np.float32,
        )


class CommandBackend:
    def __init__(self, program: str) -> None:
        self.name = f"cmd:{program}"
        self.program = program

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        request = json.dumps({"texts": list(texts)})
        try:
            proc = subprocess.run(
                self.program, input=request, capture_output=True,
                text=True, shell=True, check=True,
            )
        except subprocess.CalledProcessError as exc:
            raise BackendError(
                f"embedding command failed ({exc.returncode}): {exc.stderr.strip()}"
            ) from exc
        try:
            vectors = json.loads(proc.stdout)["vectors"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise BackendError("embedding command returned malformed JSON") from exc
        if len(vectors) != len(texts):
            raise BackendError(
                f"embedding command returned {len(vectors)} vectors for "
                f"{len(texts)} texts"
            )
        return np.asarray(vectors, dtype=np.float32)


def resolve_backend(identifier: str) -> Backend:
    kind, _, arg = identifier.partition(":")
    if kind == "hash":
        return HashBackend(dim=int(arg or 64))
    if kind == "st":
        if not arg:
            raise BackendError("st backend needs a model name: st:<model>")
        return SentenceTransformersBackend(arg)
    if kind == "cmd":
        if not arg:
            raise BackendError("cmd backend needs a program: cmd:<program>")
        return CommandBackend(arg)
    raise BackendError(f"unknown embedding backend: {identifier!r}")
