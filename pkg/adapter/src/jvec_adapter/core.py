"""Batch embedding jobs: JSONL texts and taxonomy label CSVs to JVEC.

Input validation happens before the backend is ever invoked, and output
files appear atomically, so a failed run leaves nothing half-written.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import Backend
from .jvec import write_jvec

BATCH_SIZE = 256


class AdapterError(ValueError):
    pass


@dataclass
class AdapterJob:
    input_path: Path
    output_path: Path
    backend: Backend
    normalize: bool = True


@dataclass
class LabelExportReport:
    n_vectors: int = 0
    skipped_cells: list[str] = field(default_factory=list)
    empty_codes: list[str] = field(default_factory=list)


def _read_text_rows(path: Path) -> tuple[list[str], list[str]]:
    ids: list[str] = []
    texts: list[str] = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"{path}:{n}: invalid JSON: {exc}") from None
        if "id" not in row or "text" not in row:
            raise AdapterError(f"{path}:{n}: rows need id and text fields")
        ids.append(str(row["id"]))
        texts.append(str(row["text"]))
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise AdapterError(f"duplicate id(s) in input: {', '.join(dupes[:5])}")
    return ids, texts


def _embed_batched(backend: Backend, texts: Sequence[str],
                   normalize: bool) -> np.ndarray:
    chunks = []
    for start in range(0, len(texts), BATCH_SIZE):
        chunk = backend.embed(texts[start:start + BATCH_SIZE])
        if chunk.shape[0] != len(texts[start:start + BATCH_SIZE]):
            raise AdapterError(
                f"backend returned {chunk.shape[0]} vectors for a batch of "
                f"{len(texts[start:start + BATCH_SIZE])}"
            )
        chunks.append(np.asarray(chunk, dtype=np.float32))
    if not chunks:
        probe = backend.embed(["dimension probe"])
        return np.zeros((0, probe.shape[1]), dtype=np.float32)
    vectors = np.vstack(chunks)
    if normalize:
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise AdapterError("backend produced a zero vector")
        vectors = (vectors / norms).astype(np.float32)
    return vectors


def embed_file(job: AdapterJob) -> int:
    """Embed a JSONL file of {id, text} rows into a JVEC file.

    Order-preserving: output row k belongs to input line k. Returns the
    number of vectors written.
    """
    ids, texts = _read_text_rows(Path(job.input_path))
    vectors = _embed_batched(job.backend, texts, job.normalize)
    write_jvec(job.output_path, ids, vectors)
    return len(ids)


def embed_labels(
    csv_path: str | Path,
    output_path: str | Path,
    sidecar_path: str | Path,
    backend: Backend,
    normalize: bool = True,
) -> LabelExportReport:
    """Embed taxonomy statements and write the label-set sidecar.

    The CSV needs a `code` column; every other column holds statements.
    Empty cells are skipped with a report; codes with no surviving
    statements are reported and left out of the sidecar.
    """
    csv_path = Path(csv_path)
    report = LabelExportReport()
    ids: list[str] = []
    texts: list[str] = []
    sets: dict[str, list[str]] = {}
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "code" not in reader.fieldnames:
            raise AdapterError(f"{csv_path}: expected a code column")
        statement_cols = [c for c in reader.fieldnames if c != "code"]
        if not statement_cols:
            raise AdapterError(f"{csv_path}: expected at least one statement column")
        for n, row in enumerate(reader, start=2):
            code = (row.get("code") or "").strip()
            if not code:
                report.skipped_cells.append(f"row {n}: blank code")
                continue
            members = sets.setdefault(code, [])
            for col in statement_cols:
                statement = (row.get(col) or "").strip()
                if not statement:
                    report.skipped_cells.append(f"row {n}, column {col}: empty cell")
                    continue
                vid = f"{code}#{len(members)}"
                members.append(vid)
                ids.append(vid)
                texts.append(statement)
    report.empty_codes = sorted(code for code, members in sets.items() if not members)
    sets = {code: members for code, members in sets.items() if members}
    vectors = _embed_batched(backend, texts, normalize)
    write_jvec(output_path, ids, vectors)
    Path(sidecar_path).write_text(
        json.dumps({code: sets[code] for code in sorted(sets)}, indent=2,
                   sort_keys=True) + "\n",
        encoding="utf-8",
    )
    report.n_vectors = len(ids)
    return report
