"""Reproducibility manifests: one per stage, naming inputs by digest.

Primary outputs must be byte-identical across reruns with the same
inputs and seed; manifests are allowed to differ only in their
created_utc field, so everything else in them is written sorted and
deterministic.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    inputs: dict[str, str | Path],
    outputs: list[str],
    config_snapshot: dict,
    seed: int | None = None,
    workers: int | None = None,
    diagnostics: list[str] | None = None,
) -> Path:
    from . import __version__

    manifest = {
        "command": command,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "inputs": {
            name: sha256_file(path) for name, path in sorted(inputs.items())
        },
        "outputs": sorted(outputs),
        "config": config_snapshot,
        "seed": seed,
        "workers": workers,
        "diagnostics": diagnostics or [],
    }
    path = Path(out_dir) / f"{command.replace(' ', '_')}_manifest.json"
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path
