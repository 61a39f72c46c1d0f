"""Deterministic CSV/JSON reporting and run manifests.

Output bytes are a pure function of the data: floats are rendered with
``repr`` (shortest round-trip form, ``.`` decimal separator), lines end
with LF, and JSON documents sort their keys.  The manifest is written
atomically after everything else so a finished run directory is
self-describing.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "RunManifest",
    "format_value",
    "write_csv",
    "write_sidecar",
    "config_hash",
    "file_sha256",
    "write_manifest",
]


def format_value(v) -> str:
    """Render one CSV cell: shortest round-trip form for floats."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: list[str], rows) -> Path:
    """Write rows with a mandatory header, LF endings, '.' decimals."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sidecar(csv_path, payload: dict) -> Path:
    """Write the JSON sidecar carrying provenance for one CSV."""
    path = Path(csv_path).with_suffix(".json")
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def config_hash(experiment: str, parameters: dict, master_seed: int) -> str:
    """Hash identifying (experiment, resolved parameters, master seed)."""
    blob = json.dumps(
        {"experiment": experiment, "parameters": parameters, "master_seed": master_seed},
        sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one completed run."""

    config_hash: str
    version: str
    started_at: str
    finished_at: str
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outputs": self.outputs,
        }


def write_manifest(directory, manifest: RunManifest) -> Path:
    """Atomically write ``manifest.json`` (write + rename)."""
    directory = Path(directory)
    target = directory / "manifest.json"
    tmp = directory / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n")
    os.replace(tmp, target)
    return target
