"""Run manifests: enough to re-run a command and check its outputs bit-for-bit."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def output_checksums(out_path) -> Dict[str, str]:
    """sha256 of the output file, or of every file below an output directory (manifests excluded)."""
    out = Path(out_path)
    if out.is_dir():
        return {
            str(p.relative_to(out)): file_sha256(p)
            for p in sorted(out.rglob("*"))
            if p.is_file() and not p.name.endswith("manifest.json")
        }
    return {".": file_sha256(out)}


def manifest_path_for(out_path) -> Path:
    out = Path(out_path)
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def write_manifest(
    command: str,
    argv: List[str],
    out_path,
    inputs: Optional[Dict[str, str]] = None,
    policy: Optional[dict] = None,
    master_seed: Optional[int] = None,
) -> Path:
    inputs = {k: v for k, v in (inputs or {}).items() if v is not None}
    record = {
        "command": command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "tool_version": __version__,
        "master_seed": master_seed,
        "policy": policy,
        "inputs": {k: str(Path(v).resolve()) for k, v in inputs.items()},
        "input_sha256": {k: file_sha256(v) for k, v in inputs.items()},
        "output": str(Path(out_path).resolve()),
        "output_sha256": output_checksums(out_path),
    }
    path = manifest_path_for(out_path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
