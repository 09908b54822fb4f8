"""Run manifests: enough metadata to reproduce an artifact directory exactly."""

from __future__ import annotations

import hashlib
import json
import os
import platform
import sys
import time
from functools import lru_cache
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_hash

__all__ = ["MANIFEST_NAME", "MANIFEST_SCHEMA", "code_version", "Manifest", "file_digest"]

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA = "manifest/1"


@lru_cache(maxsize=1)
def code_version() -> dict:
    """Distribution version plus a digest of the package sources."""
    root = Path(__file__).resolve().parents[1]
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.suffix in (".py", ".yaml") and "__pycache__" not in p.parts:
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        version = "unknown"
    return {"package": "hexnpc", "version": version, "source_sha256": h.hexdigest()}


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Written when a run starts and rewritten atomically when it ends."""

    def __init__(self, out_dir: Path, cfg: ExperimentConfig, argv=None):
        self.path = Path(out_dir) / MANIFEST_NAME
        self.overwrote = self.path.exists()
        self.doc = {
            "schema": MANIFEST_SCHEMA,
            "task": cfg.task.value,
            "seed": cfg.seed,
            "config_hash": config_hash(cfg),
            "config": cfg.model_dump(mode="json"),
            "code": code_version(),
            "environment": {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "platform": platform.platform(),
            },
            "argv": list(argv) if argv is not None else None,
            "overwrote_previous": self.overwrote,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "status": "running",
        }

    def _write(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.doc, indent=2, default=_jsonable))
        os.replace(tmp, self.path)

    def start(self):
        self._write()
        return self

    def finish(self, status: str, exit_code: int, summary=None, error=None):
        out = self.path.parent
        artifacts = []
        for p in sorted(out.rglob("*")):
            if p.is_file() and p != self.path and "checkpoints" not in p.relative_to(out).parts:
                artifacts.append({"path": p.relative_to(out).as_posix(), "sha256": file_digest(p)})
        self.doc.update({
            "status": status,
            "exit_code": exit_code,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "summary": summary,
            "error": error,
            "artifacts": artifacts,
        })
        self._write()


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)
