"""Atomic artifact writing and append-only run manifests.

Artifacts are always written to a temp file in the target directory
and renamed into place, so a failed command leaves nothing behind.
Each artifact has a manifest: experiment directories hold a
manifest.jsonl, single-file artifacts get a `<name>.manifest.jsonl`
sidecar. Manifests are append-only JSON lines; they carry the
timestamp, so reruns keep data files byte-identical while the manifest
accumulates one entry per run.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path


def atomic_write_bytes(path, blob: bytes) -> None:
    path = Path(path)
    tmp = path.parent / f".{path.name}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_group(files) -> None:
    """Write several (path, text) artifacts together.

    All temp files are written in full before the first rename, so any
    write failure leaves no new artifacts; the renames themselves are
    then the only remaining steps.
    """
    staged = []
    try:
        for path, text in files:
            path = Path(path)
            tmp = path.parent / f".{path.name}.tmp.{os.getpid()}"
            with open(tmp, "wb") as handle:
                handle.write(text.encode("utf-8"))
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if tmp.exists():
                tmp.unlink()


def config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def manifest_entry(
    argv, config: dict, seed=None, tablebase_checksum=None, version: str = ""
) -> dict:
    return {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "command": " ".join(argv),
        "config_digest": config_digest(config),
        "seed": seed,
        "tablebase_checksum": (
            None if tablebase_checksum is None else f"crc32:{tablebase_checksum:08x}"
        ),
        "tool_version": version,
    }


def append_manifest(path, entry: dict) -> None:
    line = json.dumps(entry, sort_keys=True) + "\n"
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(line)


def sidecar_manifest_path(artifact_path) -> Path:
    artifact_path = Path(artifact_path)
    return artifact_path.parent / f"{artifact_path.name}.manifest.jsonl"
