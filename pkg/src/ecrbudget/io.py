"""Canonical JSON documents: device state and results, with snapshot hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
VOLATILE_KEYS = ("timestamps",)


class DocumentError(ValueError):
    """A document is malformed or has an unsupported schema."""


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=1, allow_nan=False)


def snapshot_hash(doc: dict) -> str:
    """SHA-256 of the canonical form of ``doc`` without its volatile fields."""
    body = {k: v for k, v in to_jsonable(doc).items() if k not in VOLATILE_KEYS and k != "snapshot"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def write(path: str | Path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc) + "\n")
    return path


def read(path: str | Path, kind: str | None = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{path} is not a JSON object")
    if kind is not None:
        if doc.get("kind") != kind:
            raise DocumentError(f"{path} is not a {kind} document")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DocumentError(f"unsupported schema version {doc.get('schema_version')!r}")
    return doc
