"""Canonical JSON serialization: byte-identical output for identical data.

All persistent artifacts go through ``dumps_canonical`` so repeated runs
with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def _native(obj):
    if isinstance(obj, dict):
        return {str(k): _native(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_native(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [_native(v) for v in sorted(obj)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_native(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_canonical(doc) -> str:
    return json.dumps(_native(doc), sort_keys=True, indent=2,
                      ensure_ascii=True) + "\n"


def dump_file(doc, path) -> str:
    """Write canonical JSON; returns the sha256 checksum of the bytes."""
    data = dumps_canonical(doc).encode("utf-8")
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def dump_jsonl(records, path) -> str:
    lines = [json.dumps(_native(r), sort_keys=True, ensure_ascii=True)
             for r in records]
    data = ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_file(path):
    return json.loads(Path(path).read_text())
