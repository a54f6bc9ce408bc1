"""Versioned JSON containers for trained models."""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import ModelFormatError

FORMAT_VERSION = 1
KINDS = ("random_forest", "mlp", "linear_stacker")


def dump_model(kind: str, payload: dict, path) -> None:
    doc = {"format": "clinsts-model", "kind": kind, "version": FORMAT_VERSION, **payload}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_model(path, kind: str | None = None) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a model file ({exc.msg})", path) from None
    except UnicodeDecodeError:
        raise ModelFormatError("not a UTF-8 model file", path) from None
    if not isinstance(doc, dict) or doc.get("format") != "clinsts-model":
        raise ModelFormatError("missing clinsts-model header", path)
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}", path)
    if doc.get("kind") not in KINDS:
        raise ModelFormatError(f"unknown model kind {doc.get('kind')!r}", path)
    if kind is not None and doc["kind"] != kind:
        raise ModelFormatError(f"expected a {kind} model, found {doc['kind']}", path)
    return doc


def model_kind(path) -> str:
    return read_model(path)["kind"]


def encode_array(a) -> dict:
    """Exact, compact JSON form of a float64 array (little-endian base64)."""
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "f8": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(doc: dict):
    raw = base64.b64decode(doc["f8"], validate=True)
    return np.frombuffer(raw, dtype="<f8").reshape(doc["shape"]).astype(np.float64)
