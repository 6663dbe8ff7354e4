"""Deterministic JSON/CSV output and mesh/field round-tripping.

Every float is written with 17 significant digits so a value read back
compares equal bit for bit; files land via temp-and-rename so a crashed
run never leaves a truncated document behind.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Any

import numpy as np

from . import kernels
from .energy import MaterialParams
from .errors import DomainError
from .fem import BoundaryTag, Mesh, element_gradients


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps_json(obj: Any, indent: int = 0) -> str:
    """JSON text with 17-significant-digit floats and Infinity/NaN tokens."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        items = [dumps_json(v, indent + 2) for v in obj]
        if not items:
            return "[]"
        inner = ",\n".join(pad + "  " + s for s in items)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        items = []
        for key, val in obj.items():
            if not isinstance(key, str):
                raise DomainError(f"JSON object keys must be strings, got {key!r}")
            items.append(pad + "  " + json.dumps(key) + ": " + dumps_json(val, indent + 2))
        if not items:
            return "{}"
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise DomainError(f"cannot serialize {type(obj).__name__} to JSON")


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj: Any) -> None:
    _atomic_write_text(path, dumps_json(obj) + "\n")


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)  # Infinity/NaN tokens parse natively


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "nodes": mesh.nodes,
        "triangles": mesh.triangles,
        "boundary": [[i, j, tag.value] for i, j, tag in mesh.boundary],
    }


def mesh_from_dict(doc: dict) -> Mesh:
    try:
        boundary = tuple(
            (int(i), int(j), BoundaryTag(tag)) for i, j, tag in doc["boundary"]
        )
        return Mesh(np.asarray(doc["nodes"], dtype=float),
                    np.asarray(doc["triangles"], dtype=np.int64), boundary)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed mesh document: {exc}") from exc


def field_to_dict(field: np.ndarray) -> dict:
    return {"nodal_values": np.asarray(field, dtype=float)}


def field_from_dict(doc: dict) -> np.ndarray:
    try:
        arr = np.asarray(doc["nodal_values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed field document: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("nodal_values must be an (n, 2) table")
    return arr


def element_table_csv(mesh: Mesh, field: np.ndarray, params: MaterialParams) -> str:
    """Per-element diagnostics: energy density, det, deviatoric log norm."""
    F = element_gradients(mesh, field)
    dev2, _, det = kernels.log_strain(F)
    W = kernels.energy_eh(F, params.mu, params.kappa, params.k, params.khat, params.m)
    dev_norm = np.sqrt(np.maximum(dev2, 0.0))
    lines = ["element,energy_density,det_grad,dev_log_norm"]
    for e in range(len(mesh.triangles)):
        lines.append(
            f"{e},{_format_float(float(W[e]))},"
            f"{_format_float(float(det[e]))},{_format_float(float(dev_norm[e]))}"
        )
    return "\n".join(lines) + "\n"


def write_element_csv(path: str, mesh: Mesh, field: np.ndarray, params: MaterialParams) -> None:
    _atomic_write_text(path, element_table_csv(mesh, field, params))
