"""Snapshot CSV and JSON formats.

Snapshot CSV layout::

    # dt=<value> n=<value>
    t,ch0_re,ch0_im,ch1_re,ch1_im,...
    0,<re>,<im>,...

one row per snapshot, ``t`` the integer time index, floats printed with 17
significant digits so that doubles survive the round trip bit-exactly.
Complex numbers in JSON are ``{"re": ..., "im": ...}`` objects.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import systems
from .dmd import SnapshotMatrix
from .errors import ParameterError

SCHEMA_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def snapshot_csv_text(y: SnapshotMatrix) -> str:
    lines = [f"# dt={fmt(y.dt)} n={y.n}"]
    header = ["t"]
    for c in range(y.n):
        header += [f"ch{c}_re", f"ch{c}_im"]
    lines.append(",".join(header))
    for t in range(y.m):
        col = y.data[:, t]
        cells = [str(t)]
        for v in col:
            cells += [fmt(v.real), fmt(v.imag)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_snapshot_csv(path, y: SnapshotMatrix) -> None:
    atomic_write(path, snapshot_csv_text(y))


def read_snapshot_csv(path) -> SnapshotMatrix:
    """Parse a snapshot CSV file.

    Raises
    ------
    ParameterError
        On any deviation from the layout.
    """
    with open(path, newline="") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise ParameterError(f"{path}: missing '# dt=... n=...' metadata line")
    meta = {}
    for token in lines[0][1:].split():
        key, _, value = token.partition("=")
        meta[key] = value
    try:
        dt = float(meta["dt"])
        n = int(meta["n"])
    except (KeyError, ValueError):
        raise ParameterError(f"{path}: malformed metadata line {lines[0]!r}") from None
    header = lines[1].split(",")
    expected = ["t"] + [f"ch{c}_{p}" for c in range(n) for p in ("re", "im")]
    if header != expected:
        raise ParameterError(f"{path}: header does not match n={n}")
    rows = lines[2:]
    data = np.empty((n, len(rows)), dtype=np.complex128)
    for j, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != 2 * n + 1:
            raise ParameterError(f"{path}: row {j} has {len(cells)} fields, expected {2 * n + 1}")
        try:
            if int(cells[0]) != j:
                raise ParameterError(f"{path}: time index {cells[0]} out of order at row {j}")
            values = np.array([float(c) for c in cells[1:]])
        except ValueError:
            raise ParameterError(f"{path}: unparsable value in row {j}") from None
        data[:, j] = values[0::2] + 1j * values[1::2]
    if not np.all(np.isfinite(data)):
        raise ParameterError(f"{path}: non-finite values")
    return SnapshotMatrix(data, dt)


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": _json_float(z.real), "im": _json_float(z.imag)}


def _json_float(x: float):
    return None if math.isnan(x) else float(x)


def complex_from_json(obj) -> complex:
    if isinstance(obj, dict):
        try:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        except (KeyError, TypeError, ValueError):
            raise ParameterError(f"bad complex number {obj!r}") from None
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    raise ParameterError(f"bad complex number {obj!r}")


def complex_array_from_json(obj) -> np.ndarray:
    if isinstance(obj, list):
        return np.array([complex_array_from_json(o) if isinstance(o, list) else complex_from_json(o)
                         for o in obj], dtype=np.complex128)
    raise ParameterError(f"expected a list, got {obj!r}")


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ParameterError(f"{path}: top level must be an object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParameterError(f"{path}: unsupported schema_version {version}")
    return doc


def dump_json(path, doc: dict) -> None:
    atomic_write(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _orders(obj) -> tuple[int, ...]:
    if isinstance(obj, dict):
        return tuple(range(int(obj["min"]), int(obj["max"]) + 1))
    return tuple(int(k) for k in obj)


def system_from_json(obj: dict):
    """Build a system spec from its ``{"type": ..., ...}`` description."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise ParameterError("system must be an object with a 'type' field")
    kind = obj["type"]
    params = {k: v for k, v in obj.items() if k != "type"}
    try:
        if kind == "lti":
            return systems.LTISpec(
                complex_array_from_json(params["a"]),
                complex_array_from_json(params["x0"]),
                float(params.get("dt", 1.0)),
            )
        if kind == "stuart_landau":
            if "orders" in params:
                params["orders"] = _orders(params["orders"])
            return systems.StuartLandauSpec(**params)
        if kind == "burgers":
            return systems.BurgersSpec(**params)
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"bad {kind} system description: {exc}") from None
    raise ParameterError(f"unknown system type {kind!r}")


def noise_from_json(obj: dict | None) -> systems.NoiseSpec:
    obj = obj or {}
    try:
        return systems.NoiseSpec(float(obj.get("sigma_p", 0.0)), float(obj.get("sigma_o", 0.0)),
                                 int(obj.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"bad noise description: {exc}") from None
