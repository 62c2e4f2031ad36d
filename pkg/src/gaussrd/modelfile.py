"""Plain-text model files.

One ``key: value`` pair per line; values are JSON.  Blank lines and text
after ``#`` are ignored.  A remote model needs ``k``, ``l``, ``sigma_x``,
``a`` and ``noise_var``; a direct model starts with ``kind: direct`` and
needs ``l``, ``sigma_x`` and ``noise_var``.  Matrices are row-major nested
lists.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .duality import DirectModel, make_direct
from .errors import InvalidInput, ModelFileError
from .gauss_model import SourceModel, make_model

__all__ = ["parse_model", "load_model", "dump_model"]

REMOTE_KEYS = ("k", "l", "sigma_x", "a", "noise_var")
DIRECT_KEYS = ("l", "sigma_x", "noise_var")


def _fields(text: str) -> tuple[dict, dict]:
    values, lines = {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition(":")
        key = key.strip()
        if not sep or not key:
            raise ModelFileError("expected 'key: value'", line=no)
        if key in values:
            raise ModelFileError("duplicate key", line=no, field=key)
        val = val.strip()
        if key == "kind":
            values[key] = val.strip('"')
        else:
            try:
                values[key] = json.loads(val)
            except json.JSONDecodeError as exc:
                raise ModelFileError(f"invalid JSON value ({exc.msg})", line=no, field=key) from None
        lines[key] = no
    return values, lines


def _check_shape(values, lines, key, shape):
    try:
        arr = np.asarray(values[key], dtype=float)
    except (TypeError, ValueError):
        raise ModelFileError("not a numeric array", line=lines[key], field=key) from None
    if arr.shape != shape:
        raise ModelFileError(f"expected shape {shape}, got {arr.shape}", line=lines[key], field=key)
    return arr


def _int_field(values, lines, key):
    v = values[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ModelFileError("expected a positive integer", line=lines[key], field=key)
    return v


def parse_model(text: str) -> SourceModel | DirectModel:
    values, lines = _fields(text)
    kind = values.pop("kind", "remote")
    if kind not in ("remote", "direct"):
        raise ModelFileError(f"unknown kind {kind!r}", line=lines["kind"], field="kind")
    needed = DIRECT_KEYS if kind == "direct" else REMOTE_KEYS
    for key in needed:
        if key not in values:
            raise ModelFileError("missing required field", field=key)
    for key in values:
        if key not in needed:
            raise ModelFileError("unknown field", line=lines[key], field=key)
    l = _int_field(values, lines, "l")
    if kind == "direct":
        sx = _check_shape(values, lines, "sigma_x", (l, l))
        nv = np.atleast_1d(np.asarray(values["noise_var"], dtype=float))
        if nv.shape == (1,) and l > 1:
            nv = np.full(l, nv[0])
        nv = _check_shape({"noise_var": nv}, lines, "noise_var", (l,))
        build = lambda: make_direct(sx, nv)
    else:
        k = _int_field(values, lines, "k")
        sx = _check_shape(values, lines, "sigma_x", (k, k))
        a = _check_shape(values, lines, "a", (l, k))
        nv = _check_shape(values, lines, "noise_var", (l,))
        build = lambda: make_model(sx, a, nv)
    try:
        return build()
    except InvalidInput as exc:
        field = _blame(str(exc), needed) or "sigma_x"
        raise ModelFileError(f"{type(exc).__name__}: {exc}", line=lines.get(field), field=field) from None


def _blame(message: str, keys) -> str | None:
    for key in sorted(keys, key=len, reverse=True):
        if re.search(rf"\b{key}\b", message):
            return key
    return None


def load_model(path: str | Path) -> SourceModel | DirectModel:
    return parse_model(Path(path).read_text())


def dump_model(model: SourceModel | DirectModel) -> str:
    """Text form accepted by :func:`parse_model` (floats in ``repr`` precision)."""
    rows = []
    if isinstance(model, DirectModel):
        rows.append("kind: direct")
    else:
        rows.append(f"k: {model.k}")
    rows.append(f"l: {model.l}")
    rows.append(f"sigma_x: {json.dumps(model.sigma_x.tolist())}")
    if isinstance(model, SourceModel):
        rows.append(f"a: {json.dumps(model.a.tolist())}")
    rows.append(f"noise_var: {json.dumps(model.noise_var.tolist())}")
    return "\n".join(rows) + "\n"
