"""Grid-function file format.

A file is one line of JSON (the header) followed by the raw values as
little-endian float64 in row-major order.  The header carries

    {"format": "freebnd-grid", "version": 1, "dim", "origin", "spacing", "shape",
     "exterior", "interpolation", "meta", "nbytes", "checksum"}

where ``checksum`` is the SHA-256 of the payload and ``exterior`` is
``"zero"``, ``null`` or a closed-form description.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, FormatVersionMismatch
from .functions import ClosedForm, Grid, GridFunction, closed_form_from_dict

FORMAT = "freebnd-grid"
VERSION = 1


def _header(gf, payload):
    ext = gf.exterior.to_dict() if isinstance(gf.exterior, ClosedForm) else gf.exterior
    return {
        "format": FORMAT,
        "version": VERSION,
        "dim": gf.grid.dim,
        "origin": list(gf.grid.origin),
        "spacing": gf.grid.spacing,
        "shape": list(gf.grid.shape),
        "exterior": ext,
        "interpolation": gf.interpolation,
        "meta": gf.meta,
        "nbytes": len(payload),
        "checksum": hashlib.sha256(payload).hexdigest(),
    }


def dumps_grid_function(gf):
    payload = np.ascontiguousarray(gf.values, dtype="<f8").tobytes(order="C")
    head = json.dumps(_header(gf, payload), sort_keys=True, default=_plain).encode()
    return head + b"\n" + payload


def loads_grid_function(blob):
    nl = blob.find(b"\n")
    try:
        head = json.loads(blob[:nl].decode()) if nl >= 0 else None
    except (UnicodeDecodeError, json.JSONDecodeError):
        head = None
    if not isinstance(head, dict):
        raise ChecksumMismatch("unreadable header")
    if head.get("format") != FORMAT or head.get("version") != VERSION:
        raise FormatVersionMismatch(f"unsupported format {head.get('format')!r} version {head.get('version')!r}")
    payload = blob[nl + 1:]
    if len(payload) != head["nbytes"] or hashlib.sha256(payload).hexdigest() != head["checksum"]:
        raise ChecksumMismatch("payload does not match the header checksum")
    grid = Grid(tuple(head["origin"]), head["spacing"], tuple(head["shape"]))
    vals = np.frombuffer(payload, dtype="<f8").reshape(grid.shape).astype(float)
    ext = head["exterior"]
    if isinstance(ext, dict):
        ext = closed_form_from_dict(ext)
    return GridFunction(grid, vals, ext, head.get("interpolation", "linear"), head.get("meta") or {})


def save_grid_function(path, gf):
    Path(path).write_bytes(dumps_grid_function(gf))


def load_grid_function(path):
    return loads_grid_function(Path(path).read_bytes())


def save_extension_field(path, field):
    """Extension values as a grid file (rows = heights) plus a JSON sidecar.

    Needs at least two heights and two base points, like any grid file.
    """
    path = Path(path)
    vals = np.asarray(field.values)
    grid = Grid((0.0, 0.0), 1.0, vals.shape)
    save_grid_function(path, GridFunction(grid, vals, None, meta={"kind": "extension-values"}))
    side = {"heights": np.asarray(field.heights).tolist(), "s": field.s, "dim": field.dim,
            "constants": field.constants, "x": np.asarray(field.x).tolist(),
            "flux": np.asarray(field.flux).tolist()}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, sort_keys=True, default=_plain))


def load_extension_field(path):
    from .extension import ExtensionField

    path = Path(path)
    gf = load_grid_function(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return ExtensionField(np.asarray(side["x"]), np.asarray(side["heights"]), np.array(gf.values),
                          np.asarray(side["flux"]), side["s"], side["dim"], side["constants"])


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
