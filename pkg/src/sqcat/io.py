"""Deterministic serialization for experiment runs.

Every file written here is a pure function of its inputs: JSON mappings
are key-sorted with a fixed indent, floats use the shortest round-trip
representation, complex columns split into paired re_* / im_* columns,
and nothing records wall-clock time.  Two runs with the same
configuration and seed therefore emit byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from sqcat.gates import DeviceParams


def jsonable(obj):
    """Convert nested numpy / dataclass / complex values to JSON types.

    Non-finite floats become the strings 'inf', '-inf' and 'nan' since
    strict JSON has no literal for them; complex numbers become
    {"re": ..., "im": ...} mappings.
    """
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return {"re": jsonable(z.real), "im": jsonable(z.imag)}
    if isinstance(obj, Path):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v) for v in seq]
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def write_json(path, obj) -> Path:
    """Canonical JSON dump: sorted keys, two-space indent, trailing
    newline."""
    path = Path(path)
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True,
                      allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _format_cell(value) -> str:
    """Shortest round-trip text for one cell."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (str, np.str_)):
        if "," in value or "\n" in value:
            raise ValueError(f"cell {value!r} would break the CSV layout")
        return str(value)
    return repr(float(value))


def _flatten_columns(columns: dict) -> dict:
    """Split complex columns into re_* / im_* pairs, keep order."""
    flat = {}
    for name, values in columns.items():
        arr = np.asarray(values)
        if arr.ndim != 1:
            raise ValueError(f"column {name!r} must be one-dimensional")
        if np.iscomplexobj(arr):
            flat[f"re_{name}"] = arr.real
            flat[f"im_{name}"] = arr.imag
        else:
            flat[name] = arr
    return flat


def write_series_csv(path, columns: dict) -> Path:
    """Write named 1D columns as CSV with a header row.

    Columns keep their given order; complex columns expand in place
    into a re_* / im_* pair.  All columns must share one length.
    """
    if not columns:
        raise ValueError("need at least one column")
    flat = _flatten_columns(columns)
    lengths = {len(v) for v in flat.values()}
    if len(lengths) != 1:
        raise ValueError(f"column lengths differ: {sorted(lengths)}")
    names = list(flat)
    lines = [",".join(names)]
    for row in zip(*flat.values()):
        lines.append(",".join(_format_cell(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_series_csv(path) -> dict:
    """Read a series CSV back as {column: array}.

    Numeric columns come back as float arrays, anything else as string
    arrays.  Columns stay flat (re_* / im_* separate); callers that want
    complex values pair them up themselves.
    """
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    names = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    out = {}
    for j, name in enumerate(names):
        cells = [row[j] for row in rows]
        try:
            out[name] = np.array(cells, dtype=float)
        except ValueError:
            out[name] = np.array(cells)
    return out


def write_grid_csv(path, grid) -> Path:
    """Write a rectangular phase-space grid in long form.

    Rows scan the grid with the real coordinate fastest, one row per
    point.  Complex-valued grids get re_value / im_value columns, real
    grids a single value column; the point itself is always the
    re_point / im_point pair.
    """
    re_axis = np.asarray(grid.re_axis, dtype=float)
    im_axis = np.asarray(grid.im_axis, dtype=float)
    values = np.asarray(grid.values)
    if values.shape != (im_axis.size, re_axis.size):
        raise ValueError("grid values shape does not match its axes")
    re_mesh, im_mesh = np.meshgrid(re_axis, im_axis)
    columns = {"re_point": re_mesh.ravel(), "im_point": im_mesh.ravel()}
    if np.iscomplexobj(values):
        columns["value"] = values.ravel()
    else:
        columns["value"] = values.ravel().astype(float)
    return write_series_csv(path, columns)


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a long-form grid CSV back as (re_axis, im_axis, values).

    values comes back with shape (len(im_axis), len(re_axis)), complex
    when the file carries a re_value / im_value pair.
    """
    cols = read_series_csv(path)
    for name in ("re_point", "im_point"):
        if name not in cols:
            raise ValueError(f"grid file is missing column {name!r}")
    re_axis = np.unique(cols["re_point"])
    im_axis = np.unique(cols["im_point"])
    shape = (im_axis.size, re_axis.size)
    if "re_value" in cols and "im_value" in cols:
        flat = cols["re_value"] + 1j * cols["im_value"]
    elif "value" in cols:
        flat = cols["value"]
    else:
        raise ValueError("grid file is missing its value column")
    if flat.size != shape[0] * shape[1]:
        raise ValueError("grid file does not cover a full rectangle")
    return re_axis, im_axis, flat.reshape(shape)


def device_from_mapping(data: dict) -> DeviceParams:
    """DeviceParams from a partial mapping; unlisted fields keep their
    defaults, unknown keys raise."""
    allowed = {f.name for f in dataclasses.fields(DeviceParams)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown device parameters: {unknown}")
    return DeviceParams(**{k: float(v) for k, v in data.items()})


def parse_grid_spec(text: str) -> np.ndarray:
    """Parse 'min:max:n' into a uniform axis with n points."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec must be min:max:n, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    n = int(parts[2])
    if n < 2:
        raise ValueError("grid spec needs at least 2 points")
    if not hi > lo:
        raise ValueError("grid spec needs max > min")
    return np.linspace(lo, hi, n)
