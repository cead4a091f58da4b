"""Strict readers for the simulation CLI's run-directory files.

The renderer consumes emitted files only, so the parsers here are
written against the published contract rather than against the
simulation code: CSV with one header row and comma separation, complex
quantities split into paired re_*/im_* columns, grids in long form
with the real coordinate varying fastest, and JSON summaries whose
non-finite floats are spelled "inf", "-inf", and "nan".  Anything that
does not conform raises instead of being repaired.
"""

import csv
import json
from pathlib import Path

import numpy as np

_NONFINITE = {"inf": np.inf, "-inf": -np.inf, "nan": np.nan}


def coerce_float(value) -> float:
    """One summary cell to a float, honoring the non-finite spellings."""
    if isinstance(value, str) and value in _NONFINITE:
        return _NONFINITE[value]
    return float(value)


def load_json(path) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path} must hold a JSON object at top level")
    return data


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path} is empty") from None
        rows = [row for row in reader if row]
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                f"{path} row {i + 2} has {len(row)} cells, header has "
                f"{width}")
    return header, rows


def load_series(path, required=()) -> dict[str, np.ndarray]:
    """Column arrays from a series CSV.

    Columns where every cell parses as a float come back as float
    arrays; anything else stays an array of strings.  Missing required
    columns raise with the file and column named.
    """
    path = Path(path)
    header, rows = _read_rows(path)
    missing = [name for name in required if name not in header]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}; "
                         f"found {header}")
    columns = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in rows]
        try:
            columns[name] = np.array([float(c) for c in cells])
        except ValueError:
            columns[name] = np.array(cells)
    return columns


def load_grid(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(re_axis, im_axis, values[im, re]) from a long-form grid CSV.

    The value is complex when the file carries re_value/im_value pairs
    and real when it carries a single value column.  The point set must
    tile a full rectangle.
    """
    path = Path(path)
    header, rows = _read_rows(path)
    for name in ("re_point", "im_point"):
        if name not in header:
            raise ValueError(f"{path} is missing column {name}; "
                             f"found {header}")
    cols = {name: np.array([float(row[j]) for row in rows])
            for j, name in enumerate(header)}
    if "re_value" in cols and "im_value" in cols:
        values = cols["re_value"] + 1j * cols["im_value"]
    elif "value" in cols:
        values = cols["value"]
    else:
        raise ValueError(f"{path} needs either a value column or a "
                         f"re_value/im_value pair; found {header}")
    re_axis = np.unique(cols["re_point"])
    im_axis = np.unique(cols["im_point"])
    if re_axis.size * im_axis.size != values.size:
        raise ValueError(f"{path} does not tile a full rectangle: "
                         f"{re_axis.size} x {im_axis.size} axis points "
                         f"for {values.size} rows")
    # the writer emits the real coordinate fastest; verify rather than
    # assume, since a sorted reshape would silently scramble any other
    # ordering
    expected_re = np.tile(re_axis, im_axis.size)
    expected_im = np.repeat(im_axis, re_axis.size)
    if (not np.array_equal(cols["re_point"], expected_re)
            or not np.array_equal(cols["im_point"], expected_im)):
        raise ValueError(f"{path} rows are not in row-major order with "
                         f"the real coordinate fastest")
    return re_axis, im_axis, values.reshape(im_axis.size, re_axis.size)


def load_tau_map(summary: dict, key: str, path) -> dict[float, float]:
    """One level-to-lifetime mapping out of a sweep summary."""
    if key not in summary:
        raise ValueError(f"{path} is missing the {key} mapping")
    mapping = summary[key]
    if not isinstance(mapping, dict) or not mapping:
        raise ValueError(f"{path} entry {key} must be a non-empty "
                         f"mapping of level to lifetime")
    return {float(level): coerce_float(tau)
            for level, tau in mapping.items()}
