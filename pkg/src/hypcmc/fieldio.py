"""Flat-file formats: field CSV, diagnostics JSON and theorem-report JSON.

CSV files are comma separated with a header row, LF line endings and
17 significant digits, so a round trip reproduces every double exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELD_COLUMNS = ("x", "y", "u", "|Du|", "boundary_flag")


class FieldFormatError(ValueError):
    """A field CSV is empty or does not follow the documented columns."""


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_table(path, header, rows) -> None:
    """Write a CSV table; non-string cells are formatted with :func:`fmt`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_field_csv(path, s, extra=None) -> None:
    """Write a solution field; ``extra`` is an optional ``(name, values)`` column."""
    mesh = s.mesh
    cols = [mesh.vertices[:, 0], mesh.vertices[:, 1], s.u, s.grad_norm,
            mesh.boundary.astype(float)]
    header = list(FIELD_COLUMNS)
    if extra is not None:
        name, values = extra
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_vertices,):
            raise ValueError(f"extra column {name!r} has shape {values.shape}")
        header.append(name)
        cols.append(values)
    data = np.column_stack(cols)
    rows = []
    for r in data:
        vals = [fmt(v) for v in r]
        vals[4] = str(int(r[4]))
        rows.append(vals)
    write_table(path, header, rows)


@dataclass(frozen=True)
class FieldTable:
    points: np.ndarray
    u: np.ndarray
    grad_norm: np.ndarray
    boundary: np.ndarray
    extra: dict

    def column(self, name: str) -> np.ndarray:
        if name == "u":
            return self.u
        if name == "|Du|":
            return self.grad_norm
        if name in self.extra:
            return self.extra[name]
        raise KeyError(f"no column {name!r}; available: u, |Du|, {', '.join(self.extra)}")


def read_field_csv(path) -> FieldTable:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FieldFormatError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if tuple(header[:5]) != FIELD_COLUMNS:
        raise FieldFormatError(
            f"{path}: header must start with {','.join(FIELD_COLUMNS)}, got {lines[0]!r}")
    if len(lines) < 2:
        raise FieldFormatError(f"{path}: no data rows")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise FieldFormatError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FieldFormatError(f"{path}:{lineno}: {exc}") from None
    data = np.array(rows)
    if not np.all(np.isfinite(data[:, :3])):
        raise FieldFormatError(f"{path}: non-finite coordinates or u values")
    extra = {name: data[:, 5 + k] for k, name in enumerate(header[5:])}
    return FieldTable(data[:, :2], data[:, 2], data[:, 3], data[:, 4] != 0, extra)


def _clean(obj):
    """Map NaN and infinities to ``None`` and numpy scalars to Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="\n")


def reports_document(reports) -> list:
    """Reports as the JSON array, sorted by theorem id."""
    return [r.as_dict() for r in sorted(reports, key=lambda r: r.theorem_id)]
