"""Contour plots of field CSV files as standalone SVG.

The points are re-triangulated (Delaunay; the domains are convex), level
sets come from marching triangles on the vertex values, and the critical
point of ``u`` is marked.  Output is deterministic except for the second
line, a ``<!-- generator: hypcmc X.Y.Z -->`` comment.
"""
from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from hypcmc.analysis import critical_points_of
from hypcmc.contour import level_polylines
from hypcmc.fieldio import FieldFormatError, FieldTable, read_field_csv
from hypcmc.geometry import Mesh

SIZE = 640.0
PAD = 24.0
# endpoints of the level colour ramp (low -> high)
_LOW = np.array([49, 54, 149])
_HIGH = np.array([215, 48, 39])


def _generator() -> str:
    try:
        return version("hypcmc")
    except PackageNotFoundError:
        return "unknown"


def table_mesh(table: FieldTable) -> Mesh:
    """Delaunay triangulation of the CSV points, without degenerate hull slivers."""
    pts = table.points
    if len(pts) < 3:
        raise FieldFormatError("need at least three points to triangulate")
    tri = Delaunay(pts).simplices.astype(np.int64)
    p = pts[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
    area = np.abs(area)
    edge = np.linalg.norm(pts[tri] - pts[np.roll(tri, 1, axis=1)], axis=2).max(axis=1)
    tri = tri[area > 1e-6 * edge ** 2]
    if len(tri) == 0:
        raise FieldFormatError("points are collinear")
    h = float(np.median(edge))
    bidx = np.nonzero(table.boundary)[0]
    ang = np.arctan2(*(pts[bidx] - pts.mean(axis=0)).T[::-1])
    order = np.argsort(ang, kind="stable")
    return Mesh(pts, tri, table.boundary.copy(), h, bidx[order], ang[order])


def default_levels(values, n: int) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    return np.linspace(lo, hi, n + 2)[1:-1]


def contour_lines(table: FieldTable, column: str = "u", levels=10, mesh: Mesh | None = None):
    """``[(level, [(points, closed), ...]), ...]`` for the chosen column."""
    mesh = mesh or table_mesh(table)
    values = table.column(column)
    if np.isscalar(levels):
        levels = default_levels(values[np.isfinite(values)], int(levels))
    # NaN vertices (e.g. flagged Phi values) are kept below every level
    finite = np.where(np.isfinite(values), values, -np.inf)
    return [(float(c), level_polylines(mesh.vertices, mesh.triangles, finite, c))
            for c in levels]


def _colour(t: float) -> str:
    r, g, b = np.rint(_LOW + t * (_HIGH - _LOW)).astype(int)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_contours(source, levels=10, column: str = "u") -> str:
    """SVG text for a field CSV path (or a loaded :class:`FieldTable`)."""
    table = source if isinstance(source, FieldTable) else read_field_csv(source)
    if not table.boundary.any():
        raise FieldFormatError("no boundary points flagged")
    mesh = table_mesh(table)
    lines = contour_lines(table, column, levels, mesh)
    crit = critical_points_of(mesh, table.u)

    lo, hi = table.points.min(axis=0), table.points.max(axis=0)
    scale = (SIZE - 2 * PAD) / float(np.max(hi - lo))
    width = (hi[0] - lo[0]) * scale + 2 * PAD
    height = (hi[1] - lo[1]) * scale + 2 * PAD

    def px(p):
        p = np.atleast_2d(p)
        return PAD + (p[:, 0] - lo[0]) * scale, PAD + (hi[1] - p[:, 1]) * scale

    def xy(p):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(*px(p)))

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f"<!-- generator: hypcmc {_generator()} -->",
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
           f'viewBox="0 0 {width:.2f} {height:.2f}">',
           f"<title>{column} contours</title>"]
    boundary = table.points[mesh.boundary_order]
    out.append(f'<polygon class="boundary" points="{xy(boundary)}" '
               'fill="#f7f7f7" stroke="black" stroke-width="1.5"/>')
    cs = [c for c, _ in lines] or [0.0]
    span = (max(cs) - min(cs)) or 1.0
    for c, polys in lines:
        col = _colour((c - min(cs)) / span)
        out.append(f'<g class="level" data-level="{c:.17g}" stroke="{col}" fill="none" '
                   'stroke-width="1">')
        for pts, closed in polys:
            tag = "polygon" if closed else "polyline"
            body = pts[:-1] if closed else pts
            out.append(f'<{tag} points="{xy(body)}"/>')
        out.append("</g>")
    marks = crit.points if not crit.degenerate else np.empty((0, 2))
    for cx, cy in zip(*px(marks)):
        out.append(f'<circle class="critical" cx="{cx:.2f}" cy="{cy:.2f}" r="4" '
                   'fill="black" stroke="white"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")
