"""Strictly convex planar domains and their triangulations.

Every boundary is a closed curve ``t -> gamma(t)`` with ``t`` in ``[0, 2*pi)``,
traversed counter-clockwise.  Discs and ellipses are analytic; generic curves
are periodic cubic splines through a list of boundary samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import Delaunay

KINDS = ("disc", "ellipse", "curve")

# boundary resolution used for curvature, perimeter and circumradius sampling
N_SAMPLES = 2048
CONVEXITY_TOL = 1e-8
MAX_VERTICES = 400_000


class DomainError(ValueError):
    """The boundary data do not describe a strictly convex closed curve."""


class MeshBudgetError(RuntimeError):
    """Requested resolution exceeds the configured vertex budget."""


@dataclass(frozen=True, eq=False)
class DomainSpec:
    kind: str
    params: Mapping[str, object]
    center: tuple[float, float] = (0.0, 0.0)
    _spline: CubicSpline | None = field(default=None, repr=False)

    # -- parameterization -------------------------------------------------
    def point(self, t) -> np.ndarray:
        """Boundary points ``gamma(t)``, shape ``(..., 2)``."""
        return self._eval(np.asarray(t, dtype=float), 0)

    def tangent(self, t) -> np.ndarray:
        return self._eval(np.asarray(t, dtype=float), 1)

    def second_derivative(self, t) -> np.ndarray:
        return self._eval(np.asarray(t, dtype=float), 2)

    def _eval(self, t, nu):
        cx, cy = self.center
        if self.kind == "disc":
            R = self.params["R"]
            p, q = R, R
        elif self.kind == "ellipse":
            p, q = self.params["p"], self.params["q"]
        else:
            return self._spline(np.mod(t, 2 * np.pi), nu)
        # derivatives of (p cos t, q sin t) cycle with period 4
        c, s = np.cos(t), np.sin(t)
        x = [c, -s, -c, s][nu % 4] * p
        y = [s, c, -s, -c][nu % 4] * q
        if nu == 0:
            x, y = x + cx, y + cy
        return np.stack([x, y], axis=-1)

    def curvature(self, t) -> np.ndarray:
        """Signed curvature; positive everywhere for a strictly convex domain."""
        d1 = self.tangent(t)
        d2 = self.second_derivative(t)
        cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        return cross / np.hypot(d1[..., 0], d1[..., 1]) ** 3

    def sample(self, n: int = N_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return t, self.point(t)

    # -- derived geometry --------------------------------------------------
    @cached_property
    def perimeter(self) -> float:
        t, _ = self.sample(8 * N_SAMPLES)
        speed = np.linalg.norm(self.tangent(t), axis=-1)
        return float(speed.mean() * 2 * np.pi)

    @cached_property
    def diameter(self) -> float:
        _, pts = self.sample(512)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        return float(d.max())

    @cached_property
    def area(self) -> float:
        _, pts = self.sample(8 * N_SAMPLES)
        x, y = pts[:, 0], pts[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @cached_property
    def circumcircle(self) -> tuple[np.ndarray, float]:
        _, pts = self.sample()
        return min_enclosing_circle(pts)

    def outward_normal(self, t) -> np.ndarray:
        d1 = self.tangent(t)
        n = np.stack([d1[..., 1], -d1[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Point-in-domain test against a dense boundary polygon."""
        _, poly = self.sample()
        pts = np.atleast_2d(pts)
        e = np.roll(poly, -1, axis=0) - poly
        rel = pts[:, None, :] - poly[None, :, :]
        cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
        return np.all(cross > 0, axis=1)

    def boundary_distance(self, pts: np.ndarray, n: int = N_SAMPLES) -> np.ndarray:
        """Unsigned distance from ``pts`` to the boundary polygon with ``n`` sides."""
        _, poly = self.sample(n)
        a = poly
        b = np.roll(poly, -1, axis=0)
        ab = b - a
        pts = np.atleast_2d(pts)
        out = np.full(len(pts), np.inf)
        # chunked to bound memory
        for s in range(0, len(pts), 2048):
            p = pts[s:s + 2048, None, :]
            ap = p - a[None]
            tt = np.clip(np.sum(ap * ab[None], axis=-1) / np.sum(ab * ab, axis=-1)[None], 0.0, 1.0)
            proj = a[None] + tt[..., None] * ab[None]
            out[s:s + 2048] = np.linalg.norm(p - proj, axis=-1).min(axis=1)
        return out


def make_domain(kind: str, params: Mapping[str, object],
                center: tuple[float, float] = (0.0, 0.0)) -> DomainSpec:
    """Build a validated domain.

    ``params`` holds ``R`` for a disc, ``p`` and ``q`` for an ellipse and
    ``points`` (an ``(n, 2)`` array, closed implicitly) for a generic curve.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown domain kind {kind!r}; expected one of {KINDS}")
    center = (float(center[0]), float(center[1]))
    spline = None
    if kind == "disc":
        R = float(params["R"])
        if not R > 0 or not math.isfinite(R):
            raise DomainError(f"disc radius must be positive, got {R}")
        params = {"R": R}
    elif kind == "ellipse":
        p, q = float(params["p"]), float(params["q"])
        if not (p > 0 and q > 0) or not (math.isfinite(p) and math.isfinite(q)):
            raise DomainError(f"degenerate ellipse: semi-axes must be positive, got p={p}, q={q}")
        params = {"p": p, "q": q}
    else:
        pts = np.asarray(params["points"], dtype=float)
        spline = _periodic_spline(pts)
        params = {"points": pts}
        center = tuple(float(v) for v in pts.mean(axis=0))
    d = DomainSpec(kind, params, center, spline)
    _check_convex(d)
    return d


def disc(R: float, center=(0.0, 0.0)) -> DomainSpec:
    return make_domain("disc", {"R": R}, center)


def ellipse(p: float, q: float, center=(0.0, 0.0)) -> DomainSpec:
    return make_domain("ellipse", {"p": p, "q": q}, center)


def load_curve(path: str | Path) -> DomainSpec:
    """Read a two-column ``x y`` point file as a generic closed curve."""
    try:
        pts = np.loadtxt(path, dtype=float, ndmin=2)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None
    if pts.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns, got {pts.shape[1]}")
    return make_domain("curve", {"points": pts})


def _periodic_spline(pts: np.ndarray) -> CubicSpline:
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
        raise DomainError("a generic curve needs at least 8 points given as an (n, 2) array")
    if np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    x, y = pts[:, 0], pts[:, 1]
    signed_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if signed_area < 0:
        pts = pts[::-1]
    closed = np.vstack([pts, pts[:1]])
    chord = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    if np.any(chord <= 0):
        raise DomainError("repeated consecutive boundary points")
    t = np.concatenate([[0.0], np.cumsum(chord)])
    t *= 2 * np.pi / t[-1]
    return CubicSpline(t, closed, bc_type="periodic")


def _check_convex(d: DomainSpec) -> None:
    t, _ = d.sample()
    kappa = d.curvature(t)
    floor = CONVEXITY_TOL / d.diameter
    if not np.all(np.isfinite(kappa)) or kappa.min() <= floor:
        raise DomainError(
            f"boundary is not strictly convex: min curvature {kappa.min():.3e} <= {floor:.3e}")
    # total turning of a simple convex curve is exactly one revolution
    speed = np.linalg.norm(d.tangent(t), axis=-1)
    turning = float(np.sum(kappa * speed) * (2 * np.pi / len(t)))
    if abs(turning - 2 * np.pi) > 1e-3:
        raise DomainError(f"boundary is not a simple closed curve (total turning {turning:.4f})")


def curvature_extrema(d: DomainSpec, n: int = 8 * N_SAMPLES) -> tuple[float, float]:
    """Return ``(kappa_min, kappa_0)``, the extremes of boundary curvature."""
    t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    kappa = d.curvature(t)
    return float(kappa.min()), float(kappa.max())


def circumradius(d: DomainSpec) -> float:
    return d.circumcircle[1]


# -- minimum enclosing circle ---------------------------------------------

def min_enclosing_circle(points, seed: int = 0) -> tuple[np.ndarray, float]:
    """Smallest circle containing ``points`` (Welzl, randomized incremental).

    Returns ``(center, radius)``.  The shuffle is seeded so the result is
    deterministic.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise ValueError("no points")
    order = np.random.default_rng(seed).permutation(len(pts))
    P = [tuple(p) for p in pts[order]]
    c = (P[0][0], P[0][1], 0.0)
    for i in range(1, len(P)):
        if not _inside(c, P[i]):
            c = _mec_one(P[:i], P[i])
    return np.array(c[:2]), c[2]


def _inside(c, p, eps=1e-12):
    return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1 + eps) + eps


def _mec_one(P, p):
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(P):
        if not _inside(c, q):
            c = _mec_two(P[:i], p, q)
    return c


def _mec_two(P, p, q):
    c = _diameter_circle(p, q)
    for r in P:
        if not _inside(c, r):
            c = _circumcircle(p, q, r) or c
    return c


def _diameter_circle(p, q):
    cx, cy = (p[0] + q[0]) / 2, (p[1] + q[1]) / 2
    return (cx, cy, math.hypot(p[0] - cx, p[1] - cy))


def _circumcircle(a, b, c):
    ax, ay = a
    bx, by = b[0] - ax, b[1] - ay
    cx, cy = c[0] - ax, c[1] - ay
    d = 2 * (bx * cy - by * cx)
    if d == 0:
        return None
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    r = max(math.hypot(ux, uy), math.hypot(ux - bx, uy - by), math.hypot(ux - cx, uy - cy))
    return (ax + ux, ay + uy, r)


# -- triangulation ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming linear triangulation.

    ``boundary_order`` lists the boundary vertices counter-clockwise and
    ``boundary_t`` their curve parameters.
    """
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    h: float
    boundary_order: np.ndarray
    boundary_t: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Constant gradients of the three hat functions on each triangle, ``(M, 3, 2)``."""
        p = self.vertices[self.triangles]
        two_area = 2.0 * self.signed_areas
        # grad phi_k = rot90(p_{k+2} - p_{k+1}) / (2 area)
        g = np.empty((len(p), 3, 2))
        for k in range(3):
            e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
            g[:, k, 0] = -e[:, 1] / two_area
            g[:, k, 1] = e[:, 0] / two_area
        return g

    @cached_property
    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        m = np.zeros(self.n_vertices)
        np.add.at(m, self.triangles.ravel(), np.repeat(self.signed_areas / 3.0, 3))
        return m

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        """One-ring vertex neighbours."""
        e = self.edges
        both = np.concatenate([e, e[:, ::-1]])
        both = both[np.argsort(both[:, 0], kind="stable")]
        split = np.searchsorted(both[:, 0], np.arange(self.n_vertices + 1))
        return [both[split[i]:split[i + 1], 1] for i in range(self.n_vertices)]

    @cached_property
    def vertex_triangles(self) -> list[np.ndarray]:
        flat = self.triangles.ravel()
        order = np.argsort(flat, kind="stable")
        split = np.searchsorted(flat[order], np.arange(self.n_vertices + 1))
        return [order[split[i]:split[i + 1]] // 3 for i in range(self.n_vertices)]

    def locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Triangle index and barycentric coordinates of each point (``-1`` if outside)."""
        pts = np.atleast_2d(pts)
        tri = self.triangles
        p = self.vertices[tri]
        tri_idx = np.full(len(pts), -1)
        bary = np.zeros((len(pts), 3))
        # coarse bucketing by triangle bounding boxes
        lo, hi = p.min(axis=1), p.max(axis=1)
        for i, x in enumerate(pts):
            cand = np.nonzero(np.all((lo <= x + 1e-12) & (hi >= x - 1e-12), axis=1))[0]
            for k in cand:
                lam = _barycentric(p[k], x)
                if lam.min() >= -1e-10:
                    tri_idx[i], bary[i] = k, lam
                    break
        return tri_idx, bary

    def interpolate(self, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
        idx, lam = self.locate(pts)
        out = np.full(len(idx), np.nan)
        ok = idx >= 0
        out[ok] = np.sum(values[self.triangles[idx[ok]]] * lam[ok], axis=1)
        return out

    def permuted(self, perm: np.ndarray) -> "Mesh":
        """Same mesh with vertex ``i`` renamed ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return Mesh(self.vertices[inv], perm[self.triangles], self.boundary[inv], self.h,
                    perm[self.boundary_order], self.boundary_t)


def _barycentric(p, x):
    T = np.array([[p[0, 0] - p[2, 0], p[1, 0] - p[2, 0]],
                  [p[0, 1] - p[2, 1], p[1, 1] - p[2, 1]]])
    l12 = np.linalg.solve(T, x - p[2])
    return np.array([l12[0], l12[1], 1.0 - l12.sum()])


def triangulate(d: DomainSpec, h: float, max_vertices: int = MAX_VERTICES,
                smoothing_sweeps: int = 4) -> Mesh:
    """Boundary-conforming Delaunay mesh with target edge length ``h``.

    Boundary vertices are placed on the exact curve at equal arc-length
    spacing; interior vertices start from an equilateral lattice and are
    relaxed by a few Laplacian smoothing sweeps.
    """
    h = float(h)
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if h >= d.diameter / 2:
        raise ValueError(f"h={h} too coarse: need h < diam/2 = {d.diameter / 2:.4g}")
    estimate = d.area / (h * h * math.sqrt(3) / 2) + d.perimeter / h
    if estimate > max_vertices:
        raise MeshBudgetError(
            f"h={h} needs about {estimate:.0f} vertices, budget is {max_vertices}")

    # boundary at equal arc length
    nb = max(12, int(math.ceil(d.perimeter / h)))
    tt = np.linspace(0.0, 2 * np.pi, 16 * N_SAMPLES + 1)
    speed = np.linalg.norm(d.tangent(tt), axis=-1)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(tt))])
    ds = s[-1] / nb
    t_b = np.interp(np.arange(nb) * ds, s, tt)
    bpts = d.point(t_b)

    # staggered inner row at equilateral height keeps boundary triangles regular
    t_m = np.interp((np.arange(nb) + 0.5) * ds, s, tt)
    offset = ds * math.sqrt(3) / 2
    layer = d.point(t_m) - offset * d.outward_normal(t_m)
    layer = layer[d.contains(layer)]
    layer = layer[d.boundary_distance(layer) > 0.5 * offset]

    # equilateral lattice, kept away from the boundary
    _, poly = d.sample()
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    dy = h * math.sqrt(3) / 2
    c = np.asarray(d.center)
    rows = np.arange(math.floor((lo[1] - c[1]) / dy) - 1, math.ceil((hi[1] - c[1]) / dy) + 2)
    cols = np.arange(math.floor((lo[0] - c[0]) / h) - 1, math.ceil((hi[0] - c[0]) / h) + 2)
    J, I = np.meshgrid(rows, cols, indexing="ij")
    lattice = np.stack([c[0] + (I + 0.5 * (J % 2)) * h, c[1] + J * dy], axis=-1).reshape(-1, 2)
    inside = d.contains(lattice)
    lattice = lattice[inside]
    lattice = lattice[d.boundary_distance(lattice) > 1.2 * h]

    pts = np.vstack([bpts, layer, lattice])
    nbnd = len(bpts)
    tri = _delaunay(pts)
    for _ in range(smoothing_sweeps):
        pts = _smooth(pts, tri, nbnd)
        tri = _delaunay(pts)

    boundary = np.zeros(len(pts), dtype=bool)
    boundary[:nbnd] = True
    return Mesh(pts, tri, boundary, h, np.arange(nbnd), t_b)


def _delaunay(pts: np.ndarray) -> np.ndarray:
    tri = Delaunay(pts, qhull_options="Qbb Qc Qz Q12").simplices.astype(np.int64)
    p = pts[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    neg = area < 0
    tri[neg] = tri[neg][:, [0, 2, 1]]
    # drop slivers spanning nearly collinear hull points
    keep = np.abs(area) > 1e-12 * np.abs(area).max()
    tri = tri[keep]
    # deterministic ordering independent of qhull internals
    return tri[np.lexsort(tri.T[::-1])]


def _smooth(pts: np.ndarray, tri: np.ndarray, nbnd: int) -> np.ndarray:
    n = len(pts)
    e = tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    e = np.unique(np.sort(e, axis=1), axis=0)
    acc = np.zeros((n, 2))
    cnt = np.zeros(n)
    for a, b in ((0, 1), (1, 0)):
        np.add.at(acc, e[:, a], pts[e[:, b]])
        np.add.at(cnt, e[:, a], 1.0)
    out = pts.copy()
    out[nbnd:] = acc[nbnd:] / cnt[nbnd:, None]
    return out
