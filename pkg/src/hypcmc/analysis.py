"""Quantities and theorem checks evaluated on discrete solutions.

Everything here works from the per-vertex recovered gradient
``SolutionField.vertex_gradients``.  Pass/fail decisions use an explicit
discretization slack ``c * h`` whose constants live in :class:`Slack`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from hypcmc import closed_form as cf
from hypcmc.contour import component_count
from hypcmc.geometry import DomainSpec, curvature_extrema
from hypcmc.solver import SolutionField, vertex_gradients

THEOREM_IDS = (
    "boundary_grad_max",
    "grad_estimate_1_1",
    "lemma_2_2",
    "min_principle_2_1",
    "nodal_structure",
    "phi_max_alpha2",
    "phi_min_boundary",
    "um_lower_4_1",
    "um_upper_3_7",
    "unique_critical_2_1",
)
PASS, FAIL, NA = "pass", "fail", "not-applicable"

PHI_MIN_ALPHAS = (1.0, 1.5, 2.0)
NODAL_ANGLES = 8


class PhiDomainError(ValueError):
    """Too many vertices violate ``1 - H sqrt(1 + q^2) > 0``."""


@dataclass(frozen=True)
class Slack:
    """Per-check slack constants ``c``; a check passes when ``margin >= -c h``.

    Frozen after calibration on radial-cap baselines at ``h = 0.05``.
    """
    gradient: float = 1.0       # gradient bounds
    height: float = 0.1         # u_M sandwich
    rho: float = 1.0            # positivity of 1 - H W
    phi_const: float = 2.5      # spread of Phi(x;1) for radial solutions
    min_principle: float = 10.0  # times h^2 * a
    localization: float = 2.0   # critical point / Phi argmax distance, in units of h


# -- Phi ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhiField:
    alpha: float
    values: np.ndarray
    H: float
    a: float
    rho: np.ndarray
    flagged: np.ndarray


def rho_values(s: SolutionField) -> np.ndarray:
    return 1.0 - s.H * np.sqrt(1.0 + s.grad_norm ** 2)


def phi(s: SolutionField, alpha: float, slack: Slack | None = None) -> PhiField:
    """``log((1 + q^2) / (1 - H sqrt(1 + q^2))^2 * u^(2 alpha))`` per vertex.

    Vertices where ``1 - H sqrt(1 + q^2)`` falls below ``-c h`` are flagged
    and get ``nan``; more than 1% flagged raises :class:`PhiDomainError`.
    """
    slack = slack or Slack()
    q2 = s.grad_norm ** 2
    rho = 1.0 - s.H * np.sqrt(1.0 + q2)
    flagged = rho < -slack.rho * s.h
    if flagged.mean() > 0.01:
        raise PhiDomainError(
            f"{flagged.sum()} of {len(rho)} vertices have 1 - H sqrt(1+q^2) < {-slack.rho * s.h:.3g}")
    with np.errstate(divide="ignore"):
        vals = np.log1p(q2) - 2.0 * np.log(np.abs(rho)) + 2.0 * alpha * np.log(s.u)
    vals = np.where(flagged | (rho == 0), np.nan, vals)
    return PhiField(float(alpha), vals, s.H, s.a, rho, flagged)


# -- critical points ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CriticalPointSet:
    points: np.ndarray
    u: np.ndarray
    grad: np.ndarray
    degenerate: bool = False

    @property
    def count(self) -> int:
        return len(self.points)


def find_critical_points(s: SolutionField, tol: float = 1e-8) -> CriticalPointSet:
    return critical_points_of(s.mesh, s.u, tol)


def critical_points_of(mesh, u, tol: float = 1e-8) -> CriticalPointSet:
    """Zeros of the piecewise-linear interpolant of the recovered gradient.

    Zeros closer than ``h`` are merged, then each is refined to the
    stationary point of a least-squares quadratic fitted to ``u`` on the
    two-ring of the nearest vertex.  If every vertex has ``|Du| <= tol`` the
    field is degenerate and all vertices are returned.
    """
    u = np.asarray(u, dtype=float)
    G = vertex_gradients(mesh, u)
    gn = np.linalg.norm(G, axis=1)
    if gn.max() <= tol:
        return CriticalPointSet(mesh.vertices.copy(), u.copy(), gn.copy(), degenerate=True)

    tri = mesh.triangles
    P = mesh.vertices[tri]
    g0, g1, g2 = G[tri[:, 0]], G[tri[:, 1]], G[tri[:, 2]]
    a1, a2 = g1 - g0, g2 - g0
    det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = (-g0[:, 0] * a2[:, 1] + g0[:, 1] * a2[:, 0]) / det
        l2 = (-a1[:, 0] * g0[:, 1] + a1[:, 1] * g0[:, 0]) / det
    eps = 1e-12
    hit = (det != 0) & (l1 >= -eps) & (l2 >= -eps) & (l1 + l2 <= 1 + eps)
    cand = P[hit, 0] + l1[hit, None] * (P[hit, 1] - P[hit, 0]) + l2[hit, None] * (P[hit, 2] - P[hit, 0])
    small = np.nonzero((gn <= tol) & ~mesh.boundary)[0]
    cand = np.vstack([cand, mesh.vertices[small]])

    clusters = _cluster(cand, mesh.h)
    pts, us, gs = [], [], []
    for c in clusters:
        x, uval = _refine(mesh, u, c)
        pts.append(x)
        us.append(uval)
        gs.append(float(np.linalg.norm(_interp_grad(mesh, G, x))))
    return CriticalPointSet(np.array(pts).reshape(-1, 2), np.array(us), np.array(gs))


def _cluster(points, radius):
    """Means of the groups of points linked by distances ``<= radius``."""
    if len(points) == 0:
        return []
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    n = len(points)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    k, labels = connected_components(adj, directed=False)
    return [points[labels == j].mean(axis=0) for j in range(k)]


def _two_ring(mesh, i):
    ring = set(mesh.neighbors[i].tolist()) | {i}
    for j in list(ring):
        ring |= set(mesh.neighbors[j].tolist())
    return np.array(sorted(ring))


def _fit_quadratic(xy, u):
    """Least-squares ``u ~ c + b.x + x^T A x / 2``; returns ``(c, b, A)``."""
    x, y = xy[:, 0], xy[:, 1]
    V = np.column_stack([np.ones_like(x), x, y, 0.5 * x * x, x * y, 0.5 * y * y])
    coef, *_ = np.linalg.lstsq(V, u, rcond=None)
    c, bx, by, axx, axy, ayy = coef
    return c, np.array([bx, by]), np.array([[axx, axy], [axy, ayy]])


def _refine(mesh, u, x0):
    i = int(np.argmin(np.linalg.norm(mesh.vertices - x0, axis=1)))
    ring = _two_ring(mesh, i)
    origin = mesh.vertices[i]
    c, b, A = _fit_quadratic(mesh.vertices[ring] - origin, u[ring])
    try:
        dx = -np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        dx = None
    if dx is None or not np.all(np.isfinite(dx)) or np.linalg.norm(origin + dx - x0) > 2 * mesh.h:
        x = np.asarray(x0, dtype=float)
        dx = x - origin
    else:
        x = origin + dx
    return x, float(c + b @ dx + 0.5 * dx @ A @ dx)


def _interp_grad(mesh, G, x):
    idx, lam = mesh.locate(np.atleast_2d(x))
    if idx[0] < 0:
        return np.array([np.nan, np.nan])
    return lam[0] @ G[mesh.triangles[idx[0]]]


# -- nodal sets -----------------------------------------------------------

@dataclass(frozen=True)
class NodalSummary:
    theta: float
    boundary_zero_count: int
    component_count: int


def directional_derivative(s: SolutionField, theta: float) -> np.ndarray:
    """``v(theta) = Du . (cos theta, sin theta)`` per vertex."""
    return s.vertex_gradients @ np.array([math.cos(theta), math.sin(theta)])


def boundary_sign_changes(values: np.ndarray, deadband: float) -> int:
    """Sign changes around a closed sequence, ignoring ``|v| <= deadband``."""
    signs = np.sign(values[np.abs(values) > deadband])
    if len(signs) < 2:
        return 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


def nodal_summary(s: SolutionField, theta: float) -> NodalSummary:
    v = directional_derivative(s, theta)
    vmax = np.abs(v).max()
    if vmax <= 1e-12 * max(1.0, s.u_M):
        raise ValueError("degenerate field: directional derivative vanishes identically")
    vb = v[s.mesh.boundary_order]
    zeros = boundary_sign_changes(vb, 1e-8 * vmax)
    comps = component_count(s.mesh.vertices, s.mesh.triangles, v, 0.0)
    return NodalSummary(float(theta), zeros, comps)


# -- boundary normal identity ---------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryNormalData:
    u_n: np.ndarray
    u_nn: np.ndarray
    kappa: np.ndarray
    residual: np.ndarray


def _fit_cubic_jet(xy, u):
    """Gradient and Hessian at the origin of a least-squares cubic through ``(xy, u)``."""
    x, y = xy[:, 0], xy[:, 1]
    V = np.column_stack([np.ones_like(x), x, y, 0.5 * x * x, x * y, 0.5 * y * y,
                         x ** 3, x * x * y, x * y * y, y ** 3])
    coef, *_ = np.linalg.lstsq(V, u, rcond=None)
    return coef[1:3], np.array([[coef[3], coef[4]], [coef[4], coef[5]]])


def boundary_normal_data(s: SolutionField, d: DomainSpec, radius: float = 4.0) -> BoundaryNormalData:
    """Normal derivatives at boundary vertices from one-sided cubic fits.

    ``u_n`` and ``u_nn`` are the first and second outward normal derivatives
    of a least-squares cubic through the vertices within ``radius * h``
    (all of which lie on the interior side).  ``residual`` is the boundary
    form of the equation,
    ``u_nn/(1+u_n^2)^(3/2) + kappa u_n/sqrt(1+u_n^2) + (2/u)(1/sqrt(1+u_n^2) - H)``.
    """
    mesh = s.mesh
    bidx = mesh.boundary_order
    normals = d.outward_normal(mesh.boundary_t)
    kappa = d.curvature(mesh.boundary_t)
    un = np.empty(len(bidx))
    unn = np.empty(len(bidx))
    r = radius * mesh.h
    for k, i in enumerate(bidx):
        rel = mesh.vertices - mesh.vertices[i]
        near = np.nonzero(np.einsum("nd,nd->n", rel, rel) <= r * r)[0]
        b, A = _fit_cubic_jet(rel[near], s.u[near] - s.u[i])
        n = normals[k]
        un[k] = b @ n
        unn[k] = n @ A @ n
    W = np.sqrt(1.0 + un * un)
    ub = s.u[bidx]
    res = unn / W ** 3 + kappa * un / W + (2.0 / ub) * (1.0 / W - s.H)
    return BoundaryNormalData(un, unn, kappa, res)


def boundary_normal_residual(s: SolutionField, d: DomainSpec) -> np.ndarray:
    return boundary_normal_data(s, d).residual


# -- theorem reports ------------------------------------------------------

@dataclass
class TheoremReport:
    theorem_id: str
    status: str
    margin: float
    details: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = _json_float(self.margin)
        return d


def _json_float(x):
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _status(margin, allowance):
    return PASS if margin >= -allowance else FAIL


@dataclass
class _Context:
    s: SolutionField
    d: DomainSpec
    slack: Slack
    kappa0: float = field(init=False)
    R: float = field(init=False)
    radial: bool = field(init=False)
    crit: CriticalPointSet = field(init=False)

    def __post_init__(self):
        self.kappa0 = curvature_extrema(self.d)[1]
        self.R = self.d.circumcircle[1]
        self.radial = self.d.kind == "disc"
        self.crit = find_critical_points(self.s)


def _check_grad_estimate(c: _Context) -> TheoremReport:
    s = c.s
    qmax = float(s.grad_norm.max())
    try:
        bound = cf.gradient_bound(s.H, s.u_M, s.a)
    except cf.BoundUndefinedError as exc:
        return TheoremReport("grad_estimate_1_1", NA, math.nan, str(exc))
    margin = bound - qmax
    return TheoremReport("grad_estimate_1_1", _status(margin, c.slack.gradient * s.h), margin,
                         f"max|Du|={qmax:.6g} bound={bound:.6g} (u_M={s.u_M:.6g})")


def _check_min_principle(c: _Context) -> TheoremReport:
    s = c.s
    if s.H >= 1:
        return TheoremReport("min_principle_2_1", NA, math.nan, "needs H < 1")
    interior = ~s.mesh.boundary
    margin = float((s.u[interior] - s.a).min())
    allowance = c.slack.min_principle * s.h ** 2 * s.a
    return TheoremReport("min_principle_2_1", _status(margin, allowance), margin,
                         f"min interior u - a = {margin:.6g}")


def _check_lemma22(c: _Context) -> TheoremReport:
    s = c.s
    if not 0 < s.H < 1:
        return TheoremReport("lemma_2_2", NA, math.nan, "needs 0 < H < 1")
    qmax = float(s.grad_norm.max())
    bound = cf.lemma22_bound(s.H)
    margin = bound - qmax
    rho_min = float(rho_values(s).min())
    ok = margin >= -c.slack.gradient * s.h and rho_min >= -c.slack.rho * s.h
    return TheoremReport("lemma_2_2", PASS if ok else FAIL, margin,
                         f"max|Du|={qmax:.6g} bound={bound:.6g} min(1-H W)={rho_min:.6g}")


def _check_unique_critical(c: _Context) -> TheoremReport:
    s, crit = c.s, c.crit
    if crit.degenerate:
        return TheoremReport("unique_critical_2_1", NA, math.nan, "degenerate field: Du vanishes")
    if crit.count != 1:
        return TheoremReport("unique_critical_2_1", FAIL, -float(abs(crit.count - 1)),
                             f"found {crit.count} critical points")
    dist = float(np.linalg.norm(crit.points[0] - s.argmax))
    margin = c.slack.localization * s.h - dist
    return TheoremReport("unique_critical_2_1", PASS if margin >= 0 else FAIL, margin,
                         f"count=1 at ({crit.points[0][0]:.6g}, {crit.points[0][1]:.6g}); "
                         f"distance to argmax u = {dist:.3g}")


def _check_boundary_grad(c: _Context) -> TheoremReport:
    s = c.s
    q = s.grad_norm
    margin = float(q[s.mesh.boundary].max() - q.max())
    status = PASS if margin >= 0 else FAIL
    return TheoremReport("boundary_grad_max", status, margin,
                         f"max over boundary {q[s.mesh.boundary].max():.6g}, overall {q.max():.6g}")


def _check_phi_max(c: _Context) -> TheoremReport:
    s, crit = c.s, c.crit
    if crit.degenerate or crit.count != 1:
        return TheoremReport("phi_max_alpha2", NA, math.nan, "needs exactly one critical point")
    try:
        p = phi(s, 2.0, c.slack)
    except PhiDomainError as exc:
        return TheoremReport("phi_max_alpha2", NA, math.nan, str(exc))
    x = s.mesh.vertices[int(np.nanargmax(p.values))]
    dist = float(np.linalg.norm(x - crit.points[0]))
    margin = c.slack.localization * s.h - dist
    return TheoremReport("phi_max_alpha2", PASS if margin >= 0 else FAIL, margin,
                         f"argmax Phi(x;2) at distance {dist:.3g} from the critical point")


def _check_phi_min(c: _Context) -> TheoremReport:
    s = c.s
    b = s.mesh.boundary
    parts, margins, failed = [], [], False
    for alpha in PHI_MIN_ALPHAS:
        try:
            p = phi(s, alpha, c.slack)
        except PhiDomainError as exc:
            return TheoremReport("phi_min_boundary", NA, math.nan, str(exc))
        v = p.values
        spread = float(np.nanmax(v) - np.nanmin(v))
        if alpha == 1.0 and (c.radial or spread <= c.slack.phi_const * s.h):
            # radial solutions make Phi(x;1) constant; near-radial ones are ambiguous
            m = c.slack.phi_const * s.h - spread
            if c.radial:
                margins.append(m)
                failed |= m < 0
                parts.append(f"alpha=1 radial: spread {spread:.3g}")
            else:
                parts.append(f"alpha=1 degenerate-near-radial: spread {spread:.3g}")
            continue
        m = float(np.nanmin(v[~b]) - np.nanmin(v[b]))
        margins.append(m)
        failed |= m < 0
        parts.append(f"alpha={alpha:g}: min interior - min boundary = {m:.3g}")
    margin = min(margins) if margins else math.nan
    status = NA if not margins else (FAIL if failed else PASS)
    return TheoremReport("phi_min_boundary", status, margin, "; ".join(parts))


def _check_um_lower(c: _Context) -> TheoremReport:
    s = c.s
    lower = cf.um_lower_bound(s.H, c.kappa0)
    margin = s.u_M - lower
    return TheoremReport("um_lower_4_1", _status(margin, c.slack.height * s.h), margin,
                         f"u_M={s.u_M:.6g} >= (1-H)/kappa0={lower:.6g}")


def _check_um_upper(c: _Context) -> TheoremReport:
    s = c.s
    try:
        upper = cf.um_upper_bound(s.H, c.R, s.a)
    except cf.NoCapError as exc:
        return TheoremReport("um_upper_3_7", NA, math.nan, str(exc))
    margin = upper - s.u_M
    return TheoremReport("um_upper_3_7", _status(margin, c.slack.height * s.h), margin,
                         f"u_M={s.u_M:.6g} <= m(1-H)={upper:.6g} (circumradius {c.R:.6g})")


def _check_nodal(c: _Context) -> TheoremReport:
    s, crit = c.s, c.crit
    if crit.degenerate:
        return TheoremReport("nodal_structure", NA, math.nan, "degenerate field")
    bad = []
    for k in range(NODAL_ANGLES):
        theta = 2 * math.pi * k / NODAL_ANGLES
        ns = nodal_summary(s, theta)
        if ns.boundary_zero_count != 2 or ns.component_count != 1:
            bad.append(f"theta={theta:.4g}: zeros={ns.boundary_zero_count} "
                       f"components={ns.component_count}")
    margin = float(-len(bad))
    return TheoremReport("nodal_structure", PASS if not bad else FAIL, margin,
                         "; ".join(bad) or f"{NODAL_ANGLES} directions: 2 boundary zeros, 1 nodal line")


_CHECKS = {
    "boundary_grad_max": _check_boundary_grad,
    "grad_estimate_1_1": _check_grad_estimate,
    "lemma_2_2": _check_lemma22,
    "min_principle_2_1": _check_min_principle,
    "nodal_structure": _check_nodal,
    "phi_max_alpha2": _check_phi_max,
    "phi_min_boundary": _check_phi_min,
    "um_lower_4_1": _check_um_lower,
    "um_upper_3_7": _check_um_upper,
    "unique_critical_2_1": _check_unique_critical,
}


def verify_all(s: SolutionField, d: DomainSpec, checks=None,
               slack: Slack | None = None) -> list[TheoremReport]:
    """Run the theorem checks on a converged solution, sorted by ``theorem_id``."""
    checks = THEOREM_IDS if checks is None else tuple(checks)
    unknown = set(checks) - set(THEOREM_IDS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    if s.H >= 1.0:
        # horosphere sanity mode: the theorems all assume H < 1
        return [TheoremReport(t, NA, math.nan, f"H={s.H:g}: theorem requires H < 1")
                for t in sorted(checks)]
    ctx = _Context(s, d, slack or Slack())
    return sorted((_CHECKS[t](ctx) for t in checks), key=lambda r: r.theorem_id)
