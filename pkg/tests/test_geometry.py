import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import pdist

from hypcmc.geometry import (DomainError, MeshBudgetError, circumradius, curvature_extrema, disc,
                             ellipse, load_curve, make_domain, min_enclosing_circle, triangulate)


def test_disc_curvature_is_constant():
    d = disc(1.0)
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    assert np.allclose(d.curvature(t), 1.0, atol=1e-12)


def test_ellipse_curvature_at_axis_ends():
    d = ellipse(2.0, 1.0)
    # parameter 0 is (2, 0), pi/2 is (0, 1)
    assert np.allclose(d.point(np.array([0.0, np.pi / 2])), [[2, 0], [0, 1]], atol=1e-12)
    k = d.curvature(np.array([0.0, np.pi / 2]))
    assert k == pytest.approx([2.0, 0.25], rel=1e-12)


@pytest.mark.parametrize("p,q", [(1.0, 0.0), (0.0, 1.0), (-1.0, 1.0)])
def test_degenerate_ellipse_rejected(p, q):
    with pytest.raises(DomainError):
        ellipse(p, q)


def test_unknown_kind_rejected():
    with pytest.raises(DomainError):
        make_domain("square", {"side": 1.0})


@pytest.mark.parametrize("d,expected", [
    (disc(0.6), (1 / 0.6, 1 / 0.6)),
    (ellipse(2.0, 1.0), (0.25, 2.0)),
    (ellipse(1.0, 1.0), (1.0, 1.0)),
])
def test_curvature_extrema(d, expected):
    assert curvature_extrema(d) == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize("d,R", [(disc(1.0), 1.0), (ellipse(2.0, 1.0), 2.0),
                                 (ellipse(0.5, 0.4), 0.5)])
def test_circumradius(d, R):
    assert circumradius(d) == pytest.approx(R, rel=1e-6)


def _fd_curvature(d, t, eps):
    x = [d.point(t + k * eps) for k in (-1, 0, 1)]
    dx = (x[2] - x[0]) / (2 * eps)
    ddx = (x[2] - 2 * x[1] + x[0]) / eps ** 2
    return (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / np.linalg.norm(dx, axis=1) ** 3


def test_curvature_matches_finite_differences_at_second_order():
    d = ellipse(2.0, 1.0)
    t = np.linspace(0, 2 * np.pi, 37)
    errs = [np.abs(_fd_curvature(d, t, eps) - d.curvature(t)).max() for eps in (1e-2, 5e-3)]
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_generic_curve_from_file(tmp_path):
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    pts = np.column_stack([0.5 * np.cos(t) + 1.0, 0.4 * np.sin(t) - 2.0])
    f = tmp_path / "shape.txt"
    np.savetxt(f, pts)
    d = load_curve(f)
    kmin, kmax = curvature_extrema(d)
    assert kmin == pytest.approx(0.4 / 0.25, rel=1e-3)
    assert kmax == pytest.approx(0.5 / 0.16, rel=1e-3)
    c, R = d.circumcircle
    assert R == pytest.approx(0.5, rel=1e-4)
    assert c == pytest.approx([1.0, -2.0], abs=1e-4)


def test_nonconvex_curve_rejected(tmp_path):
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    r = 1 + 0.3 * np.cos(3 * t)
    f = tmp_path / "star.txt"
    np.savetxt(f, np.column_stack([r * np.cos(t), r * np.sin(t)]))
    with pytest.raises(DomainError, match="convex"):
        load_curve(f)


def test_min_enclosing_circle_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        P = rng.normal(size=(rng.integers(2, 40), 2))
        c, R = min_enclosing_circle(P)
        assert np.all(np.linalg.norm(P - c, axis=1) <= R * (1 + 1e-9))
        # the optimum is determined by two or three points on the circle
        best = math.inf
        n = len(P)
        for i in range(n):
            for j in range(i + 1, n):
                cc = 0.5 * (P[i] + P[j])
                r = 0.5 * np.linalg.norm(P[i] - P[j])
                if np.all(np.linalg.norm(P - cc, axis=1) <= r * (1 + 1e-9)):
                    best = min(best, r)
                for k in range(j + 1, n):
                    A = np.array([P[j] - P[i], P[k] - P[i]])
                    if abs(np.linalg.det(A)) < 1e-12:
                        continue
                    b = 0.5 * np.array([A[0] @ A[0], A[1] @ A[1]])
                    cc = P[i] + np.linalg.solve(A, b)
                    r = np.linalg.norm(P[i] - cc)
                    if np.all(np.linalg.norm(P - cc, axis=1) <= r * (1 + 1e-9)):
                        best = min(best, r)
        assert R == pytest.approx(best, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0.2, 3.0), q=st.floats(0.2, 3.0))
def test_circumradius_covers_half_diameter(p, q):
    d = ellipse(p, q)
    _, pts = d.sample(512)
    assert circumradius(d) >= pdist(pts).max() / 2 * (1 - 1e-9)


def test_coarse_mesh_sanity():
    m = triangulate(disc(1.0), 0.5)
    assert len(m.triangles) >= 12
    assert np.all(m.signed_areas > 0)


def test_fine_mesh_boundary_count():
    m = triangulate(disc(1.0), 0.05)
    nb = int(m.boundary.sum())
    assert abs(nb - 2 * np.pi / 0.05) <= 0.2 * 2 * np.pi / 0.05
    assert np.all(m.signed_areas > 0)


def test_ellipse_boundary_vertices_on_curve():
    m = triangulate(ellipse(2.0, 1.0), 0.1)
    b = m.vertices[m.boundary]
    assert np.abs((b[:, 0] / 2) ** 2 + b[:, 1] ** 2 - 1).max() <= 1e-10


def test_boundary_order_is_counterclockwise_loop():
    m = triangulate(ellipse(0.5, 0.4), 0.05)
    b = m.vertices[m.boundary_order]
    assert set(m.boundary_order) == set(np.nonzero(m.boundary)[0])
    area = 0.5 * np.sum(b[:, 0] * np.roll(b[:, 1], -1) - np.roll(b[:, 0], -1) * b[:, 1])
    assert area == pytest.approx(np.pi * 0.2, rel=1e-2)


def test_mesh_is_conforming():
    m = triangulate(ellipse(0.5, 0.4), 0.05)
    e = np.sort(m.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert counts.max() == 2
    # every edge used once lies on the boundary
    once = np.unique(e, axis=0)[counts == 1]
    assert np.all(m.boundary[once])
    assert m.signed_areas.sum() == pytest.approx(np.pi * 0.2, rel=5e-3)


@pytest.mark.parametrize("d", [disc(1.0), ellipse(0.5, 0.4)])
def test_refinement_halves_max_edge(d):
    h = 0.1 if d.kind == "disc" else 0.05
    e1 = triangulate(d, h).edge_lengths.max()
    e2 = triangulate(d, h / 2).edge_lengths.max()
    assert 1 / 1.5 <= (e1 / 2) / e2 <= 1.5


def test_mesh_is_deterministic():
    a = triangulate(ellipse(0.5, 0.4), 0.05)
    b = triangulate(ellipse(0.5, 0.4), 0.05)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)


def test_mesh_budget():
    with pytest.raises(MeshBudgetError):
        triangulate(disc(1.0), 0.001, max_vertices=10000)
    with pytest.raises(ValueError):
        triangulate(disc(1.0), 1.0)


def test_locate_and_interpolate_linear_exactly():
    m = triangulate(disc(1.0), 0.2)
    f = 2 * m.vertices[:, 0] - m.vertices[:, 1] + 0.5
    pts = np.array([[0.1, 0.2], [-0.3, 0.5], [0.0, 0.0]])
    assert m.interpolate(f, pts) == pytest.approx(2 * pts[:, 0] - pts[:, 1] + 0.5)
    assert np.isnan(m.interpolate(f, np.array([[2.0, 0.0]]))[0])
