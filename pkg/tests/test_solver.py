import math

import numpy as np
import pytest

from hypcmc import kernels
from hypcmc.closed_form import radial_cap
from hypcmc.geometry import disc, ellipse, triangulate
from hypcmc.solver import (NonConvergenceError, SolutionField, SolverConfig, gradient_field,
                           jacobian, mean_curvature, residual, residual_norm, solve_dirichlet,
                           zeroth_order_coefficient)

from conftest import MATRIX_DOMAINS, MATRIX_H, mesh_for, solved

MESH = triangulate(disc(1.0), 0.1)


def max_error(s, cap):
    return float(np.abs(s.u - cap(s.mesh.vertices)).max())


# -- residual -------------------------------------------------------------

def test_horosphere_is_exact():
    F = residual(MESH, np.ones(MESH.n_vertices), 1.0, 1.0)
    assert np.abs(F).max() <= 1e-14


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_constant_state_residual(a):
    F = residual(MESH, np.full(MESH.n_vertices, a), 0.0, a)
    interior = ~MESH.boundary
    # weak residual divided by the lumped mass gives the pointwise value
    assert F[interior] / MESH.lumped_mass[interior] == pytest.approx(-2 / a, rel=1e-12)
    assert np.all(F[MESH.boundary] == 0)


def test_sampled_cap_residual_is_second_order():
    cap = radial_cap(0.0, 1.0)
    norms = []
    for h in (0.1, 0.05, 0.025):
        m = mesh_for("disc", (1.0,), h)
        norms.append(residual_norm(residual(m, cap(m.vertices), 0.0, 1.0)))
        assert norms[-1] <= 0.05 * h * h
    ratios = [norms[i] / norms[i + 1] for i in range(2)]
    assert min(ratios) >= 3.5


def test_residual_rejects_nonpositive():
    u = np.ones(MESH.n_vertices)
    u[0] = 0.0
    with pytest.raises(ValueError, match="positive"):
        residual(MESH, u, 0.0, 1.0)
    with pytest.raises(ValueError, match="shape"):
        residual(MESH, u[:-1], 0.0, 1.0)


# -- Jacobian -------------------------------------------------------------

def _direction(rng, n):
    d = rng.normal(size=n)
    return d / np.linalg.norm(d)


def test_jacobian_central_difference_at_constant_state():
    rng = np.random.default_rng(1)
    u = np.full(MESH.n_vertices, 2.0)
    J = jacobian(MESH, u, 0.0)
    eps = 1e-6
    for _ in range(3):
        d = _direction(rng, MESH.n_vertices)
        fd = (residual(MESH, u + eps * d, 0.0, 1.0) - residual(MESH, u - eps * d, 0.0, 1.0)) / (2 * eps)
        assert np.linalg.norm(fd - J @ d) <= 1e-8 * np.linalg.norm(J @ d)


@pytest.mark.parametrize("H", [-1.0, 0.0, 0.5])
def test_forward_remainder_is_quadratic(H):
    rng = np.random.default_rng(2)
    u = 1.2 + 0.3 * (1 - np.sum(MESH.vertices ** 2, axis=1)) + 0.05 * rng.random(MESH.n_vertices)
    d = _direction(rng, MESH.n_vertices)
    F0, Jd = residual(MESH, u, H, 1.0), jacobian(MESH, u, H) @ d
    rem = [np.linalg.norm(residual(MESH, u + e * d, H, 1.0) - F0 - e * Jd) for e in (1e-2, 5e-3)]
    assert rem[0] / rem[1] == pytest.approx(4.0, rel=0.05)


def test_principal_part_is_symmetric():
    rng = np.random.default_rng(3)
    u = 1.0 + rng.random(MESH.n_vertices)
    P = jacobian(MESH, u, -0.5, dirichlet=False, first=False, zeroth=False)
    assert abs(P - P.T).max() <= 1e-12
    full = jacobian(MESH, u, -0.5, dirichlet=False)
    assert abs(full - full.T).max() > 1e-6


def test_jacobian_permutation_invariance():
    rng = np.random.default_rng(4)
    perm = rng.permutation(MESH.n_vertices)
    u = np.ones(MESH.n_vertices)
    J = jacobian(MESH, u, 1.0).toarray()
    Jp = jacobian(MESH.permuted(perm), u, 1.0).toarray()
    inv = np.argsort(perm)
    assert np.allclose(Jp[np.ix_(perm, perm)], J, atol=1e-15)
    assert np.allclose(J, Jp[perm][:, perm], atol=1e-15)
    assert inv.shape == perm.shape


def test_zeroth_order_term_nonpositive_for_negative_H():
    rng = np.random.default_rng(5)
    for H in (-1.0, -0.5, -0.01, 0.0):
        u = 1.0 + rng.random(MESH.n_vertices)
        assert zeroth_order_coefficient(MESH, u, H).max() <= 0.0


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(6)
    u = 1.0 + rng.random(MESH.n_vertices)
    for H in (-1.0, 0.3):
        F = [residual(MESH, u, H, 1.0, backend=b) for b in ("python", "cython")]
        J = [jacobian(MESH, u, H, backend=b) for b in ("python", "cython")]
        assert np.abs(F[0] - F[1]).max() <= 1e-13
        assert abs(J[0] - J[1]).max() <= 1e-13


# -- solve ----------------------------------------------------------------

def test_unit_disc_minimal_slope():
    _, s = solved("disc", (1.0,), 0.0)
    cap = radial_cap(0.0, 1.0)
    assert max_error(s, cap) <= 5e-3
    assert s.u_M == pytest.approx(math.sqrt(2), abs=5e-3)
    assert s.diagnostics.converged
    assert s.diagnostics.residual_norm <= 1e-10


def test_inside_window_h004():
    s = solve_dirichlet(disc(0.6), -1.0, 1.0, 0.04)
    assert s.u_M == pytest.approx(1.36, abs=5e-3)
    assert s.diagnostics.continuation_steps == 10
    assert s.diagnostics.tau_reached == 1.0


@pytest.mark.parametrize("d", [disc(0.7), ellipse(0.5, 0.4)])
def test_horosphere_needs_no_iterations(d):
    s = solve_dirichlet(d, 1.0, 1.0, 0.1)
    assert s.diagnostics.iterations == 0
    assert np.all(s.u == 1.0)


def test_radial_cap_initial_guess_gives_same_solution():
    _, s = solved("disc", (0.6,), -0.5)
    t = solve_dirichlet(disc(0.6), -0.5, 1.0, 0.05, SolverConfig(initial_guess="radial-cap"),
                        mesh=s.mesh)
    assert np.abs(t.u - s.u).max() <= 1e-8


def test_dilation():
    a = 2.0
    s = solve_dirichlet(disc(1.2), -0.5, a, 0.1)
    cap = radial_cap(-0.5, 1.2, a)
    assert s.u_M == pytest.approx(cap.w_M, rel=5e-3)
    assert np.all(s.u[s.mesh.boundary] == a)


def test_nonconvergence_reports_last_iterate():
    cfg = SolverConfig(max_newton_iters=1, continuation_steps=1)
    with pytest.raises(NonConvergenceError) as info:
        solve_dirichlet(disc(0.6), -1.0, 1.0, 0.1, cfg)
    exc = info.value
    assert "no solution found" in str(exc)
    assert isinstance(exc.field, SolutionField)
    assert exc.tau < 1.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(newton_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(initial_guess="zero")
    with pytest.raises(ValueError):
        SolverConfig(damping=1.0)
    with pytest.raises(ValueError):
        solve_dirichlet(disc(1.0), 1.5, 1.0, 0.1)


def test_solution_field_is_read_only():
    _, s = solved("disc", (1.0,), 0.0)
    with pytest.raises(ValueError):
        s.u[0] = 3.0


def test_solve_is_deterministic():
    a = solve_dirichlet(ellipse(0.5, 0.4), -0.5, 1.0, 0.1)
    b = solve_dirichlet(ellipse(0.5, 0.4), -0.5, 1.0, 0.1)
    assert np.array_equal(a.u, b.u)


@pytest.mark.parametrize("H", MATRIX_H)
def test_convergence_order(H):
    cap = radial_cap(H, 0.5)
    errs = []
    for h in (0.2, 0.1, 0.05):
        _, s = solved("disc", (0.5,), H, h)
        errs.append(max_error(s, cap))
    order = math.log2(errs[1] / errs[2])
    assert order >= 1.7, errs


# -- gradients and recovered curvature -------------------------------------

def test_constant_field_has_zero_gradient():
    s = SolutionField(MESH, np.full(MESH.n_vertices, 1.5), 0.0, 1.5)
    assert np.all(gradient_field(s) == 0)
    assert np.all(s.grad_norm == 0)


@pytest.mark.parametrize("R,H,c", [(1.0, 0.0, 1.0), (0.6, -1.0, 5.0)])
def test_boundary_gradient_first_order(R, H, c):
    slope = radial_cap(H, R).boundary_slope()
    errs = []
    for h in (0.05, 0.025):
        _, s = solved("disc", (R,), H, h)
        errs.append(abs(s.grad_norm[s.mesh.boundary].max() - slope))
        assert errs[-1] <= c * h
    assert errs[1] / errs[0] <= 0.6


def test_element_gradients_of_linear_field_are_exact():
    u = 1.0 + 0.3 * MESH.vertices[:, 0] - 0.2 * MESH.vertices[:, 1] + 1.0
    s = SolutionField(MESH, u, 0.0, 1.0)
    assert np.allclose(gradient_field(s), [0.3, -0.2], atol=1e-12)
    assert np.allclose(s.vertex_gradients, [0.3, -0.2], atol=1e-12)


@pytest.mark.parametrize("R,H", [(1.0, 0.0), (0.6, -1.0), (0.6, 0.5)])
def test_mean_curvature_recovery(R, H):
    _, s = solved("disc", (R,), H)
    r = np.linalg.norm(s.mesh.vertices, axis=1)
    inner = r < R - 3 * s.h
    assert np.abs(mean_curvature(s)[inner] - H).max() <= 0.2 * s.h


# -- minimum principle -------------------------------------------------------

@pytest.mark.parametrize("kind,params", MATRIX_DOMAINS)
@pytest.mark.parametrize("H", MATRIX_H)
def test_minimum_principle(kind, params, H):
    _, s = solved(kind, params, H)
    assert (s.u[~s.mesh.boundary] - 1.0).min() > 0
