"""Finite element solver for the Dirichlet problem

    div(Du / W) + (2/u) (1/W - H) = 0  in the domain,   u = a  on the boundary,

with ``W = sqrt(1 + |Du|^2)``.  Piecewise-linear elements, damped Newton,
and continuation ``H -> tau*H`` with ``tau`` stepping from 0 to 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from hypcmc import kernels
from hypcmc.closed_form import radial_cap
from hypcmc.geometry import DomainSpec, Mesh, triangulate

log = logging.getLogger(__name__)

INITIAL_GUESSES = ("boundary-constant", "radial-cap")
MIN_STEP = 2.0 ** -20
MAX_BISECTIONS = 6


class NonConvergenceError(RuntimeError):
    """Continuation or Newton failed; ``field`` holds the last iterate.

    Failure means no discrete solution was found, not that none exists.
    """

    def __init__(self, message, field=None, tau=0.0):
        super().__init__(message)
        self.field = field
        self.tau = tau


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    continuation_steps: int = 10
    damping: float = 0.5
    initial_guess: str = "boundary-constant"

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.max_newton_iters < 1:
            raise ValueError(f"max_newton_iters must be >= 1, got {self.max_newton_iters}")
        if self.continuation_steps < 1:
            raise ValueError(f"continuation_steps must be >= 1, got {self.continuation_steps}")
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.initial_guess not in INITIAL_GUESSES:
            raise ValueError(f"initial_guess must be one of {INITIAL_GUESSES}")


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    residual_norm: float = math.nan
    continuation_steps: int = 0
    tau_reached: float = 0.0
    newton_per_step: list = field(default_factory=list)
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "continuation_steps": self.continuation_steps,
            "tau_reached": self.tau_reached,
            "newton_per_step": list(self.newton_per_step),
        }


@dataclass(frozen=True, eq=False)
class SolutionField:
    mesh: Mesh
    u: np.ndarray
    H: float
    a: float
    diagnostics: SolveDiagnostics = field(default_factory=SolveDiagnostics)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def h(self) -> float:
        return self.mesh.h

    @cached_property
    def element_gradients(self) -> np.ndarray:
        return gradient_field(self)

    @cached_property
    def vertex_gradients(self) -> np.ndarray:
        return vertex_gradients(self.mesh, self.u)

    @cached_property
    def grad_norm(self) -> np.ndarray:
        """Per-vertex ``|Du|`` from the area-averaged gradient."""
        return np.linalg.norm(self.vertex_gradients, axis=1)

    @property
    def u_M(self) -> float:
        return float(self.u.max())

    @property
    def argmax(self) -> np.ndarray:
        return self.mesh.vertices[int(np.argmax(self.u))]


def residual(mesh: Mesh, u, H: float, a: float, backend: str | None = None) -> np.ndarray:
    """Discrete weak residual; Dirichlet rows hold ``u - a``."""
    u = np.ascontiguousarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError(f"u has shape {u.shape}, expected ({mesh.n_vertices},)")
    if not np.all(u > 0):
        raise ValueError("u must be positive at every vertex (the equation is singular at u = 0)")
    tri, area, dphi = kernels.prepare(mesh)
    F = kernels.get(backend).residual(tri, area, dphi, u, float(H))
    F[mesh.boundary] = u[mesh.boundary] - a
    return F


def residual_norm(F: np.ndarray) -> float:
    """Root-mean-square of the residual vector."""
    return float(np.linalg.norm(F) / math.sqrt(len(F)))


def jacobian(mesh: Mesh, u, H: float, dirichlet: bool = True, principal: bool = True,
             first: bool = True, zeroth: bool = True, backend: str | None = None) -> sp.csr_matrix:
    """Sparse ``dF/du``.

    The ``principal``, ``first`` and ``zeroth`` switches select the
    second-order (flux), first-order and zeroth-order parts of the
    linearization; with ``dirichlet`` the boundary rows become identity rows.
    """
    u = np.ascontiguousarray(u, dtype=float)
    if not np.all(u > 0):
        raise ValueError("u must be positive at every vertex (the equation is singular at u = 0)")
    tri, area, dphi = kernels.prepare(mesh)
    vals = kernels.get(backend).jacobian_values(tri, area, dphi, u, float(H),
                                                principal, first, zeroth)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    J = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(n, n))
    if dirichlet:
        interior = sp.diags((~mesh.boundary).astype(float))
        J = (interior @ J + sp.diags(mesh.boundary.astype(float))).tocsr()
    return J


def zeroth_order_coefficient(mesh: Mesh, u, H: float) -> np.ndarray:
    """Lumped ``d/du`` of the lower-order term ``(2/u)(1/W - tau H)`` per vertex.

    This is the operator's own sign convention (``F`` carries the opposite
    sign), so the values are ``<= 0`` whenever ``H <= 0``.
    """
    J0 = jacobian(mesh, u, H, dirichlet=False, principal=False, first=False, zeroth=True)
    return -np.asarray(J0.sum(axis=1)).ravel()


def element_gradients(mesh: Mesh, u) -> np.ndarray:
    # differences against the first vertex make constant fields exactly flat
    ut = np.asarray(u, dtype=float)[mesh.triangles]
    return np.einsum("tk,tkd->td", ut[:, 1:] - ut[:, :1], mesh.basis_gradients[:, 1:])


def gradient_field(s: SolutionField) -> np.ndarray:
    """Piecewise-constant ``Du`` per triangle, shape ``(M, 2)``."""
    return element_gradients(s.mesh, s.u)


def vertex_gradients(mesh: Mesh, u) -> np.ndarray:
    """Area-weighted average of the element gradients around each vertex."""
    G = element_gradients(mesh, u)
    w = mesh.signed_areas
    acc = np.zeros((mesh.n_vertices, 2))
    wsum = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], G * w[:, None])
        np.add.at(wsum, mesh.triangles[:, k], w)
    return acc / wsum[:, None]


def mean_curvature(s: SolutionField) -> np.ndarray:
    """Per-vertex recovered mean curvature ``1/W + (u/2) div(Du/W)``.

    The divergence is the weak (lumped-mass) divergence of the element flux.
    Boundary values are one-sided and not meaningful.
    """
    mesh = s.mesh
    G = s.element_gradients
    W = np.sqrt(1.0 + np.sum(G * G, axis=1))
    flux = np.einsum("td,tkd->tk", G / W[:, None], mesh.basis_gradients) * mesh.signed_areas[:, None]
    div = -np.bincount(mesh.triangles.ravel(), weights=flux.ravel(),
                       minlength=mesh.n_vertices) / mesh.lumped_mass
    Wv = np.sqrt(1.0 + s.grad_norm ** 2)
    return 1.0 / Wv + 0.5 * s.u * div


def _newton(mesh, u, H, a, cfg, backend=None):
    F = residual(mesh, u, H, a, backend)
    norm = residual_norm(F)
    it = 0
    while norm > cfg.newton_tol:
        if it >= cfg.max_newton_iters:
            raise NonConvergenceError(
                f"Newton stalled after {it} iterations (residual {norm:.3e})", u)
        J = jacobian(mesh, u, H, backend=backend)
        du = spsolve(J.tocsc(), -F)
        lam = 1.0
        while True:
            trial = u + lam * du
            # guard the 1/u singularity: never step below half the boundary height
            if trial.min() > 0.5 * a:
                Ft = residual(mesh, trial, H, a, backend)
                nt = residual_norm(Ft)
                if nt <= (1.0 - 1e-4 * lam) * norm:
                    break
            lam *= cfg.damping
            if lam < MIN_STEP:
                raise NonConvergenceError(
                    f"line search failed at iteration {it} (residual {norm:.3e})", u)
        u, F, norm = trial, Ft, nt
        it += 1
        log.debug("newton it=%d lam=%.3g residual=%.3e", it, lam, norm)
    return u, it, norm


def initial_guess(d: DomainSpec, mesh: Mesh, a: float, kind: str) -> np.ndarray:
    if kind == "boundary-constant":
        return np.full(mesh.n_vertices, float(a))
    center, R = d.circumcircle
    u0 = radial_cap(0.0, R, a)(mesh.vertices, center)
    u0[mesh.boundary] = a
    return u0


def solve_dirichlet(d: DomainSpec, H: float, a: float, h: float,
                    cfg: SolverConfig | None = None, mesh: Mesh | None = None,
                    backend: str | None = None) -> SolutionField:
    """Solve the Dirichlet problem by continuation in the mean curvature.

    Raises :class:`NonConvergenceError` carrying the last iterate and the
    continuation parameter reached.
    """
    cfg = cfg or SolverConfig()
    H, a = float(H), float(a)
    if H > 1:
        raise ValueError(f"H={H} > 1 is outside the solver's scope")
    if not a > 0:
        raise ValueError(f"boundary height must be positive, got a={a}")
    mesh = mesh if mesh is not None else triangulate(d, h)
    u = initial_guess(d, mesh, a, cfg.initial_guess)
    diag = SolveDiagnostics()

    F = residual(mesh, u, H, a, backend)
    if residual_norm(F) <= cfg.newton_tol:
        diag.residual_norm = residual_norm(F)
        diag.tau_reached = 1.0
        diag.converged = True
        return SolutionField(mesh, u, H, a, diag)

    tau, step = 0.0, 1.0 / cfg.continuation_steps
    targets = [0.0]
    bisections = 0
    while targets:
        target = targets[0]
        try:
            u_new, it, norm = _newton(mesh, u, target * H, a, cfg, backend)
        except NonConvergenceError as exc:
            if target == 0.0 or bisections >= MAX_BISECTIONS:
                diag.tau_reached = tau
                last = SolutionField(mesh, exc.field if exc.field is not None else u, H, a, diag)
                raise NonConvergenceError(
                    f"no solution found: continuation stopped at tau={tau:.4g} "
                    f"(target {target:.4g}): {exc}", last, tau) from None
            bisections += 1
            targets.insert(0, 0.5 * (tau + target))
            continue
        u = u_new
        diag.iterations += it
        diag.newton_per_step.append(it)
        diag.residual_norm = norm
        if target > 0.0:
            diag.continuation_steps += 1
        tau = target
        targets.pop(0)
        if not targets and tau < 1.0:
            targets.append(min(1.0, round(tau + step, 12)))
        log.info("tau=%.4f newton=%d residual=%.3e", tau, it, norm)
    diag.tau_reached = tau
    diag.converged = True
    return SolutionField(mesh, u, H, a, diag)
