"""Exact spherical-cap solutions and the explicit bounds built from them.

A Euclidean sphere of radius ``m`` centred at height ``c0 = -m*H`` is a
graph of constant hyperbolic mean curvature ``H`` (upward orientation) in
the upper half-space model.  Over a disc of radius ``R`` with boundary
height ``a`` the cap is ``w(r) = c0 + sqrt(m**2 - r**2)`` with ``w(R) = a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# below this |1 - H^2| the quadratic for m is treated as linear
LINEAR_SWITCH = 1e-8


class NoCapError(ValueError):
    """No spherical cap with the requested data is a graph over the disc."""


class BoundUndefinedError(ValueError):
    """A bound's hypothesis fails, so the bound has no value."""


@dataclass(frozen=True)
class RadialCap:
    H: float
    R: float
    a: float
    m: float
    c0: float

    @property
    def w_M(self) -> float:
        return self.c0 + self.m

    def w(self, r):
        r = np.asarray(r, dtype=float)
        return self.c0 + np.sqrt(self.m ** 2 - r ** 2)

    def dw(self, r):
        r = np.asarray(r, dtype=float)
        return -r / np.sqrt(self.m ** 2 - r ** 2)

    def d2w(self, r):
        r = np.asarray(r, dtype=float)
        return -self.m ** 2 / (self.m ** 2 - r ** 2) ** 1.5

    def boundary_slope(self) -> float:
        """``|w'(R)|``, the largest gradient norm of the cap over the disc."""
        return self.R / math.sqrt(self.m ** 2 - self.R ** 2)

    def __call__(self, xy, center=(0.0, 0.0)):
        xy = np.asarray(xy, dtype=float)
        return self.w(np.hypot(xy[..., 0] - center[0], xy[..., 1] - center[1]))


def radial_cap(H: float, R: float, a: float = 1.0) -> RadialCap:
    """Cap of mean curvature ``H`` over the disc of radius ``R`` at height ``a``.

    Solved at ``a = 1`` (radius ``R/a``) and dilated back, since dilations
    from the origin are isometries.  With ``c0 = -m H`` the boundary
    condition becomes ``(1 - H^2) m^2 - 2 H m - (1 + R^2) = 0``.
    """
    H, R, a = float(H), float(R), float(a)
    if not (R > 0 and a > 0):
        raise ValueError(f"need R > 0 and a > 0, got R={R}, a={a}")
    if H >= 1:
        raise NoCapError(f"H={H} >= 1: caps over the disc exist only for H < 1")
    r = R / a
    A, B, C = 1.0 - H * H, -2.0 * H, -(1.0 + r * r)
    if abs(A) < LINEAR_SWITCH:
        roots = [-C / B]
    else:
        disc = B * B - 4 * A * C
        if disc < 0:
            raise NoCapError(f"no real cap radius for H={H}, R={R}")
        sq = math.sqrt(disc)
        roots = [(-B + sq) / (2 * A), (-B - sq) / (2 * A)]
    # admissible: m > r and w(R) = 1 taken on the upper hemisphere (1 + m H >= 0)
    ok = [m for m in roots if m > r and 1.0 + m * H >= -1e-12 * m]
    if not ok:
        raise NoCapError(
            f"no spherical-cap graph with H={H} over a disc of radius {R} at height {a} "
            f"(requires H > -a/R = {-a / R:.6g})")
    m = max(ok)
    return RadialCap(H=H, R=R, a=a, m=a * m, c0=-a * m * H)


def existence_window(H: float) -> float:
    """Largest admissible squared circumradius for ``-1 <= H < 0`` at ``a = 1``."""
    H = float(H)
    if not -1.0 <= H < 0.0:
        raise ValueError(f"existence window needs -1 <= H < 0, got H={H}")
    return -2.0 - 1.0 / H + 2.0 * math.sqrt(H / (H - 1.0))


def gradient_constant(H: float, u_M: float, a: float) -> float:
    return u_M * u_M / ((1.0 - H) * a * a)


def gradient_bound(H: float, u_M: float, a: float) -> float:
    """A priori bound on ``sup |Du|`` in terms of the height ``u_M``.

    Raises :class:`BoundUndefinedError` when ``1 + H*C <= 0``, which for
    ``H < 0`` is the same as ``u_M >= a*sqrt((H-1)/H)``.
    """
    H, u_M, a = float(H), float(u_M), float(a)
    if H >= 1:
        raise ValueError(f"gradient bound needs H < 1, got {H}")
    if u_M < a:
        raise ValueError(f"u_M={u_M} below boundary height a={a}")
    C = gradient_constant(H, u_M, a)
    k = 1.0 + H * C
    if k <= 0:
        limit = a * math.sqrt((H - 1.0) / H)
        raise BoundUndefinedError(
            f"u_M={u_M:.6g} >= a*sqrt((H-1)/H)={limit:.6g}: gradient bound undefined")
    return math.sqrt(max(C * C - k * k, 0.0)) / k


def lemma22_bound(H: float) -> float:
    """``sqrt(1 - H^2)/H`` for ``0 < H < 1``, otherwise no constraint (``inf``)."""
    H = float(H)
    if 0.0 < H < 1.0:
        return math.sqrt(1.0 - H * H) / H
    return math.inf


def um_lower_bound(H: float, kappa0: float) -> float:
    if H >= 1 or kappa0 <= 0:
        raise ValueError(f"need H < 1 and kappa0 > 0, got H={H}, kappa0={kappa0}")
    return (1.0 - H) / kappa0


def um_upper_bound(H: float, R: float, a: float = 1.0) -> float:
    """Height ``m (1 - H)`` of the barrier cap over the circumscribed disc."""
    return radial_cap(H, R, a).w_M


@dataclass(frozen=True)
class BoundSet:
    H: float
    a: float
    u_M: float
    C: float
    grad_bound: float
    lemma22_bound: float
    um_lower: float
    um_upper: float
    window_R2: float


def bound_set(H: float, u_M: float, a: float, kappa0: float, R: float) -> BoundSet:
    """Every explicit bound at once; undefined entries are ``nan``, absent ones ``inf``."""
    try:
        g = gradient_bound(H, u_M, a)
    except (BoundUndefinedError, ValueError):
        g = math.nan
    try:
        upper = um_upper_bound(H, R, a)
    except NoCapError:
        upper = math.nan
    window = existence_window(H) if -1.0 <= H < 0.0 else math.inf
    return BoundSet(H=H, a=a, u_M=u_M, C=gradient_constant(H, u_M, a), grad_bound=g,
                    lemma22_bound=lemma22_bound(H), um_lower=um_lower_bound(H, kappa0),
                    um_upper=upper, window_R2=window)


def cap_equation_residual(cap: RadialCap, r) -> np.ndarray:
    """Pointwise residual of the graph equation for the radial profile.

    In polar form ``div(Du/W) = w''/W^3 + w'/(r W)``, evaluated from the
    analytic derivatives.
    """
    r = np.asarray(r, dtype=float)
    d1, d2, w = cap.dw(r), cap.d2w(r), cap.w(r)
    W = np.sqrt(1.0 + d1 * d1)
    with np.errstate(invalid="ignore", divide="ignore"):
        div = d2 / W ** 3 + np.where(r > 0, d1 / (r * W), d2 / W ** 3)
    return div + (2.0 / w) * (1.0 / W - cap.H)
