import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcmc.closed_form import (BoundUndefinedError, NoCapError, bound_set, cap_equation_residual,
                                existence_window, gradient_bound, gradient_constant, lemma22_bound,
                                radial_cap, um_lower_bound, um_upper_bound)

# oracle values derived by hand from m^2 = (1 - c0)^2 + R^2 with c0 = -mH
M_H05_R1 = (1 + math.sqrt(7)) / 1.5          # root of 0.75 m^2 - m - 2 = 0, 2.4305008...


@pytest.mark.parametrize("H,R,m,c0,wM", [
    (0.0, 1.0, math.sqrt(2), 0.0, math.sqrt(2)),
    (-1.0, 0.6, 0.68, 0.68, 1.36),
    (0.5, 1.0, M_H05_R1, -M_H05_R1 / 2, M_H05_R1 / 2),
])
def test_radial_cap_values(H, R, m, c0, wM):
    cap = radial_cap(H, R)
    assert cap.m == pytest.approx(m, rel=1e-12)
    assert cap.c0 == pytest.approx(c0, rel=1e-12, abs=1e-15)
    assert cap.w_M == pytest.approx(wM, rel=1e-12)
    assert cap.w(R) == pytest.approx(1.0, abs=1e-12)


def test_frozen_decimal_values():
    assert radial_cap(0.5, 1.0).m == pytest.approx(2.43050, abs=5e-6)
    assert radial_cap(0.5, 1.0).w_M == pytest.approx(1.21525, abs=5e-6)
    assert radial_cap(-1.0, 0.6).boundary_slope() == pytest.approx(1.875, rel=1e-12)


def test_h_minus_one_uses_linear_branch_continuously():
    near = radial_cap(-1.0 + 1e-7, 0.6).m
    assert near == pytest.approx(radial_cap(-1.0, 0.6).m, rel=1e-6)


def test_dilation_scaling():
    a = 2.5
    base, big = radial_cap(-0.5, 0.4), radial_cap(-0.5, 0.4 * a, a)
    assert big.m == pytest.approx(a * base.m, rel=1e-12)
    assert big.w_M == pytest.approx(a * base.w_M, rel=1e-12)
    assert big.w(0.4 * a) == pytest.approx(a, rel=1e-12)


def test_no_cap_cases():
    with pytest.raises(NoCapError):
        radial_cap(1.0, 1.0)
    with pytest.raises(NoCapError):
        radial_cap(-2.0, 1.0)          # would need the lower hemisphere
    with pytest.raises(ValueError):
        radial_cap(0.0, -1.0)


@pytest.mark.parametrize("H,R", [(0.0, 1.0), (-1.0, 0.6), (0.5, 1.0), (-0.5, 1.0), (0.9, 2.0),
                                 (-0.3, 0.2)])
def test_cap_solves_the_equation(H, R):
    cap = radial_cap(H, R)
    r = np.random.default_rng(0).uniform(0, R, 100)
    assert np.abs(cap_equation_residual(cap, r)).max() <= 1e-10
    assert abs(cap_equation_residual(cap, 0.0)) <= 1e-10


@pytest.mark.parametrize("H,value", [(-1.0, math.sqrt(2) - 1), (-0.5, 2 / math.sqrt(3)),
                                     (-0.01, -2 + 100 + 2 * math.sqrt(0.01 / 1.01))])
def test_existence_window(H, value):
    assert existence_window(H) == pytest.approx(value, rel=1e-12)


def test_existence_window_five_digits():
    assert round(existence_window(-1.0), 5) == 0.41421
    assert round(existence_window(-0.5), 5) == 1.15470
    assert round(existence_window(-0.01), 3) == 98.199
    assert existence_window(-0.01) > existence_window(-0.5)


def test_existence_window_domain():
    for H in (0.0, 0.5, -1.5):
        with pytest.raises(ValueError):
            existence_window(H)


def test_existence_window_below_inverse_square():
    for H in np.linspace(-1, -1e-3, 500):
        assert existence_window(H) < 1 / H ** 2


def test_window_implies_height_chain():
    """Inside the window the cap radius satisfies m < 1/sqrt(H^2 - H)."""
    for H in np.linspace(-1, -0.01, 60):
        Rmax = math.sqrt(existence_window(H))
        for R in np.linspace(0.02, 0.999, 25) * Rmax:
            m = radial_cap(H, R).m
            assert m < 1 / math.sqrt(H * H - H)


@pytest.mark.parametrize("H,uM,C,bound", [
    (0.0, math.sqrt(2), 2.0, math.sqrt(3)),
    (-1.0, 1.36, 0.9248, math.sqrt(0.9248 ** 2 - 0.0752 ** 2) / 0.0752),
])
def test_gradient_bound(H, uM, C, bound):
    assert gradient_constant(H, uM, 1.0) == pytest.approx(C, rel=1e-12)
    assert gradient_bound(H, uM, 1.0) == pytest.approx(bound, rel=1e-12)


def test_gradient_bound_frozen_decimals():
    assert gradient_bound(-1.0, 1.36, 1.0) == pytest.approx(12.257, abs=5e-4)
    assert gradient_bound(0.0, math.sqrt(2), 1.0) == pytest.approx(1.73205, abs=5e-6)
    # exact cap slopes sit below the bound
    assert radial_cap(-1.0, 0.6).boundary_slope() <= gradient_bound(-1.0, 1.36, 1.0)
    assert radial_cap(0.0, 1.0).boundary_slope() == pytest.approx(1.0)


def test_gradient_bound_precondition():
    with pytest.raises(BoundUndefinedError):
        gradient_bound(-0.5, 1.8, 1.0)
    with pytest.raises(ValueError):
        gradient_bound(1.0, 1.0, 1.0)


@pytest.mark.parametrize("H,value", [(0.5, math.sqrt(3)), (0.8, 0.75), (-0.3, math.inf),
                                     (0.0, math.inf)])
def test_lemma22_bound(H, value):
    assert lemma22_bound(H) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("H,k0,lower,cap", [(-1.0, 1 / 0.6, 1.2, (-1.0, 0.6)),
                                            (0.0, 1.0, 1.0, (0.0, 1.0)),
                                            (0.5, 1.0, 0.5, (0.5, 1.0))])
def test_um_lower_bound(H, k0, lower, cap):
    assert um_lower_bound(H, k0) == pytest.approx(lower, rel=1e-12)
    assert radial_cap(*cap).w_M >= lower


def test_um_upper_bound():
    assert um_upper_bound(-1.0, 0.6) == pytest.approx(1.36, rel=1e-12)
    assert um_upper_bound(-1.0, 0.6) < math.sqrt(2)
    assert um_upper_bound(0.0, 1.0) == pytest.approx(math.sqrt(2), rel=1e-12)
    m = radial_cap(0.99, 1.0).m
    assert um_upper_bound(0.99, 1.0) == pytest.approx(0.01 * m, rel=1e-12)
    # m grows like 2/(1 - H^2), so m (1 - H) tends to the boundary height
    assert um_upper_bound(0.99, 1.0) > 1.0
    assert um_upper_bound(0.9999, 1.0) == pytest.approx(1.0, abs=1e-3)


def test_bound_set_collects_everything():
    b = bound_set(-1.0, 1.36, 1.0, 1 / 0.6, 0.6)
    assert b.C == pytest.approx(0.9248)
    assert b.grad_bound == pytest.approx(12.2571, abs=1e-4)
    assert b.lemma22_bound == math.inf
    assert (b.um_lower, b.um_upper) == pytest.approx((1.2, 1.36))
    assert b.window_R2 == pytest.approx(math.sqrt(2) - 1)
    assert math.isnan(bound_set(-0.5, 1.8, 1.0, 1.0, 1.0).grad_bound)


@settings(max_examples=200, deadline=None)
@given(H=st.floats(-1.0, 0.99), R=st.floats(0.01, 5.0))
def test_lower_bound_below_cap_height(H, R):
    try:
        cap = radial_cap(H, R)
    except NoCapError:
        assert H < -1 / R + 1e-9
        return
    assert um_lower_bound(H, 1 / R) <= cap.w_M * (1 + 1e-12)
    assert cap.m > R


@settings(max_examples=100, deadline=None)
@given(H=st.floats(-1.0, 0.99), R=st.floats(0.05, 3.0))
def test_cap_identity_property(H, R):
    try:
        cap = radial_cap(H, R)
    except NoCapError:
        return
    assert (1 - cap.c0) ** 2 + R ** 2 == pytest.approx(cap.m ** 2, rel=1e-10)
    r = np.linspace(0, R, 17)
    assert np.abs(cap_equation_residual(cap, r)).max() <= 1e-8 * max(1.0, cap.boundary_slope() ** 3)
