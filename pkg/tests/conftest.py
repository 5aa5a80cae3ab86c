from functools import lru_cache

import pytest

from hypcmc.geometry import disc, ellipse, triangulate
from hypcmc.solver import solve_dirichlet

# (kind, params) pairs used across the suite
MATRIX_DOMAINS = (("disc", (0.6,)), ("ellipse", (0.5, 0.4)))
MATRIX_H = (-1.0, -0.5, 0.0, 0.5)


def domain(kind, params):
    return disc(*params) if kind == "disc" else ellipse(*params)


@lru_cache(maxsize=None)
def mesh_for(kind, params, h):
    return triangulate(domain(kind, params), h)


@lru_cache(maxsize=None)
def solved(kind, params, H, h=0.05, a=1.0):
    """Solutions are immutable, so one solve per case serves every test."""
    d = domain(kind, params)
    return d, solve_dirichlet(d, H, a, h, mesh=mesh_for(kind, params, h) if a == 1.0 else None)


@pytest.fixture(scope="session")
def solve():
    return solved


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE = {}
SUITE_BUDGET_S = 600.0
_start = {}


def record(criterion, ok, detail):
    """Store one acceptance line; several parts of a criterion are AND-ed."""
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_sessionstart(session):
    import time
    _start["t"] = time.perf_counter()


def _elapsed():
    import time
    return time.perf_counter() - _start.get("t", time.perf_counter())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    t = _elapsed()
    tr.write_line(f"suite wall-clock: {t:.1f} s ({'PASS' if t <= SUITE_BUDGET_S else 'FAIL'}, "
                  f"budget {SUITE_BUDGET_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE and _elapsed() > SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
