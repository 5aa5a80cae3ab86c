"""Compare the compiled and numpy assembly kernels.

    python3 benchmarks/bench_assembly.py [--repeat 5]

Times one residual and one Jacobian assembly per backend on a radial-cap
state over discs of decreasing mesh size, and checks that both backends
agree.
"""
import argparse
import timeit

import numpy as np

from hypcmc import kernels
from hypcmc.closed_form import radial_cap
from hypcmc.geometry import disc, triangulate


def bench(h, repeat):
    d = disc(1.0)
    mesh = triangulate(d, h)
    u = radial_cap(-0.5, 1.0)(mesh.vertices)
    tri, area, dphi = kernels.prepare(mesh)
    rows = []
    ref = None
    for name in sorted(kernels.BACKENDS):
        k = kernels.get(name)
        t_res = min(timeit.repeat(lambda: k.residual(tri, area, dphi, u, -0.5),
                                  number=1, repeat=repeat))
        t_jac = min(timeit.repeat(lambda: k.jacobian_values(tri, area, dphi, u, -0.5,
                                                            True, True, True),
                                  number=1, repeat=repeat))
        J = k.jacobian_values(tri, area, dphi, u, -0.5, True, True, True)
        if ref is None:
            ref = J
        rows.append((name, t_res, t_jac, float(np.abs(J - ref).max())))
    return mesh, rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--h", type=float, nargs="+", default=[0.05, 0.025, 0.0125])
    args = p.parse_args()
    if "cython" not in kernels.BACKENDS:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'h':>8} {'elements':>9} {'backend':>8} {'residual ms':>12} {'jacobian ms':>12} "
          f"{'max |dJ|':>10}")
    for h in args.h:
        mesh, rows = bench(h, args.repeat)
        for name, tr, tj, dj in rows:
            print(f"{h:8.4f} {len(mesh.triangles):9d} {name:>8} {1e3 * tr:12.3f} "
                  f"{1e3 * tj:12.3f} {dj:10.2e}")
        if len(rows) == 2:
            c = dict((r[0], r) for r in rows)
            print(f"{'':8} {'':9} {'speedup':>8} {c['python'][1] / c['cython'][1]:12.1f} "
                  f"{c['python'][2] / c['cython'][2]:12.1f}")


if __name__ == "__main__":
    main()
