"""Three-dimensional channel with an L-shaped cross section.

The cross section is the union of two unit rectangles. Matrix exponentials
of its Laplacian have no closed form, so they are computed by sinc
quadrature of a contour integral. A rank-30 exponential sum serves as the
reference, as the full system is large.

Run: python demos/03_lshape_cross_section.py
"""

import time

import numpy as np

import longpoisson as lp
from longpoisson.bench.reference import reference_solution_3d

hprime = 1.0 / 16
gcs = lp.build_cross_section("lshape", hprime)
f = np.tanh(gcs.coords[:, 0] * gcs.coords[:, 1])
print(f"L-shape cross section: {gcs.n} interior nodes at h' = {hprime}")

for ell in (1.0, 10.0):
    g1 = lp.interval_grid_for_spacing(ell, hprime)
    t = time.perf_counter()
    ref = reference_solution_3d(f, g1, gcs)
    print(f"\nell={ell}: reference (rank 30) in {time.perf_counter() - t:.1f} s")
    print(f"  rank one      error={lp.rel_l2_error(lp.method1_solution(f, g1, gcs), ref):.3e}")
    for r in (2, 4, 6):
        u = lp.method3_solve(f, g1, gcs, lp.Method3Config(r=r, cs_expm="sinc"))
        print(f"  exp. sum r={r}  error={lp.rel_l2_error(u, ref):.3e}")
