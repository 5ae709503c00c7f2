"""Rank-one solution in a long channel and its decay away from the far ends.

The cross-section problem is solved once; the axial profile is a closed
form. The error against the full-grid solve is concentrated at the ends,
so restricting the error to the middle of the channel shrinks it fast.

Run: python demos/01_long_channel_rank_one.py
"""

import numpy as np

import longpoisson as lp
from longpoisson.bench.reference import reference_solution_2d

hprime = 2.0 / 128
gcs = lp.build_cross_section("interval", hprime)
f = np.tanh(4.0 * gcs.coords[:, 0] + 1.0)

print("whole-domain relative L2 error of the rank-one solution")
for ell in (1.0, 5.0, 20.0):
    g1 = lp.interval_grid_for_spacing(ell, hprime)
    u = lp.method1_solution(f, g1, gcs)
    ref = reference_solution_2d(f, g1, gcs)
    print(f"  ell={ell:5.1f}  error={lp.rel_l2_error(u, ref):.3e}")

ell = 20.0
g1 = lp.interval_grid_for_spacing(ell, hprime)
u = lp.method1_solution(f, g1, gcs)
ref = reference_solution_2d(f, g1, gcs)
print(f"\nerror on the window |x1| < l0 for ell={ell}")
for l0 in (20.0, 18.0, 16.0, 14.0, 12.0):
    print(f"  l0={l0:5.1f}  error={lp.rel_l2_error(u, ref, window=l0):.3e}")
