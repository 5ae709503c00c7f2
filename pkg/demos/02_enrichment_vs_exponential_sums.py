"""Two ways to raise the tensor rank: greedy enrichment and exponential sums.

Enrichment adds one rank-one term per step by alternating updates of the
axial and cross-section factors. The exponential-sum solver approximates
``1/x`` on the spectrum of the operator and applies ``r`` matrix
exponentials. Both errors fall with the rank; the printout compares them.

Run: python demos/02_enrichment_vs_exponential_sums.py
"""

import numpy as np

import longpoisson as lp
from longpoisson.bench.reference import reference_solution_2d
from longpoisson.method3 import exponential_sum_for, spectral_interval

ell, hprime = 10.0, 2.0 / 128
gcs = lp.build_cross_section("interval", hprime)
g1 = lp.interval_grid_for_spacing(ell, hprime)
f = np.tanh(4.0 * gcs.coords[:, 0] + 1.0)
ref = reference_solution_2d(f, g1, gcs)
A1, Acs = lp.assemble_laplacian_1d(g1), lp.assemble_laplacian_cs(gcs)
a, b = spectral_interval(A1, Acs)
print(f"spectrum of the operator within [{a:.3f}, {b:.3e}]")

_, hist = lp.als_solve(f, g1, gcs, lp.AlsOptions(m_max=6, inner_max=1), ref)

print(" rank   enrichment   exp. sum   ||A^-1 - B|| bound")
for r in range(1, 7):
    cfg = lp.Method3Config(r=r)
    u3 = lp.method3_solve(f, g1, gcs, cfg, A1=A1, Acs=Acs)
    eps = exponential_sum_for(A1, Acs, cfg).eps
    print(f"  {r:3d}   {hist.rel_errors[r - 1]:.3e}   {lp.rel_l2_error(u3, ref):.3e}   {eps:.2e}")
