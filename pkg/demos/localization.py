"""Smooth cutoffs: cusp/bulk partition of unity, IMS identity, tube area.

The bump family splits a surface into a bulk piece and two cusp regimes
with a quadratic partition j0^2 + j1^2 + j2^2 = 1.  The IMS identity moves
the Laplacian through the partition at the price of the gradient term, and
the gradient's L1 mass is scale-free.
"""

import numpy as np

from coverlab import kernels as kn

fam = kn.bump_family(L1=8.0, L2=1.0)
ys = np.geomspace(0.05, 200.0, 2001)
err = np.max(np.abs(fam.j0(ys) ** 2 + fam.j1(ys) ** 2 + fam.j2(ys) ** 2 - 1.0))
print(f"partition of unity error on a log grid: {err:.2e}")

fns = kn.random_smooth_functions(3, 1)
print(f"IMS identity residual over 3 random smooth functions: "
      f"{kn.ims_identity_check(fam, fns):.2e}")

for L in (1.0, 16.0, 256.0):
    print(f"L={L:>5g}: |grad J|^2 strip mass (L1) = {kn.frakJ_l1(L, L):.6f}")

ta = kn.tube_area(1.0, 8.0, 1.0)
print(f"tube area: closed {ta.closed_form:.10f} vs quadrature {ta.quadrature:.10f}")
print(f"collar width factor 2 sinh(kappa) = {ta.width_factor:.8f}")
