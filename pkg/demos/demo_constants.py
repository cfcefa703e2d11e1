"""Gaussian extremisers and the constants they certify.

Solves the fixed-point problem for three data and compares the values against
closed forms.  Run:  python3 demos/demo_constants.py
"""

import numpy as np

from blscales.datum import BLDatum
from blscales.gaussians import solve_extremiser, young_constant


def young_maps():
    return [
        np.array([[1.0, 0.0]]),
        np.array([[1.0, -1.0]]),
        np.array([[0.0, 1.0]]),
    ]


young = BLDatum(n=2, maps=young_maps(), exponents=[2 / 3] * 3)
res = solve_extremiser(young)
print("triple convolution datum on the plane, p = (2/3, 2/3, 2/3)")
print(f"  converged    {res.converged} after {res.iterations} sweeps")
print(f"  bl_value     {res.bl_value:.15f}")
print(f"  closed form  {young_constant((2 / 3,) * 3, d=1):.15f}")
print(f"  blocks       {[round(float(A[0, 0]), 12) for A in res.gaussians.blocks]}")
print()

# coordinate projections: the constant is exactly 1, no gaussian can beat
# the product of the marginals
lw = BLDatum(
    n=2,
    maps=[np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])],
    exponents=[1.0, 1.0],
)
print("coordinate projections of the plane, p = (1, 1)")
print(f"  bl_value     {solve_extremiser(lw).bl_value:.15f}")
print()

print("exponent path towards the (1, 1, 0) vertex of the finiteness polytope")
for eps in (0.2, 0.05, 0.01, 0.002):
    p = [1 - eps, 1 - eps, 2 * eps]
    r = solve_extremiser(BLDatum(n=2, maps=young_maps(), exponents=p))
    print(f"  p3 = {2 * eps:<6g} bl_value = {r.bl_value:.12f}"
          f"   formula = {young_constant(p):.12f}")
