"""Finiteness and simplicity verdicts for linear data.

Three scenarios: a simple interior datum, a family with a shared kernel
direction (constant infinite, witness reported), and a higher-rank datum
handled by the kernel-lattice closure.  Run:  python3 demos/demo_finiteness.py
"""

import numpy as np

from blscales.datum import BLDatum, finiteness_check


def show(title, rep):
    print(title)
    print(f"  scaling_ok   {rep.scaling_ok}   residual {rep.scaling_residual:.2e}")
    print(f"  subspace_ok  {rep.subspace_ok}   slack {rep.slack}")
    print(f"  simple       {rep.simple}   family {rep.checked_family}"
          f"   subspaces checked {rep.subspaces_checked}")
    if rep.violating_subspace is not None:
        print(f"  witness subspace basis (columns):\n{rep.violating_subspace}")
    print()


young = BLDatum(
    n=2,
    maps=[np.array([[1.0, 0.0]]), np.array([[1.0, -1.0]]), np.array([[0.0, 1.0]])],
    exponents=[2 / 3] * 3,
)
show("triple convolution datum (interior exponents)",
     finiteness_check(young, mode="rank-one-exact"))

# every map kills e2: mass can escape along that direction, so the constant
# is infinite and the criterion pins the offending subspace
shared = BLDatum(
    n=2,
    maps=[np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]]), np.array([[-1.0, 0.0]])],
    exponents=[0.7, 0.7, 0.6],
)
show("three collinear functionals (shared kernel)",
     finiteness_check(shared, mode="rank-one-exact"))

# rank-two maps: the rank-one mode refuses, the lattice closure decides
rng = np.random.default_rng(0)
maps = [rng.standard_normal((2, 4)) for _ in range(3)]
p = [2 / 3] * 3
lattice = BLDatum(n=4, maps=maps, exponents=p)
show("three random planes in R^4 (kernel-lattice mode)",
     finiteness_check(lattice, mode="exact-lattice", budget=256))
