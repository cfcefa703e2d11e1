"""Monte-carlo check of the convolution inequality for the functional.

For inputs f, g the product BL(f) BL(g) is dominated by the localized
maximum times BL(f*g); at the gaussian extremiser the two sides meet.  The
verdict protocol treats anything within three combined standard errors as
inconclusive rather than a violation.  Run:  python3 demos/demo_ball_inequality.py
"""

import numpy as np

from blscales.datum import BLDatum
from blscales.functional import (
    GaussianFunction,
    InputTuple,
    QuadratureSpec,
    ball_inequality_check,
)
from blscales.gaussians import solve_extremiser

young = BLDatum(
    n=2,
    maps=[np.array([[1.0, 0.0]]), np.array([[1.0, -1.0]]), np.array([[0.0, 1.0]])],
    exponents=[2 / 3] * 3,
)
q = QuadratureSpec(method="monte-carlo", resolution=200_000, seed=42)
x_grid = np.array([[0.0, 0.0], [0.4, -0.3], [-0.6, 0.2]])


def report(title, rep):
    print(title)
    print(f"  lhs  = BL(f) BL(g)        = {rep.lhs:.6f}")
    print(f"  rhs  = max_x BL(h^x) BL(f*g) = {rep.rhs:.6f}")
    print(f"  slack {rep.slack:+.6f}  stderr {rep.stderr:.6f}  -> {rep.verdict}")
    print()


rng = np.random.default_rng(1)
f = InputTuple(
    [GaussianFunction([[rng.uniform(0.5, 2.5)]], center=[rng.uniform(-0.3, 0.3)])
     for _ in range(3)]
)
g = InputTuple(
    [GaussianFunction([[rng.uniform(0.5, 2.5)]], center=[rng.uniform(-0.3, 0.3)])
     for _ in range(3)]
)
report("random gaussian pair", ball_inequality_check(young, f, g, x_grid, q))

ext = solve_extremiser(young)
e = InputTuple([GaussianFunction(A) for A in ext.gaussians.blocks])
rep = ball_inequality_check(young, e, e, x_grid, q, near_extremiser=True)
report("extremiser against itself (equality case)", rep)
for name, c in rep.extremiser_consequences.items():
    print(f"  consequence {name}: slack {c['slack']:+.6f}"
          f"  stderr {c['stderr']:.6f}  -> {c['verdict']}")
