import numpy as np
import pytest

from blscales.datum import BLDatum
from blscales.gaussians import solve_extremiser

ROOT3_OVER_2 = 0.8660254037844386


def young_maps():
    return [
        np.array([[1.0, 0.0]]),
        np.array([[1.0, -1.0]]),
        np.array([[0.0, 1.0]]),
    ]


@pytest.fixture(scope="session")
def young_datum():
    return BLDatum(n=2, maps=young_maps(), exponents=[2 / 3, 2 / 3, 2 / 3])


@pytest.fixture(scope="session")
def young_extremiser(young_datum):
    res = solve_extremiser(young_datum)
    assert res.converged
    return res


@pytest.fixture(scope="session")
def lw_datum():
    # two coordinate projections in the plane, p = (1, 1)
    return BLDatum(
        n=2,
        maps=[np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])],
        exponents=[1.0, 1.0],
    )
