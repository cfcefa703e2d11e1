"""Gaussian inputs, the closed-form value of the functional, and extremisers.

For centred gaussian inputs g_j(x) = c_j exp(-pi <A_j x, x>) the functional
has the closed form

    prod_j det(A_j)^{p_j/2} / det(M)^{1/2},   M = sum_j p_j L_j^T A_j L_j,

independent of the amplitudes once each input is L^1-normalized
(c_j = det(A_j)^{1/2}).  Extremisers satisfy the fixed point
A_j = (L_j M^{-1} L_j^T)^{-1}, which the solver iterates directly with an
isotropic renormalization keeping det M = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .datum import BLDatum, DatumError, validate_datum

SYM_RTOL = 1e-12
EIG_FLOOR = 1e-12
EIG_CEIL = 1e12


class SingularMatrixError(ValueError):
    """M is singular; carries a null direction as evidence."""

    def __init__(self, message: str, direction: Optional[np.ndarray] = None):
        super().__init__(message)
        self.direction = direction


@dataclass
class GaussianTuple:
    """Centred gaussian inputs: blocks A_j (SPD) and amplitudes c_j."""

    blocks: list
    amplitudes: list

    def __post_init__(self):
        self.blocks = [np.atleast_2d(np.asarray(A, dtype=float)) for A in self.blocks]
        self.amplitudes = [float(c) for c in self.amplitudes]

    @classmethod
    def l1_normalized(cls, blocks: Sequence[np.ndarray]) -> "GaussianTuple":
        blocks = [np.atleast_2d(np.asarray(A, dtype=float)) for A in blocks]
        amps = [float(np.sqrt(np.linalg.det(A))) for A in blocks]
        return cls(blocks=blocks, amplitudes=amps)

    def validate(self) -> list:
        out = []
        for j, A in enumerate(self.blocks):
            if A.shape[0] != A.shape[1]:
                out.append(f"block {j} is not square: {A.shape}")
                continue
            scale = max(np.abs(A).max(), 1.0)
            if np.abs(A - A.T).max() > SYM_RTOL * scale:
                out.append(f"block {j} is not symmetric")
                continue
            w = np.linalg.eigvalsh(0.5 * (A + A.T))
            if w.min() <= 0:
                out.append(f"block {j} is not positive definite (min eig {w.min():.3e})")
        for j, c in enumerate(self.amplitudes):
            if not (c > 0 and math.isfinite(c)):
                out.append(f"amplitude {j} = {c} not positive finite")
        return out

    def masses(self) -> list:
        """L^1 masses c_j det(A_j)^{-1/2}."""
        return [
            c / math.sqrt(np.linalg.det(A))
            for c, A in zip(self.amplitudes, self.blocks)
        ]


def scale_gaussian(g: GaussianTuple, rho: float) -> GaussianTuple:
    """Rescale x -> x/rho with mass preserved: A -> A/rho^2, c -> c rho^{-n_j}."""
    if not (rho > 0):
        raise ValueError("scale must be positive")
    blocks = [A / rho**2 for A in g.blocks]
    amps = [c * rho ** (-A.shape[0]) for c, A in zip(g.amplitudes, g.blocks)]
    return GaussianTuple(blocks=blocks, amplitudes=amps)


def compute_M(datum: BLDatum, g: GaussianTuple) -> np.ndarray:
    M = np.zeros((datum.n, datum.n))
    for p, L, A in zip(datum.exponents, datum.maps, g.blocks):
        M += p * (L.T @ A @ L)
    return 0.5 * (M + M.T)


def _check_M(M: np.ndarray):
    w, v = np.linalg.eigh(M)
    if w[0] <= SYM_RTOL * max(abs(w[-1]), 1.0):
        raise SingularMatrixError(
            f"M is singular or indefinite (min eig {w[0]:.3e}); "
            "the datum concentrates no decay along the reported direction",
            direction=v[:, 0],
        )
    return w


def gaussian_bl_value(datum: BLDatum, g: GaussianTuple) -> float:
    """Ratio of the functional at centred gaussian inputs, in closed form.

    Amplitudes cancel between numerator and the normalizing masses, so the
    value depends only on the blocks.
    """
    bad = g.validate()
    if bad:
        raise ValueError("; ".join(bad))
    M = compute_M(datum, g)
    _check_M(M)
    logdet_M = np.linalg.slogdet(M)[1]
    acc = -0.5 * logdet_M
    for p, A in zip(datum.exponents, g.blocks):
        acc += 0.5 * p * np.linalg.slogdet(A)[1]
    return float(math.exp(acc))


@dataclass
class ExtremiserResult:
    gaussians: GaussianTuple
    bl_value: float
    iterations: int
    residual: float
    converged: bool
    status: str

    def to_json(self) -> dict:
        return {
            "blocks": [[list(map(float, row)) for row in A] for A in self.gaussians.blocks],
            "amplitudes": [float(c) for c in self.gaussians.amplitudes],
            "bl_value": float(self.bl_value),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "converged": bool(self.converged),
            "status": self.status,
        }


def _spd_log(A: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(A)
    return (v * np.log(w)) @ v.T


def _spd_exp(S: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(S)
    return (v * np.exp(w)) @ v.T


def _residual(datum: BLDatum, blocks: list, Minv: np.ndarray) -> float:
    res = 0.0
    for L, A in zip(datum.maps, blocks):
        res = max(res, float(np.linalg.norm(np.linalg.inv(A) - L @ Minv @ L.T, 2)))
    return res


def solve_extremiser(
    datum: BLDatum,
    init: Optional[GaussianTuple] = None,
    tol: float = 1e-10,
    max_iter: int = 10000,
    damping: float = 1.0,
) -> ExtremiserResult:
    """Fixed-point iteration for the gaussian extremiser of a datum.

    Each sweep replaces A_j by (L_j M^{-1} L_j^T)^{-1} (damping < 1 moves part
    way there along the log-euclidean geodesic) and rescales all blocks so
    det M = 1.  The residual max_j |A_j^{-1} - L_j M^{-1} L_j^T| is invariant
    under joint isotropic scaling, so the normalization does not disturb the
    stopping test.

    Divergence (eigenvalues of a block leaving [1e-12, 1e12]) is reported via
    status; for a datum violating the subspace criterion this is the expected
    outcome and is evidence of an infinite constant.  The residual need not
    fall monotonically: well-posed data can take long excursions before the
    contraction sets in, so no stagnation cutoff is applied.
    """
    bad = validate_datum(datum)
    if bad:
        raise DatumError("; ".join(bad))
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must be in (0, 1]")
    if init is not None:
        blocks = [A.copy() for A in init.blocks]
        if any(A.shape[0] != nj for A, nj in zip(blocks, datum.codims)):
            raise ValueError("init block dimensions do not match the datum")
    else:
        blocks = [np.eye(nj) for nj in datum.codims]

    def normalize(blocks):
        M = compute_M(datum, GaussianTuple.l1_normalized(blocks))
        w = _check_M(M)
        t = math.exp(-math.fsum(np.log(w)) / datum.n)
        blocks = [t * A for A in blocks]
        return blocks, t * M

    blocks, M = normalize(blocks)
    Minv = np.linalg.inv(M)
    res = _residual(datum, blocks, Minv)
    status = "max-iter"
    iterations = 0
    converged = res <= tol
    if converged:
        status = "converged"

    while not converged and iterations < max_iter:
        iterations += 1
        new_blocks = []
        for L, A in zip(datum.maps, blocks):
            target = np.linalg.inv(L @ Minv @ L.T)
            target = 0.5 * (target + target.T)
            if damping < 1.0:
                stepped = _spd_exp(
                    (1.0 - damping) * _spd_log(A) + damping * _spd_log(target)
                )
                new_blocks.append(stepped)
            else:
                new_blocks.append(target)
        try:
            blocks, M = normalize(new_blocks)
        except SingularMatrixError:
            # the iterate left the positive cone: expected for data with an
            # infinite constant; keep the last healthy iterate in the report
            status = "diverged"
            break
        Minv = np.linalg.inv(M)

        explode = False
        for A in blocks:
            w = np.linalg.eigvalsh(A)
            if w[0] < EIG_FLOOR or w[-1] > EIG_CEIL:
                explode = True
        res = _residual(datum, blocks, Minv)
        if res <= tol:
            converged = True
            status = "converged"
            break
        if explode:
            status = "diverged"
            break

    g = GaussianTuple.l1_normalized(blocks)
    value = gaussian_bl_value(datum, g)
    return ExtremiserResult(
        gaussians=g,
        bl_value=value,
        iterations=iterations,
        residual=res,
        converged=converged,
        status=status,
    )


def young_constant(p: Sequence[float], d: int = 1) -> float:
    """Sharp constant prod_j ((1-p_j)^{1-p_j} / p_j^{p_j})^{d/2} for convolution
    exponents with sum p_j = 2."""
    p = [float(x) for x in p]
    if abs(math.fsum(p) - 2.0) > 1e-12:
        raise ValueError(f"exponents must sum to 2, got {math.fsum(p)!r}")
    if any(x < 0.0 or x > 1.0 for x in p):
        raise ValueError("exponents must lie in [0, 1]")

    def log_c(r: float) -> float:
        if r <= 0.0 or r >= 1.0:
            return 0.0
        return (1.0 - r) * math.log1p(-r) - r * math.log(r)

    return math.exp(0.5 * d * math.fsum(log_c(r) for r in p))


def truncation_deficit(
    datum: BLDatum, g: GaussianTuple, delta: float, eta: float
) -> tuple:
    """Upper estimate of the mass of prod_j (g_j o L_j)^{p_j} outside the ball
    of radius delta * log(1/delta), relative to its total mass.

    The product equals exp(-pi <M x, x>) up to amplitude; after whitening, the
    complement of the ball lies inside {|z| >= r sqrt(lambda_min(M))}, whose
    gaussian mass is computed by radial quadrature.  Returns (deficit, bound)
    with bound = delta^{2 eta}.
    """
    if not (0.0 < delta < 1.0 / math.e):
        raise ValueError("delta must lie in (0, 1/e)")
    if not (0.0 < eta):
        raise ValueError("eta must be positive")
    M = compute_M(datum, g)
    w = _check_M(M)
    n = datum.n
    radius = delta * math.log(1.0 / delta)
    r_white = radius * math.sqrt(w[0])
    # surface area of S^{n-1} over the unit-mass gaussian normalization
    log_sphere = math.log(2.0) + 0.5 * n * math.log(math.pi) - gammaln(0.5 * n)
    sphere = math.exp(log_sphere)

    def integrand(s):
        return sphere * s ** (n - 1) * math.exp(-math.pi * s * s)

    deficit, _ = quad(integrand, r_white, math.inf)
    bound = delta ** (2.0 * eta)
    return float(deficit), float(bound)


def c0_constants(pairs: Sequence[tuple]) -> tuple:
    """Largest operator norms of M_u^{-1/2} and M_u^{1/2} over a family of
    solved extremiser problems.  Input: (datum, ExtremiserResult) pairs."""
    if not pairs:
        raise ValueError("no solved problems supplied")
    c0bar = 0.0
    c0 = 0.0
    for datum, result in pairs:
        if not result.converged:
            raise ValueError("c0 constants require converged extremisers")
        w = np.linalg.eigvalsh(compute_M(datum, result.gaussians))
        if w[0] <= 0:
            raise SingularMatrixError("M not positive definite in c0_constants")
        c0bar = max(c0bar, 1.0 / math.sqrt(w[0]))
        c0 = max(c0, math.sqrt(w[-1]))
    return float(c0bar), float(c0)
