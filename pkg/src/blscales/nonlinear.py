"""Localized nonlinear Brascamp-Lieb constants and the induction machinery.

A nonlinear datum replaces the linear maps by C^2 submersions B_j.  The
localized constant at base point u and scale delta is the best bound

    int_{U_delta(u)} prod_j (f_j o B_j)^{p_j}  <=  C prod_j (int f_j)^{p_j}

over inputs that are kappa-constant at step mu on B_j(2 U_delta(u)), where
U_delta(u) is the ball of radius delta log(1/delta).  Below the threshold
delta^(alpha+beta') <= mu the constant is controlled by the linearized datum
(base case); above it, by localization to scale delta^alpha against truncated
gaussian near-extremisers (recursive step).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import mc
from .datum import BLDatum, FinitenessReport, finiteness_check, validate_datum
from .functional import (
    Box,
    CallableFunction,
    GaussianFunction,
    InputTuple,
    QuadratureSpec,
    integrate_function,
    product_input,
)
from .gaussians import (
    ExtremiserResult,
    GaussianTuple,
    scale_gaussian,
    solve_extremiser,
    young_constant,
)

FD_SLACK = 1e-8


class ThresholdError(ValueError):
    pass


class LinearizationError(ValueError):
    pass


class UncertifiedInputError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# submersions


@dataclass
class Submersion:
    """A C^2 map R^n -> R^{n_j} with surjective differential.

    `map` is vectorized over rows of an (N, n) array; `jacobian` takes a single
    point.  `c2_bound` bounds the Taylor remainder:
    |B(y) - B(x) - dB(x)(y - x)| <= c2_bound |y - x|^2 on the working region.
    """

    map: Callable
    jacobian: Callable
    base_point: np.ndarray
    c2_bound: float
    name: str = ""

    def __post_init__(self):
        self.base_point = np.asarray(self.base_point, dtype=float).ravel()
        self.c2_bound = float(self.c2_bound)

    @property
    def n(self) -> int:
        return self.base_point.shape[0]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.atleast_2d(self.map(np.atleast_2d(pts)))


def validate_submersion(
    s: Submersion, radius: float = 0.5, samples: int = 64, seed: int = 0
) -> list:
    """Spot-check the jacobian and the quadratic remainder bound near the base
    point.  Forward differences obey |fd - dB e| <= c2 h (up to rounding), and
    sampled remainders must respect c2_bound."""
    out = []
    gen = mc.chunk_generator(seed, 11, 0)
    pts = mc.uniform_ball(gen, samples, s.base_point, radius)
    vals = s(pts)
    nj = vals.shape[1]
    h = 1e-5
    J0 = np.atleast_2d(s.jacobian(s.base_point))
    if J0.shape != (nj, s.n):
        out.append(f"jacobian shape {J0.shape} does not match map ({nj}, {s.n})")
        return out
    sv = np.linalg.svd(J0, compute_uv=False)
    if sv.size == 0 or sv.min() <= 1e-10 * max(sv.max(), 1.0):
        out.append("differential at the base point is not surjective")
    for k in range(min(samples, 16)):
        x = pts[k]
        J = np.atleast_2d(s.jacobian(x))
        for i in range(s.n):
            e = np.zeros(s.n)
            e[i] = h
            fd = (s(x + e) - s(x))[0] / h
            bound = 10.0 * s.c2_bound * h + FD_SLACK
            err = np.abs(fd - J[:, i]).max()
            if err > bound:
                out.append(
                    f"finite difference mismatch at sample {k} axis {i}: "
                    f"{err:.3e} > {bound:.3e}"
                )
                break
    base_val = s(s.base_point[None, :])[0]
    rem = vals - base_val - (pts - s.base_point) @ J0.T
    norms2 = np.sum((pts - s.base_point) ** 2, axis=1)
    excess = np.abs(rem).max(axis=1) - s.c2_bound * norms2 * (1.0 + FD_SLACK) - 1e-12
    if np.any(excess > 0):
        k = int(np.argmax(excess))
        out.append(
            f"quadratic remainder exceeds c2_bound at sample {k}: "
            f"excess {excess[k]:.3e}"
        )
    return out


@dataclass
class NonlinearDatum:
    submersions: list
    exponents: list
    name: str = ""

    def __post_init__(self):
        self.submersions = list(self.submersions)
        self.exponents = [float(p) for p in self.exponents]

    @property
    def m(self) -> int:
        return len(self.submersions)

    @property
    def n(self) -> int:
        return self.submersions[0].n

    @property
    def sigma(self) -> float:
        return math.fsum(self.exponents)

    def base_point(self) -> np.ndarray:
        return self.submersions[0].base_point

    def linearize(self, u: Optional[np.ndarray] = None) -> BLDatum:
        u = self.base_point() if u is None else np.asarray(u, dtype=float)
        maps = [np.atleast_2d(s.jacobian(u)) for s in self.submersions]
        return BLDatum(n=self.n, maps=maps, exponents=list(self.exponents))

    def affine_map(self, u: np.ndarray, j: int) -> Callable:
        """The affine linearization x -> B_j(u) + dB_j(u)(x - u)."""
        s = self.submersions[j]
        u = np.asarray(u, dtype=float)
        b = s(u[None, :])[0]
        J = np.atleast_2d(s.jacobian(u))

        def lin(pts):
            return b + (np.atleast_2d(pts) - u) @ J.T

        return lin

    def validate(self) -> list:
        out = []
        for j, s in enumerate(self.submersions):
            if s.base_point.shape[0] != self.n:
                out.append(f"submersion {j} lives on a different domain")
            out.extend(f"submersion {j}: {v}" for v in validate_submersion(s))
        out.extend(validate_datum(self.linearize()))
        return out

    def simplicity_report(self, u: Optional[np.ndarray] = None) -> FinitenessReport:
        lin = self.linearize(u)
        mode = "rank-one-exact" if all(nj == 1 for nj in lin.codims) else "exact-lattice"
        return finiteness_check(lin, mode=mode, budget=256)


# ---------------------------------------------------------------------------
# localized problems


def localization_radius(delta: float) -> float:
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    return delta * math.log(1.0 / delta)


@dataclass(frozen=True)
class LocalizedProblem:
    """The constant C(u, delta, mu, kappa): center, scale, and the constancy
    class of admissible inputs."""

    center: tuple
    delta: float
    mu: float
    kappa: float

    def __post_init__(self):
        object.__setattr__(
            self, "center", tuple(float(x) for x in np.atleast_1d(self.center))
        )
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if not (self.mu > 0.0):
            raise ValueError("mu must be positive")
        if not (self.kappa >= 1.0):
            raise ValueError("kappa must be at least 1")

    @property
    def u(self) -> np.ndarray:
        return np.asarray(self.center)

    @property
    def radius(self) -> float:
        return localization_radius(self.delta)

    def regime(self, alpha: float, beta_prime: float) -> str:
        return "base" if self.delta ** (alpha + beta_prime) <= self.mu else "recursive"


# ---------------------------------------------------------------------------
# kappa-constancy


@dataclass
class KappaReport:
    ok: bool
    kappa: float
    mu: float
    worst_ratio: float
    witness_x: Optional[np.ndarray]
    witness_y: Optional[np.ndarray]
    samples: int


def is_kappa_constant(
    fn,
    sample_region: Callable,
    mu: float,
    kappa: float,
    samples: int = 10000,
    seed: int = 0,
    stream: int = 7,
) -> KappaReport:
    """Sampled check that fn(x) <= kappa fn(y) whenever |x - y| <= mu, x in the
    region.  `sample_region(gen, k)` draws region points; the comparison point
    y ranges over the full mu-ball around x and may leave the region.

    A sampled check can refute constancy but only support it; the report keeps
    the worst ratio and its witness pair.  Pairs where either value underflows
    into the subnormal range are skipped: their quotients are float
    quantization noise, not evidence against constancy.  Exact zeros still
    count, so fn(x) > 0 against fn(y) == 0 reports an infinite ratio.
    """
    worst = 0.0
    wx = wy = None
    count = 0
    tiny = np.finfo(float).tiny
    for index, size in mc.iter_chunks(samples):
        gen = mc.chunk_generator(seed, stream, index)
        x = sample_region(gen, size)
        d = x.shape[1]
        y = mc.uniform_ball(gen, size, np.zeros(d), mu) + x
        fx = np.asarray(fn(x), dtype=float)
        fy = np.asarray(fn(y), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(fy > 0.0, fx / fy, np.where(fx > 0.0, np.inf, 0.0))
        unresolved = ((fx > 0.0) & (fx < tiny)) | ((fy > 0.0) & (fy < tiny))
        ratio[unresolved] = 0.0
        k = int(np.argmax(ratio))
        if ratio[k] > worst:
            worst = float(ratio[k])
            wx = x[k].copy()
            wy = y[k].copy()
        count += size
    return KappaReport(
        ok=bool(worst <= kappa),
        kappa=kappa,
        mu=mu,
        worst_ratio=worst,
        witness_x=wx,
        witness_y=wy,
        samples=count,
    )


def ball_sampler(center: np.ndarray, radius: float) -> Callable:
    center = np.asarray(center, dtype=float)

    def draw(gen, k):
        return mc.uniform_ball(gen, k, center, radius)

    return draw


def image_sampler(submersion: Submersion, center: np.ndarray, radius: float) -> Callable:
    inner = ball_sampler(center, radius)

    def draw(gen, k):
        return submersion(inner(gen, k))

    return draw


def certify_inputs(
    nd: NonlinearDatum,
    lp: LocalizedProblem,
    f: InputTuple,
    samples: int = 10000,
    seed: int = 0,
) -> list:
    """kappa-constancy reports for each input on B_j(2 U_delta(u))."""
    reports = []
    for j, (s, fj) in enumerate(zip(nd.submersions, f.functions)):
        rep = is_kappa_constant(
            fj,
            image_sampler(s, lp.u, 2.0 * lp.radius),
            lp.mu,
            lp.kappa,
            samples=samples,
            seed=seed,
            stream=50 + j,
        )
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# localized ratio

def _ball_pullback_integral(
    nd: NonlinearDatum,
    funcs: Sequence,
    center: np.ndarray,
    radius: float,
    q: QuadratureSpec,
    stream: int,
) -> tuple:
    """Integral of prod (f_j o B_j)^{p_j} over the ball, with an error term."""

    def values(pts):
        vals = np.ones(pts.shape[0])
        for p, s, fj in zip(nd.exponents, nd.submersions, funcs):
            if p == 0.0:
                continue
            vals *= fj(s(pts)) ** p
        return vals

    n = nd.n
    if q.method == "monte-carlo":
        vol = mc.ball_volume(n, radius)
        total = 0.0
        totsq = 0.0
        count = 0
        for index, size in mc.iter_chunks(q.resolution):
            gen = mc.chunk_generator(q.seed, stream, index)
            pts = mc.uniform_ball(gen, size, center, radius)
            vals = values(pts)
            total += float(vals.sum())
            totsq += float((vals * vals).sum())
            count += size
        mean = total / count
        var = max(totsq / count - mean * mean, 0.0)
        return vol * mean, vol * math.sqrt(var / count)

    box = Box(center - radius, center + radius)

    def masked(pts):
        inside = np.sum((pts - center) ** 2, axis=1) <= radius * radius
        out = np.zeros(pts.shape[0])
        if np.any(inside):
            out[inside] = values(pts[inside])
        return out

    fine = _grid_integral_nd(masked, box, q.resolution)
    coarse = _grid_integral_nd(masked, box, max(q.resolution // 2, 2))
    return fine, abs(fine - coarse)


def _grid_integral_nd(fn, box: Box, resolution: int) -> float:
    axes = box.midpoint_axes(resolution)
    n = box.dim
    cell = box.volume() / resolution**n
    npts = resolution**n
    total = 0.0
    chunk = max(mc.CHUNK // max(n, 1), 1)
    for start in range(0, npts, chunk):
        idx = np.arange(start, min(start + chunk, npts))
        coords = np.unravel_index(idx, (resolution,) * n)
        pts = np.column_stack([axes[i][coords[i]] for i in range(n)])
        total += float(fn(pts).sum())
    return total * cell


def localized_ratio(
    nd: NonlinearDatum,
    lp: LocalizedProblem,
    f: InputTuple,
    q: QuadratureSpec,
    certify: bool = True,
    _stream_base: int = 0,
) -> tuple:
    """The ratio int_{U_delta(u)} prod (f_j o B_j)^{p_j} / prod (int f_j)^{p_j}.

    Inputs must belong to the (mu, kappa)-constancy class; with certify set
    the membership is spot-checked by sampling and a failure raises
    UncertifiedInputError with a witness pair.  Denominators use closed-form
    masses when available (gaussian and indicator inputs), otherwise their own
    grid; the numerator follows the quadrature spec.
    """
    if len(f.functions) != nd.m:
        raise ValueError(f"{len(f.functions)} inputs for {nd.m} submersions")
    if certify:
        for j, rep in enumerate(certify_inputs(nd, lp, f, seed=q.seed)):
            if not rep.ok:
                raise UncertifiedInputError(
                    f"input {j} is not {lp.kappa}-constant at scale {lp.mu}: "
                    f"worst sampled ratio {rep.worst_ratio:.6g}",
                    witness=(rep.witness_x, rep.witness_y),
                )
    num, num_err = _ball_pullback_integral(
        nd, f.functions, lp.u, lp.radius, q, stream=_stream_base
    )
    log_den = 0.0
    rel = (num_err / num) ** 2 if num > 0 else 0.0
    for j, (p, fj) in enumerate(zip(nd.exponents, f.functions)):
        mass, err = integrate_function(
            fj, q, stream=_stream_base + 1 + j, prefer_exact=True
        )
        if not mass > 0.0:
            raise ValueError(f"input {j} has zero estimated mass")
        log_den += p * math.log(mass)
        rel += (p * err / mass) ** 2
    ratio = num * math.exp(-log_den)
    err = ratio * math.sqrt(rel) if num > 0 else num_err * math.exp(-log_den)
    return ratio, err


# ---------------------------------------------------------------------------
# base case


@dataclass
class BaseCaseReport:
    ratio: float
    stderr: float
    bl_linear: float
    kappa_sigma: float
    bound: float
    slack: float
    verdict: str
    linearization_dev: float
    dev_bound: float
    threshold: float
    extremiser: ExtremiserResult

    def to_json(self) -> dict:
        return {
            "ratio": self.ratio,
            "stderr": self.stderr,
            "bl_linear": self.bl_linear,
            "kappa_sigma": self.kappa_sigma,
            "bound": self.bound,
            "slack": self.slack,
            "verdict": self.verdict,
            "linearization_dev": self.linearization_dev,
            "dev_bound": self.dev_bound,
            "threshold": self.threshold,
        }


def _verdict(slack: float, sigma: float) -> str:
    if slack >= 3.0 * sigma:
        return "pass"
    if slack <= -3.0 * sigma:
        return "fail"
    return "inconclusive"


def base_case_check(
    nd: NonlinearDatum,
    lp: LocalizedProblem,
    f: InputTuple,
    q: QuadratureSpec,
    alpha: float,
    beta_prime: float,
    solver_tol: float = 1e-10,
) -> BaseCaseReport:
    """Verify C(u, delta, mu, kappa) <= kappa^sigma BL(dB(u), p) in the base
    regime delta^(alpha+beta') <= mu.

    Inside U_delta(u) every B_j stays within its linearization by
    c2 (delta log(1/delta))^2; the check requires that deviation (measured on
    samples and bounded a priori) to be below mu, since that is what lets a
    kappa-constant input trade B_j for the affine map at cost kappa^{p_j}.
    """
    threshold = lp.delta ** (alpha + beta_prime)
    if threshold > lp.mu:
        raise ThresholdError(
            f"delta^(alpha+beta') = {threshold:.3e} exceeds mu = {lp.mu:.3e}; "
            "this problem is in the recursive regime"
        )
    r = lp.radius
    dev_bound = max(s.c2_bound for s in nd.submersions) * r * r
    lins = [nd.affine_map(lp.u, j) for j in range(nd.m)]
    dev = 0.0
    for index, size in mc.iter_chunks(4096):
        gen = mc.chunk_generator(q.seed, 97, index)
        pts = mc.uniform_ball(gen, size, lp.u, r)
        for s, lin in zip(nd.submersions, lins):
            dev = max(dev, float(np.abs(s(pts) - lin(pts)).max()))
    if max(dev, dev_bound) > lp.mu:
        raise LinearizationError(
            f"linearization deviation {max(dev, dev_bound):.3e} exceeds mu = "
            f"{lp.mu:.3e}; shrink the neighbourhood or increase mu"
        )

    ratio, err = localized_ratio(nd, lp, f, q, certify=True)
    ext = solve_extremiser(nd.linearize(lp.u), tol=solver_tol)
    kappa_sigma = lp.kappa**nd.sigma
    bound = kappa_sigma * ext.bl_value
    slack = bound - ratio
    return BaseCaseReport(
        ratio=ratio,
        stderr=err,
        bl_linear=ext.bl_value,
        kappa_sigma=kappa_sigma,
        bound=bound,
        slack=slack,
        verdict=_verdict(slack, err),
        linearization_dev=dev,
        dev_bound=dev_bound,
        threshold=threshold,
        extremiser=ext,
    )


# ---------------------------------------------------------------------------
# recursive step


@dataclass
class RecursiveEntry:
    x: np.ndarray
    ratio: float
    stderr: float


@dataclass
class RecursiveReport:
    lhs: float
    lhs_err: float
    max_ratio: float
    argmax_x: np.ndarray
    rhs: float
    rhs_err: float
    slack: float
    verdict: str
    equality_gap: float
    entries: list
    certifications: list
    delta_fine: float
    kappa_fine: float

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "lhs_err": self.lhs_err,
            "max_ratio": self.max_ratio,
            "argmax_x": list(map(float, np.atleast_1d(self.argmax_x))),
            "rhs": self.rhs,
            "rhs_err": self.rhs_err,
            "slack": self.slack,
            "verdict": self.verdict,
            "equality_gap": self.equality_gap,
            "entries": [
                {
                    "x": list(map(float, np.atleast_1d(e.x))),
                    "ratio": e.ratio,
                    "stderr": e.stderr,
                }
                for e in self.entries
            ],
            "certifications": self.certifications,
            "delta_fine": self.delta_fine,
            "kappa_fine": self.kappa_fine,
        }


def recursive_step_check(
    nd: NonlinearDatum,
    lp: LocalizedProblem,
    f: InputTuple,
    x_grid: np.ndarray,
    q: QuadratureSpec,
    alpha: float,
    beta: float,
    beta_prime: float,
    solver_tol: float = 1e-10,
    certify_kernels: bool = True,
) -> RecursiveReport:
    """Verify the recursive inequality

        C(u, delta, mu, kappa) <= (1 + delta^beta)
            max_x C(x, delta^alpha, mu, kappa exp(delta^beta))

    empirically: the left side on the supplied inputs, the right side on the
    localized tuples h_j^x(w) = f_j(w) g_j(L^u_j x - w) built from the scaled
    gaussian extremiser of the linearized datum at u.  The maximum runs over
    the supplied x grid (a finite subgrid of 2 U_delta(u)), so the reported
    right side is a lower estimate of the true maximum.

    Kernel and product constancy levels, exp(delta^beta) and
    kappa exp(delta^beta), are spot-checked and reported with witnesses; a
    failed certification does not abort the comparison.
    """
    threshold = lp.delta ** (alpha + beta_prime)
    if threshold <= lp.mu:
        raise ThresholdError(
            f"delta^(alpha+beta') = {threshold:.3e} does not exceed mu = "
            f"{lp.mu:.3e}; this problem is in the base regime"
        )
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[1] != nd.n:
        raise ValueError(f"x grid points must lie in R^{nd.n}")
    outer = 2.0 * lp.radius
    for x in x_grid:
        if np.linalg.norm(x - lp.u) > outer * (1.0 + 1e-9):
            raise ValueError("x grid leaves the doubled localization ball")

    lhs, lhs_err = localized_ratio(nd, lp, f, q, certify=True, _stream_base=0)

    delta_fine = lp.delta**alpha
    radius_fine = localization_radius(delta_fine)
    bump = math.exp(lp.delta**beta)
    kappa_fine = lp.kappa * bump
    ext = solve_extremiser(nd.linearize(lp.u), tol=solver_tol)
    g_scaled = scale_gaussian(ext.gaussians, delta_fine)

    entries = []
    certifications = []
    max_ratio = -math.inf
    max_err = 0.0
    argmax = x_grid[0]
    for ix, x in enumerate(x_grid):
        hs = []
        for j, (s, fj) in enumerate(zip(nd.submersions, f.functions)):
            lj_x = nd.affine_map(lp.u, j)(x[None, :])[0]
            kernel = GaussianFunction(
                g_scaled.blocks[j], g_scaled.amplitudes[j], center=lj_x
            )
            if certify_kernels:
                krep = is_kappa_constant(
                    kernel,
                    image_sampler(s, x, 2.0 * radius_fine),
                    lp.mu,
                    bump,
                    samples=4096,
                    seed=q.seed,
                    stream=500 + 10 * ix + j,
                )
                certifications.append(
                    {
                        "x_index": ix,
                        "input": j,
                        "kind": "kernel",
                        "level": bump,
                        "ok": krep.ok,
                        "worst_ratio": krep.worst_ratio,
                    }
                )
            hj = product_input(fj, kernel)
            if hj is None:
                hj = CallableFunction(lambda pts: np.zeros(len(np.atleast_2d(pts))), kernel.box)
            hs.append(hj)
            if certify_kernels:
                prep = is_kappa_constant(
                    hj,
                    image_sampler(s, x, 2.0 * radius_fine),
                    lp.mu,
                    kappa_fine,
                    samples=4096,
                    seed=q.seed,
                    stream=900 + 10 * ix + j,
                )
                certifications.append(
                    {
                        "x_index": ix,
                        "input": j,
                        "kind": "product",
                        "level": kappa_fine,
                        "ok": prep.ok,
                        "worst_ratio": prep.worst_ratio,
                    }
                )
        lp_fine = LocalizedProblem(
            center=tuple(x), delta=delta_fine, mu=lp.mu, kappa=kappa_fine
        )
        try:
            val, err = localized_ratio(
                nd, lp_fine, InputTuple(hs), q, certify=False,
                _stream_base=1000 + 100 * ix,
            )
        except ValueError:
            # empty localized tuple: contributes nothing to the maximum
            entries.append(RecursiveEntry(x=x, ratio=0.0, stderr=0.0))
            continue
        entries.append(RecursiveEntry(x=x, ratio=val, stderr=err))
        if val > max_ratio:
            max_ratio = val
            max_err = err
            argmax = x

    rhs = (1.0 + lp.delta**beta) * max_ratio
    rhs_err = (1.0 + lp.delta**beta) * max_err
    slack = rhs - lhs
    sigma = math.hypot(lhs_err, rhs_err)
    gap = abs(lhs - max_ratio)
    return RecursiveReport(
        lhs=lhs,
        lhs_err=lhs_err,
        max_ratio=max_ratio,
        argmax_x=argmax,
        rhs=rhs,
        rhs_err=rhs_err,
        slack=slack,
        verdict=_verdict(slack, sigma),
        equality_gap=gap,
        entries=entries,
        certifications=certifications,
        delta_fine=delta_fine,
        kappa_fine=kappa_fine,
    )


# ---------------------------------------------------------------------------
# perturbation of the localizing gaussian


@dataclass
class PerturbationReport:
    lhs: float
    rhs: float
    allowed: float
    slack: float
    verdict: str
    l1_diff: float
    l1_bound: float
    gamma: float

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "allowed": self.allowed,
            "slack": self.slack,
            "verdict": self.verdict,
            "l1_diff": self.l1_diff,
            "l1_bound": self.l1_bound,
            "gamma": self.gamma,
        }


def perturbation_check(
    nd: NonlinearDatum,
    u: np.ndarray,
    y: np.ndarray,
    delta: float,
    q: QuadratureSpec,
    alpha: float,
    beta_prime: float,
    gamma: Optional[float] = None,
    solver_tol: float = 1e-10,
) -> PerturbationReport:
    """Compare the recentred linearization against the affine comparison maps:

        int_{U_{delta^alpha}(y)} prod g_j(dB_j(u)(x - y))^{p_j} dx
            <= (1 + delta^beta') int_{U_{delta^alpha}(y)} prod g_j(L^{u,y}_j x)^{p_j} dx

    where L^{u,y}_j x = B_j(u) + dB_j(u)(x - u) - B_j(y) and g is the
    extremiser of the linearized datum at u scaled to delta^alpha.  Also
    reports the L^1 distance between the two integrands against delta^gamma
    for beta' < gamma < 2 - alpha.
    """
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (0.0 < delta < 1.0 / math.e):
        raise ValueError("delta must lie in (0, 1/e)")
    if np.linalg.norm(y - u) > localization_radius(delta) * (1.0 + 1e-9):
        raise ValueError("y must lie in U_delta(u)")
    if gamma is None:
        gamma = 0.5 * (beta_prime + (2.0 - alpha))
    if not (beta_prime < gamma < 2.0 - alpha):
        raise ValueError("gamma must lie strictly between beta' and 2 - alpha")

    ext = solve_extremiser(nd.linearize(u), tol=solver_tol)
    delta_fine = delta**alpha
    g = scale_gaussian(ext.gaussians, delta_fine)
    jac = [np.atleast_2d(s.jacobian(u)) for s in nd.submersions]
    b_u = [s(u[None, :])[0] for s in nd.submersions]
    b_y = [s(y[None, :])[0] for s in nd.submersions]

    def gauss(j, z):
        dz = np.atleast_2d(z)
        qform = np.einsum("ni,ij,nj->n", dz, g.blocks[j], dz)
        return g.amplitudes[j] * np.exp(-math.pi * qform)

    def lhs_integrand(pts):
        vals = np.ones(pts.shape[0])
        for j, p in enumerate(nd.exponents):
            z = (pts - y) @ jac[j].T
            vals *= gauss(j, z) ** p
        return vals

    def rhs_integrand(pts):
        vals = np.ones(pts.shape[0])
        for j, p in enumerate(nd.exponents):
            z = b_u[j] + (pts - u) @ jac[j].T - b_y[j]
            vals *= gauss(j, z) ** p
        return vals

    radius_fine = localization_radius(delta_fine)
    if q.method == "monte-carlo":
        vol = mc.ball_volume(nd.n, radius_fine)
        acc_l = acc_r = acc_d = 0.0
        count = 0
        for index, size in mc.iter_chunks(q.resolution):
            gen = mc.chunk_generator(q.seed, 31, index)
            pts = mc.uniform_ball(gen, size, y, radius_fine)
            a = lhs_integrand(pts)
            b = rhs_integrand(pts)
            acc_l += float(a.sum())
            acc_r += float(b.sum())
            acc_d += float(np.abs(a - b).sum())
            count += size
        lhs = vol * acc_l / count
        rhs = vol * acc_r / count
        l1 = vol * acc_d / count
    else:
        box = Box(y - radius_fine, y + radius_fine)

        def masked(fn):
            def inner(pts):
                inside = np.sum((pts - y) ** 2, axis=1) <= radius_fine**2
                out = np.zeros(pts.shape[0])
                if np.any(inside):
                    out[inside] = fn(pts[inside])
                return out

            return inner

        lhs = _grid_integral_nd(masked(lhs_integrand), box, q.resolution)
        rhs = _grid_integral_nd(masked(rhs_integrand), box, q.resolution)
        l1 = _grid_integral_nd(
            masked(lambda pts: np.abs(lhs_integrand(pts) - rhs_integrand(pts))),
            box,
            q.resolution,
        )

    allowed = (1.0 + delta**beta_prime) * rhs
    slack = allowed - lhs
    l1_bound = delta**gamma
    verdict = "pass" if slack >= 0 and l1 <= l1_bound else "fail"
    return PerturbationReport(
        lhs=lhs,
        rhs=rhs,
        allowed=allowed,
        slack=slack,
        verdict=verdict,
        l1_diff=l1,
        l1_bound=l1_bound,
        gamma=gamma,
    )


# ---------------------------------------------------------------------------
# registry of example submersions


def _linear_submersions(datum: BLDatum) -> list:
    subs = []
    for L in datum.maps:
        Lc = L.copy()
        subs.append(
            Submersion(
                map=(lambda Lc: lambda pts: np.atleast_2d(pts) @ Lc.T)(Lc),
                jacobian=(lambda Lc: lambda x: Lc)(Lc),
                base_point=np.zeros(L.shape[1]),
                c2_bound=0.0,
                name="linear",
            )
        )
    return subs


def _young_euclidean(d: int) -> list:
    Z = np.zeros((d, d))
    I = np.eye(d)
    maps = [np.hstack([Z, I]), np.hstack([I, -I]), np.hstack([I, Z])]
    datum = BLDatum(n=2 * d, maps=maps, exponents=[2.0 / 3.0] * 3)
    return _linear_submersions(datum)


def _heisenberg_submersions() -> list:
    """Convolution maps of the 3-dimensional step-2 nilpotent group in
    exponential coordinates: w = (x, y), products via
    x . y = x + y + [x, y]/2 with [x, y] = (0, 0, x1 y2 - x2 y1)."""

    def b1(pts):
        return pts[:, 3:6]

    def j1(w):
        return np.hstack([np.zeros((3, 3)), np.eye(3)])

    def b2(pts):
        x = pts[:, 0:3]
        y = pts[:, 3:6]
        out = x - y
        out[:, 2] -= 0.5 * (y[:, 0] * x[:, 1] - y[:, 1] * x[:, 0])
        return out

    def j2(w):
        x = w[0:3]
        y = w[3:6]
        J = np.hstack([np.eye(3), -np.eye(3)])
        # third row picks up the bracket derivative
        J[2, 0] = 0.5 * y[1]
        J[2, 1] = -0.5 * y[0]
        J[2, 3] = -0.5 * x[1]
        J[2, 4] = 0.5 * x[0]
        return J

    def b3(pts):
        return pts[:, 0:3]

    def j3(w):
        return np.hstack([np.eye(3), np.zeros((3, 3))])

    zero = np.zeros(6)
    return [
        Submersion(map=b1, jacobian=j1, base_point=zero, c2_bound=0.0, name="left"),
        Submersion(map=b2, jacobian=j2, base_point=zero, c2_bound=0.25, name="quotient"),
        Submersion(map=b3, jacobian=j3, base_point=zero, c2_bound=0.0, name="right"),
    ]


def _expm1_ratio(a: np.ndarray) -> np.ndarray:
    """(e^a - 1)/a, stable near zero."""
    a = np.asarray(a, dtype=float)
    out = np.ones_like(a)
    small = np.abs(a) < 1e-6
    out[small] = 1.0 + a[small] / 2.0 + a[small] ** 2 / 6.0
    big = ~small
    out[big] = np.expm1(a[big]) / a[big]
    return out


def _expm1_ratio_prime(a: np.ndarray) -> np.ndarray:
    """d/da of (e^a - 1)/a."""
    a = np.asarray(a, dtype=float)
    out = np.full_like(a, 0.5)
    small = np.abs(a) < 1e-6
    out[small] = 0.5 + a[small] / 3.0 + a[small] ** 2 / 8.0
    big = ~small
    out[big] = (np.exp(a[big]) * (a[big] - 1.0) + 1.0) / a[big] ** 2
    return out


def _affine_group_submersions() -> list:
    """Convolution maps of the two-dimensional ax+b group in exponential
    coordinates w = (x1, x2, y1, y2): the group element for (a, b) is
    s -> e^a s + b E(a), E(a) = (e^a - 1)/a, and B2(x, y) = y^{-1} x."""

    def b1(pts):
        return pts[:, 2:4]

    def j1(w):
        return np.hstack([np.zeros((2, 2)), np.eye(2)])

    def b2(pts):
        x1 = pts[:, 0]
        x2 = pts[:, 1]
        y1 = pts[:, 2]
        y2 = pts[:, 3]
        z1 = x1 - y1
        num = x2 * _expm1_ratio(x1) - y2 * _expm1_ratio(y1)
        z2 = np.exp(-y1) * num / _expm1_ratio(z1)
        return np.column_stack([z1, z2])

    def j2(w):
        x1, x2, y1, y2 = (float(v) for v in w)
        E = lambda a: float(_expm1_ratio(np.array([a]))[0])
        Ep = lambda a: float(_expm1_ratio_prime(np.array([a]))[0])
        N = x2 * E(x1) - y2 * E(y1)
        D = E(x1 - y1)
        ey = math.exp(-y1)
        J = np.zeros((2, 4))
        J[0, 0] = 1.0
        J[0, 2] = -1.0
        J[1, 0] = ey * (x2 * Ep(x1) * D - N * Ep(x1 - y1)) / D**2
        J[1, 1] = ey * E(x1) / D
        J[1, 2] = ey * (-N / D - y2 * Ep(y1) / D + N * Ep(x1 - y1) / D**2)
        J[1, 3] = -ey * E(y1) / D
        return J

    def b3(pts):
        return pts[:, 0:2]

    def j3(w):
        return np.hstack([np.eye(2), np.zeros((2, 2))])

    zero = np.zeros(4)
    c2 = _estimate_c2(b2, j2, zero, radius=0.6)
    return [
        Submersion(map=b1, jacobian=j1, base_point=zero, c2_bound=0.0, name="left"),
        Submersion(map=b2, jacobian=j2, base_point=zero, c2_bound=c2, name="quotient"),
        Submersion(map=b3, jacobian=j3, base_point=zero, c2_bound=0.0, name="right"),
    ]


def _estimate_c2(map_fn, jac_fn, base: np.ndarray, radius: float) -> float:
    """Sampled bound on the quadratic Taylor remainder, with a safety factor."""
    worst = 0.0
    for index, size in mc.iter_chunks(4096):
        gen = mc.chunk_generator(0, 13, index)
        centers = mc.uniform_ball(gen, size, base, radius)
        offsets = mc.uniform_ball(gen, size, np.zeros_like(base), 0.5 * radius)
        pts = centers + offsets
        for k in range(0, size, 512):
            sl = slice(k, min(k + 512, size))
            for c, x in zip(centers[sl], pts[sl]):
                J = np.atleast_2d(jac_fn(c))
                rem = map_fn(x[None, :])[0] - map_fn(c[None, :])[0] - J @ (x - c)
                d2 = float(np.sum((x - c) ** 2))
                if d2 > 1e-12:
                    worst = max(worst, float(np.abs(rem).max()) / d2)
    return 1.5 * worst


def _perturbed_quadratic(gamma: float) -> list:
    """Rank-one Young maps on R^2 with quadratic perturbations of size gamma."""
    L = [np.array([[0.0, 1.0]]), np.array([[1.0, -1.0]]), np.array([[1.0, 0.0]])]

    def b1(pts):
        return (pts[:, 1] + gamma * pts[:, 0] ** 2)[:, None]

    def j1(w):
        return np.array([[2.0 * gamma * w[0], 1.0]])

    def b2(pts):
        return (pts[:, 0] - pts[:, 1] + gamma * pts[:, 0] * pts[:, 1])[:, None]

    def j2(w):
        return np.array([[1.0 + gamma * w[1], -1.0 + gamma * w[0]]])

    def b3(pts):
        return (pts[:, 0] + gamma * pts[:, 1] ** 2)[:, None]

    def j3(w):
        return np.array([[1.0, 2.0 * gamma * w[1]]])

    zero = np.zeros(2)
    return [
        Submersion(map=b1, jacobian=j1, base_point=zero, c2_bound=gamma, name="q1"),
        Submersion(map=b2, jacobian=j2, base_point=zero, c2_bound=gamma, name="q2"),
        Submersion(map=b3, jacobian=j3, base_point=zero, c2_bound=gamma, name="q3"),
    ]


REGISTRY_TAGS = (
    "linear",
    "young-euclidean-<d>",
    "young-heisenberg",
    "young-affine-2d",
    "perturbed-quadratic:<gamma>",
)


def registry(
    tag: str,
    exponents: Optional[Sequence[float]] = None,
    datum: Optional[BLDatum] = None,
) -> NonlinearDatum:
    """Build a named nonlinear datum.  Young-type tags default to exponents
    (2/3, 2/3, 2/3)."""
    young_p = [2.0 / 3.0] * 3
    if tag == "linear":
        if datum is None:
            raise ValueError("tag 'linear' needs an explicit datum")
        subs = _linear_submersions(datum)
        p = list(datum.exponents) if exponents is None else list(exponents)
        return NonlinearDatum(submersions=subs, exponents=p, name=tag)
    if tag.startswith("young-euclidean-"):
        d = int(tag.rsplit("-", 1)[1])
        if d < 1:
            raise ValueError("dimension must be positive")
        return NonlinearDatum(
            submersions=_young_euclidean(d),
            exponents=young_p if exponents is None else list(exponents),
            name=tag,
        )
    if tag == "young-heisenberg":
        return NonlinearDatum(
            submersions=_heisenberg_submersions(),
            exponents=young_p if exponents is None else list(exponents),
            name=tag,
        )
    if tag == "young-affine-2d":
        return NonlinearDatum(
            submersions=_affine_group_submersions(),
            exponents=young_p if exponents is None else list(exponents),
            name=tag,
        )
    if tag.startswith("perturbed-quadratic:"):
        gamma = float(tag.split(":", 1)[1])
        if not (0.0 <= gamma):
            raise ValueError("gamma must be nonnegative")
        return NonlinearDatum(
            submersions=_perturbed_quadratic(gamma),
            exponents=young_p if exponents is None else list(exponents),
            name=tag,
        )
    raise ValueError(
        f"unknown registry tag {tag!r}; available: {', '.join(REGISTRY_TAGS)}"
    )


# ---------------------------------------------------------------------------
# group Young convergence study


@dataclass
class YoungRow:
    delta: float
    ratio: float
    stderr: float
    bound: float
    slack: float


def lie_group_young(
    group: str,
    deltas: Sequence[float],
    exponents: Optional[Sequence[float]] = None,
    q: Optional[QuadratureSpec] = None,
    mu: float = 1e-4,
    kappa: float = 1.5,
    solver_tol: float = 1e-10,
    workers: int = 1,
) -> dict:
    """Localized convolution-inequality ratios on a group at shrinking scales.

    For each delta the inputs are the gaussian extremisers of the linearized
    datum at the identity, scaled to delta; the ratio should increase towards
    the sharp constant of the linearized problem as delta -> 0.  Returns a
    dict with the rows (delta, ratio, stderr, bound, slack) and metadata.
    Rows for different scales are independent, so they may be evaluated by a
    small thread pool without changing any result.
    """
    nd = registry(group, exponents=exponents)
    if q is None:
        q = QuadratureSpec(method="monte-carlo", resolution=200000)
    ext = solve_extremiser(nd.linearize(), tol=solver_tol)
    d = nd.submersions[0](np.zeros((1, nd.n))).shape[1]
    bound = young_constant(nd.exponents, d)
    order = sorted(deltas, reverse=True)

    def one(delta: float) -> YoungRow:
        g = scale_gaussian(ext.gaussians, delta)
        funcs = [GaussianFunction(A, c) for A, c in zip(g.blocks, g.amplitudes)]
        lp = LocalizedProblem(
            center=tuple(np.zeros(nd.n)), delta=delta, mu=mu, kappa=kappa
        )
        ratio, err = localized_ratio(nd, lp, InputTuple(funcs), q, certify=True)
        return YoungRow(
            delta=delta, ratio=ratio, stderr=err, bound=bound, slack=bound - ratio
        )

    if workers > 1 and len(order) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, order))
    else:
        rows = [one(delta) for delta in order]
    return {
        "group": group,
        "exponents": list(nd.exponents),
        "fiber_dim": d,
        "bound": bound,
        "bl_linearized": ext.bl_value,
        "rows": rows,
        "seed": q.seed,
        "method": q.method,
        "resolution": q.resolution,
    }
