"""Direct evaluation of the Brascamp-Lieb functional on concrete inputs.

Inputs are nonnegative functions with box supports (gaussians carry a nominal
box far out in their tails).  The functional

    BL(L, p; f) = int prod_j (f_j o L_j)^{p_j} / prod_j (int f_j)^{p_j}

is evaluated by tensor-grid midpoint quadrature or by deterministic Monte
Carlo.  The module also provides the convolution of input tuples, a numerical
check of the convolution inequality

    BL(f) BL(g) <= sup_x BL(h^x) BL(f*g),   h_j^x(z) = f_j(z) g_j(L_j x - z),

and Poisson-kernel smoothing with a certified constancy modulus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import linprog
from scipy.signal import fftconvolve

from . import mc
from .datum import BLDatum, DatumError, validate_datum

BOUNDARY_MASS_LIMIT = 0.01


class ZeroMassError(ValueError):
    pass


class DomainTooSmallError(ValueError):
    pass


class UnboundedDomainError(ValueError):
    pass


class DegenerateLocalizationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(x) for x in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(x) for x in np.atleast_1d(self.hi)))
        if len(self.lo) != len(self.hi):
            raise ValueError("box corner dimensions differ")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box has negative extent")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def intersect(self, other: "Box") -> Optional["Box"]:
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi <= lo):
            return None
        return Box(lo, hi)

    def minkowski_sum(self, other: "Box") -> "Box":
        return Box(np.add(self.lo, other.lo), np.add(self.hi, other.hi))

    def reflect_translate(self, point: np.ndarray) -> "Box":
        """Support of z -> (anything supported on this box)(point - z)."""
        point = np.asarray(point, dtype=float)
        return Box(point - np.asarray(self.hi), point - np.asarray(self.lo))

    def midpoint_axes(self, resolution: int) -> tuple:
        axes = []
        for l, h in zip(self.lo, self.hi):
            step = (h - l) / resolution
            axes.append(l + (np.arange(resolution) + 0.5) * step)
        return tuple(axes)


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "tensor-grid"
    resolution: int = 256
    seed: int = 0
    domain: Optional[Box] = None

    def __post_init__(self):
        if self.method not in ("tensor-grid", "monte-carlo"):
            raise ValueError(f"unknown quadrature method: {self.method!r}")
        if self.method == "tensor-grid" and self.resolution < 2:
            raise ValueError("tensor-grid needs resolution >= 2")
        if self.method == "monte-carlo" and self.resolution < 1000:
            raise ValueError("monte-carlo needs at least 1000 samples")


# ---------------------------------------------------------------------------
# input functions


class GaussianFunction:
    """c exp(-pi <A (x - center), x - center>) with a nominal support box."""

    compact_support = False

    def __init__(self, A, amplitude=None, center=None, radius_sigmas: float = 10.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        d = self.A.shape[0]
        self.center = (
            np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
        )
        det = float(np.linalg.det(self.A))
        if det <= 0:
            raise ValueError("gaussian block must be positive definite")
        self.amplitude = float(math.sqrt(det) if amplitude is None else amplitude)
        cov_diag = np.diag(np.linalg.inv(self.A)) / (2.0 * math.pi)
        radii = radius_sigmas * np.sqrt(cov_diag)
        self.radius_sigmas = float(radius_sigmas)
        self.box = Box(self.center - radii, self.center + radii)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        dx = pts - self.center
        q = np.einsum("ni,ij,nj->n", dx, self.A, dx)
        return self.amplitude * np.exp(-math.pi * q)

    @property
    def exact_mass(self) -> float:
        return self.amplitude / math.sqrt(float(np.linalg.det(self.A)))

    def scaled(self, factor: float) -> "GaussianFunction":
        return GaussianFunction(
            self.A, self.amplitude * factor, self.center, self.radius_sigmas
        )

    def reflected_at(self, point: np.ndarray) -> "GaussianFunction":
        """The function z -> self(point - z); gaussian again by symmetry of A."""
        point = np.asarray(point, dtype=float)
        return GaussianFunction(
            self.A, self.amplitude, point - self.center, self.radius_sigmas
        )

    def product(self, other: "GaussianFunction") -> "GaussianFunction":
        """Pointwise product: precisions add, centres combine by precision."""
        A3 = self.A + other.A
        rhs = self.A @ self.center + other.A @ other.center
        m = np.linalg.solve(A3, rhs)
        expo = (
            self.center @ self.A @ self.center
            + other.center @ other.A @ other.center
            - m @ A3 @ m
        )
        amp = self.amplitude * other.amplitude * math.exp(-math.pi * expo)
        sig = max(self.radius_sigmas, other.radius_sigmas)
        return GaussianFunction(A3, amp, m, sig)


class IndicatorFunction:
    """height on a box, zero outside."""

    compact_support = True

    def __init__(self, box: Box, height: float = 1.0):
        self.box = box
        self.height = float(height)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.height * self.box.contains(pts).astype(float)

    @property
    def exact_mass(self) -> float:
        return self.height * self.box.volume()

    def scaled(self, factor: float) -> "IndicatorFunction":
        return IndicatorFunction(self.box, self.height * factor)


class SampledFunction:
    """Values on a uniform midpoint grid; evaluates by multilinear interpolation
    (zero outside the box)."""

    compact_support = True

    def __init__(self, axes: Sequence[np.ndarray], values: np.ndarray):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ValueError("values shape does not match axes")
        self.steps = np.array(
            [a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes]
        )
        lo = [a[0] - 0.5 * s for a, s in zip(self.axes, self.steps)]
        hi = [a[-1] + 0.5 * s for a, s in zip(self.axes, self.steps)]
        self.box = Box(lo, hi)
        self._interp = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        if self._interp is None:
            self._interp = RegularGridInterpolator(
                self.axes,
                self.values,
                method="linear",
                bounds_error=False,
                fill_value=0.0,
            )
        pts = np.atleast_2d(pts)
        return np.maximum(self._interp(pts), 0.0)

    @property
    def exact_mass(self):
        return None

    def native_mass(self) -> float:
        """Integral of the grid representation itself."""
        return float(self.values.sum() * np.prod(self.steps))

    def scaled(self, factor: float) -> "SampledFunction":
        return SampledFunction(self.axes, self.values * factor)


class CallableFunction:
    def __init__(
        self,
        fn: Callable,
        box: Box,
        mass: Optional[float] = None,
        compact_support: bool = False,
    ):
        self.fn = fn
        self.box = box
        self._mass = mass
        self.compact_support = compact_support

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.fn(np.atleast_2d(pts))

    @property
    def exact_mass(self):
        return self._mass

    def scaled(self, factor: float) -> "CallableFunction":
        mass = None if self._mass is None else self._mass * factor
        return CallableFunction(
            lambda pts: factor * self.fn(pts), self.box, mass, self.compact_support
        )


def product_input(a, b):
    """Pointwise product of two inputs, or None when the supports are disjoint.

    Gaussian pairs collapse to a gaussian in closed form.
    """
    if isinstance(a, GaussianFunction) and isinstance(b, GaussianFunction):
        return a.product(b)
    box = a.box.intersect(b.box)
    if box is None:
        return None
    compact = a.compact_support or b.compact_support
    return CallableFunction(lambda pts: a(pts) * b(pts), box, compact_support=compact)


def scale_input(fn, factor: float):
    if hasattr(fn, "scaled"):
        return fn.scaled(factor)
    return CallableFunction(lambda pts: factor * fn(pts), fn.box)


@dataclass
class InputTuple:
    functions: list

    def __post_init__(self):
        self.functions = list(self.functions)

    @property
    def boxes(self) -> list:
        return [f.box for f in self.functions]

    def validate(self, datum: BLDatum) -> list:
        out = []
        if len(self.functions) != datum.m:
            out.append(f"{len(self.functions)} inputs for {datum.m} maps")
            return out
        for j, (f, nj) in enumerate(zip(self.functions, datum.codims)):
            if f.box.dim != nj:
                out.append(f"input {j} has dimension {f.box.dim}, map expects {nj}")
        return out


# ---------------------------------------------------------------------------
# quadrature primitives


def _exact_mass(fn) -> Optional[float]:
    mass = getattr(fn, "exact_mass", None)
    return mass


def integrate_function(
    fn, q: QuadratureSpec, stream: int = 0, prefer_exact: bool = False
):
    """Integral of a single input over its support box.  Returns (value, err).

    Sampled functions integrate their own grid exactly under tensor-grid.
    prefer_exact short-circuits to the closed-form mass when one exists.
    """
    if prefer_exact:
        mass = _exact_mass(fn)
        if mass is not None:
            return float(mass), 0.0
    if isinstance(fn, SampledFunction) and q.method == "tensor-grid":
        return fn.native_mass(), 0.0
    box = fn.box
    if q.method == "tensor-grid":
        val = _grid_box_integral(fn, box, q.resolution)
        coarse = _grid_box_integral(fn, box, max(q.resolution // 2, 2))
        return val, abs(val - coarse)
    total = 0.0
    totsq = 0.0
    count = 0
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    for index, size in mc.iter_chunks(q.resolution):
        gen = mc.chunk_generator(q.seed, stream, index)
        pts = mc.uniform_box(gen, size, lo, hi)
        vals = fn(pts)
        total += float(vals.sum())
        totsq += float((vals * vals).sum())
        count += size
    mean = total / count
    var = max(totsq / count - mean * mean, 0.0)
    vol = box.volume()
    return vol * mean, vol * math.sqrt(var / count)


def _grid_box_integral(fn, box: Box, resolution: int) -> float:
    axes = box.midpoint_axes(resolution)
    d = box.dim
    cell = box.volume() / resolution**d
    total = 0.0
    npts = resolution**d
    chunk = max(mc.CHUNK // max(d, 1), 1)
    for start in range(0, npts, chunk):
        idx = np.arange(start, min(start + chunk, npts))
        coords = np.unravel_index(idx, (resolution,) * d)
        pts = np.column_stack([axes[i][coords[i]] for i in range(d)])
        total += float(fn(pts).sum())
    return total * cell


def _pullback_values(datum: BLDatum, funcs, pts: np.ndarray) -> np.ndarray:
    vals = np.ones(pts.shape[0])
    for p, L, f in zip(datum.exponents, datum.maps, funcs):
        if p == 0.0:
            continue
        vals *= f(pts @ L.T) ** p
    return vals


def _grid_pullback_integral(
    datum: BLDatum, funcs, domain: Box, resolution: int
) -> tuple:
    """Midpoint quadrature of prod (f_j o L_j)^{p_j} over an n-dim box.

    Returns (integral, boundary_fraction): the fraction of the integral carried
    by the outermost layer of cells, used to detect an undersized domain.
    """
    n = domain.dim
    axes = domain.midpoint_axes(resolution)
    cell = domain.volume() / resolution**n
    total = 0.0
    boundary = 0.0
    npts = resolution**n
    chunk = max(mc.CHUNK // max(n, 1), 1)
    for start in range(0, npts, chunk):
        idx = np.arange(start, min(start + chunk, npts))
        coords = np.unravel_index(idx, (resolution,) * n)
        pts = np.column_stack([axes[i][coords[i]] for i in range(n)])
        vals = _pullback_values(datum, funcs, pts)
        total += float(vals.sum())
        edge = np.zeros(len(idx), dtype=bool)
        for i in range(n):
            edge |= (coords[i] == 0) | (coords[i] == resolution - 1)
        boundary += float(vals[edge].sum())
    frac = boundary / total if total > 0 else 0.0
    return total * cell, frac


def _mc_pullback_integral(
    datum: BLDatum, funcs, domain: Box, samples: int, seed: int, stream: int
) -> tuple:
    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    widths = hi - lo
    shell_lo = lo + 0.02 * widths
    shell_hi = hi - 0.02 * widths
    total = 0.0
    totsq = 0.0
    boundary = 0.0
    count = 0
    for index, size in mc.iter_chunks(samples):
        gen = mc.chunk_generator(seed, stream, index)
        pts = mc.uniform_box(gen, size, lo, hi)
        vals = _pullback_values(datum, funcs, pts)
        total += float(vals.sum())
        totsq += float((vals * vals).sum())
        inner = np.all((pts >= shell_lo) & (pts <= shell_hi), axis=1)
        boundary += float(vals[~inner].sum())
        count += size
    mean = total / count
    var = max(totsq / count - mean * mean, 0.0)
    vol = domain.volume()
    frac = boundary / total if total > 0 else 0.0
    return vol * mean, vol * math.sqrt(var / count), frac


def auto_domain(datum: BLDatum, boxes: Sequence[Box]) -> Optional[Box]:
    """Bounding box of {x : L_j x in box_j for all j}, by linear programming.

    Returns None when the constraint polytope is empty (the integrand vanishes
    identically).  Raises when it is unbounded, which happens exactly when the
    maps share a common kernel direction.
    """
    rows = []
    ubs = []
    for L, box in zip(datum.maps, boxes):
        rows.append(L)
        ubs.extend(box.hi)
        rows.append(-L)
        ubs.extend(-np.asarray(box.lo))
    A_ub = np.vstack(rows)
    b_ub = np.asarray(ubs, dtype=float)
    lo = np.empty(datum.n)
    hi = np.empty(datum.n)
    for i in range(datum.n):
        c = np.zeros(datum.n)
        c[i] = 1.0
        low = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(None, None), method="highs")
        high = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=(None, None), method="highs")
        if low.status == 2 or high.status == 2:
            return None
        if low.status != 0 or high.status != 0:
            raise UnboundedDomainError(
                "integration domain is unbounded; pass an explicit domain"
            )
        lo[i] = low.fun
        hi[i] = -high.fun
    if np.any(hi <= lo):
        return None
    return Box(lo, hi)


def bl_functional(
    datum: BLDatum, inputs: InputTuple, q: QuadratureSpec, _stream_base: int = 0
) -> tuple:
    """Value of the functional and an error estimate.

    Numerator and denominators are evaluated under the same quadrature spec so
    that systematic quadrature bias largely cancels in the quotient.  Under
    tensor-grid the error estimate is a half-resolution difference; under
    monte-carlo it is a propagated standard error.
    """
    bad = validate_datum(datum)
    if bad:
        raise DatumError("; ".join(bad))
    bad = inputs.validate(datum)
    if bad:
        raise ValueError("; ".join(bad))

    denoms = []
    denom_errs = []
    for j, f in enumerate(inputs.functions):
        val, err = integrate_function(f, q, stream=_stream_base + 1 + j)
        if not val > 0.0:
            raise ZeroMassError(f"input {j} has zero estimated mass")
        denoms.append(val)
        denom_errs.append(err)

    domain = q.domain
    domain_is_exact = False
    if domain is None:
        domain = auto_domain(datum, inputs.boxes)
        if domain is None:
            return 0.0, 0.0
        # auto domain contains the whole support of compactly supported tuples,
        # so mass on the outer cells is genuine rather than a truncation artifact
        domain_is_exact = all(f.compact_support for f in inputs.functions)

    if q.method == "tensor-grid":
        num, frac = _grid_pullback_integral(datum, inputs.functions, domain, q.resolution)
        coarse, _ = _grid_pullback_integral(
            datum, inputs.functions, domain, max(q.resolution // 2, 2)
        )
        num_err = abs(num - coarse)
    else:
        num, num_err, frac = _mc_pullback_integral(
            datum, inputs.functions, domain, q.resolution, q.seed, _stream_base
        )
    if frac > BOUNDARY_MASS_LIMIT and not domain_is_exact:
        raise DomainTooSmallError(
            f"outermost cells carry {frac:.1%} of the numerator mass; enlarge the domain"
        )

    log_den = math.fsum(p * math.log(d) for p, d in zip(datum.exponents, denoms))
    value = num * math.exp(-log_den)
    if num > 0.0:
        rel = (num_err / num) ** 2
        for p, d, e in zip(datum.exponents, denoms, denom_errs):
            rel += (p * e / d) ** 2
        err = value * math.sqrt(rel)
    else:
        err = num_err * math.exp(-log_den)
    return value, err


# ---------------------------------------------------------------------------
# convolution


def _sample_on_grid(fn, h: np.ndarray) -> SampledFunction:
    box = fn.box
    lo = np.asarray(box.lo)
    widths = box.widths
    cells = np.maximum(np.ceil(widths / h - 1e-9).astype(int), 1)
    axes = [lo[i] + (np.arange(cells[i]) + 0.5) * h[i] for i in range(box.dim)]
    shape = tuple(cells)
    npts = int(np.prod(shape))
    vals = np.empty(npts)
    chunk = max(mc.CHUNK // max(box.dim, 1), 1)
    for start in range(0, npts, chunk):
        idx = np.arange(start, min(start + chunk, npts))
        coords = np.unravel_index(idx, shape)
        pts = np.column_stack([axes[i][coords[i]] for i in range(box.dim)])
        vals[idx] = fn(pts)
    return SampledFunction(axes, vals.reshape(shape))


def convolve_inputs(f: InputTuple, g: InputTuple, q: QuadratureSpec) -> InputTuple:
    """Componentwise convolutions f_j * g_j as sampled functions.

    Both factors are resampled onto grids with a common spacing per axis, and
    the discrete convolution preserves the identity
    int(f_j * g_j) = int(f_j) int(g_j) exactly at the sampled level.
    """
    if len(f.functions) != len(g.functions):
        raise ValueError("input tuples have different lengths")
    out = []
    for fj, gj in zip(f.functions, g.functions):
        if fj.box.dim != gj.box.dim:
            raise ValueError("convolution factors have different dimensions")
        h = np.maximum(fj.box.widths, gj.box.widths) / q.resolution
        sf = _sample_on_grid(fj, h)
        sg = _sample_on_grid(gj, h)
        conv = fftconvolve(sf.values, sg.values)
        conv = np.maximum(conv, 0.0) * np.prod(h)
        axes = []
        for i in range(fj.box.dim):
            start = sf.axes[i][0] + sg.axes[i][0]
            axes.append(start + np.arange(conv.shape[i]) * h[i])
        out.append(SampledFunction(axes, conv))
    return InputTuple(out)


# ---------------------------------------------------------------------------
# convolution inequality check


@dataclass
class BallCheckReport:
    bl_f: float
    bl_g: float
    bl_conv: float
    bl_h_max: float
    argmax_x: np.ndarray
    lhs: float
    rhs: float
    slack: float
    stderr: float
    verdict: str
    h_values: list
    skipped_x: int
    extremiser_consequences: Optional[dict]

    def to_json(self) -> dict:
        out = {
            "bl_f": self.bl_f,
            "bl_g": self.bl_g,
            "bl_conv": self.bl_conv,
            "bl_h_max": self.bl_h_max,
            "argmax_x": list(map(float, np.atleast_1d(self.argmax_x))),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "stderr": self.stderr,
            "verdict": self.verdict,
            "h_values": self.h_values,
            "skipped_x": self.skipped_x,
            "extremiser_consequences": self.extremiser_consequences,
        }
        return out


def _verdict(slack: float, sigma: float) -> str:
    if slack >= 3.0 * sigma:
        return "pass"
    if slack <= -3.0 * sigma:
        return "fail"
    return "inconclusive"


def ball_inequality_check(
    datum: BLDatum,
    f: InputTuple,
    g: InputTuple,
    x_grid: np.ndarray,
    q: QuadratureSpec,
    near_extremiser: bool = False,
) -> BallCheckReport:
    """Check BL(f) BL(g) <= max_x BL(h^x) BL(f*g) over a finite grid of x.

    Inputs are normalized by estimated masses, the same estimate reused on
    both sides.  The grid maximum underestimates the supremum, so a negative
    slack beyond three combined standard errors is reported as "fail" while a
    small one is "inconclusive".  With near_extremiser set, the consequences
    BL(f) <= BL(f*g) and BL(f) <= max_x BL(h^x) are reported as well.
    """
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[1] != datum.n:
        raise ValueError(f"x grid points must lie in R^{datum.n}")

    f_norm = []
    for j, fj in enumerate(f.functions):
        mass, _ = integrate_function(fj, q, stream=1000 + j)
        if not mass > 0.0:
            raise ZeroMassError(f"input f[{j}] has zero estimated mass")
        f_norm.append(scale_input(fj, 1.0 / mass))
    g_norm = []
    for j, gj in enumerate(g.functions):
        mass, _ = integrate_function(gj, q, stream=2000 + j)
        if not mass > 0.0:
            raise ZeroMassError(f"input g[{j}] has zero estimated mass")
        g_norm.append(scale_input(gj, 1.0 / mass))
    fn = InputTuple(f_norm)
    gn = InputTuple(g_norm)

    bl_f, err_f = bl_functional(datum, fn, q, _stream_base=3000)
    bl_g, err_g = bl_functional(datum, gn, q, _stream_base=4000)
    conv = convolve_inputs(fn, gn, q)
    bl_conv, err_conv = bl_functional(datum, conv, q, _stream_base=5000)

    h_values = []
    bl_h_max = -math.inf
    err_h_max = 0.0
    argmax = x_grid[0]
    skipped = 0
    for ix, x in enumerate(x_grid):
        hs = []
        degenerate = False
        for L, fj, gj in zip(datum.maps, fn.functions, gn.functions):
            gj_flip = (
                gj.reflected_at(L @ x)
                if isinstance(gj, GaussianFunction)
                else CallableFunction(
                    (lambda gj, c: lambda pts: gj(c - np.atleast_2d(pts)))(gj, L @ x),
                    gj.box.reflect_translate(L @ x),
                )
            )
            hj = product_input(fj, gj_flip)
            if hj is None:
                degenerate = True
                break
            hs.append(hj)
        if degenerate:
            skipped += 1
            h_values.append(None)
            continue
        try:
            val, err = bl_functional(
                datum, InputTuple(hs), q, _stream_base=6000 + 100 * ix
            )
        except ZeroMassError:
            skipped += 1
            h_values.append(None)
            continue
        h_values.append(val)
        if val > bl_h_max:
            bl_h_max = val
            err_h_max = err
            argmax = x
    if skipped == len(x_grid):
        raise DegenerateLocalizationError(
            "every localized tuple h^x had empty support; widen the x grid"
        )

    lhs = bl_f * bl_g
    rhs = bl_h_max * bl_conv
    err_lhs = lhs * math.hypot(err_f / bl_f, err_g / bl_g)
    err_rhs = rhs * math.hypot(
        err_h_max / bl_h_max if bl_h_max > 0 else 0.0,
        err_conv / bl_conv if bl_conv > 0 else 0.0,
    )
    slack = rhs - lhs
    sigma = math.hypot(err_lhs, err_rhs)
    verdict = _verdict(slack, sigma)

    consequences = None
    if near_extremiser:
        s1 = bl_conv - bl_f
        sg1 = math.hypot(err_conv, err_f)
        s2 = bl_h_max - bl_f
        sg2 = math.hypot(err_h_max, err_f)
        consequences = {
            "conv_dominates": {
                "slack": s1,
                "stderr": sg1,
                "verdict": _verdict(s1, sg1),
            },
            "localization_dominates": {
                "slack": s2,
                "stderr": sg2,
                "verdict": _verdict(s2, sg2),
            },
        }

    return BallCheckReport(
        bl_f=bl_f,
        bl_g=bl_g,
        bl_conv=bl_conv,
        bl_h_max=bl_h_max,
        argmax_x=argmax,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        stderr=sigma,
        verdict=verdict,
        h_values=h_values,
        skipped_x=skipped,
        extremiser_consequences=consequences,
    )


# ---------------------------------------------------------------------------
# Poisson smoothing


def poisson_kappa(mu: float, t: float, d: int = 1) -> float:
    """Sharp constancy level of the Poisson kernel at height t and step mu:
    sup over |x - y| <= mu of P_t(x) / P_t(y)."""
    if mu < 0 or t <= 0:
        raise ValueError("need mu >= 0 and t > 0")
    s = 0.5 * (-mu + math.sqrt(mu * mu + 4.0 * t * t))
    ratio = (t * t + (s + mu) ** 2) / (t * t + s * s)
    return ratio ** (0.5 * (d + 1))


def poisson_certified_mu(kappa: float, t: float, d: int = 1) -> float:
    """Largest step mu at which the Poisson kernel is kappa-constant."""
    if kappa < 1.0:
        raise ValueError("kappa must be at least 1")
    if kappa == 1.0:
        return 0.0
    lo, hi = 0.0, t
    while poisson_kappa(hi, t, d) <= kappa:
        hi *= 2.0
        if hi > 1e9 * t:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if poisson_kappa(mid, t, d) <= kappa:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class PoissonSmoothResult:
    smoothed: SampledFunction
    t: float
    kappa: Optional[float]
    mu_certified: Optional[float]


def poisson_smooth(
    f: SampledFunction, t: float, kappa: Optional[float] = None, window: float = 50.0
) -> PoissonSmoothResult:
    """Convolve a sampled function with the Poisson kernel at height t.

    The kernel is truncated to a window of half-width `window * t` and
    renormalized to unit mass, so smoothing preserves the grid mass exactly.
    In one dimension the weights integrate the kernel over each cell in closed
    form; in higher dimensions they are midpoint samples.  When kappa is given
    the result carries the largest certified constancy step of the untruncated
    kernel at that level.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    d = len(f.axes)
    h = f.steps
    half_cells = np.maximum(np.ceil(window * t / h).astype(int), 2)
    if d == 1:
        k = np.arange(-half_cells[0], half_cells[0] + 1)
        edges_lo = (k - 0.5) * h[0]
        edges_hi = (k + 0.5) * h[0]
        weights = (np.arctan(edges_hi / t) - np.arctan(edges_lo / t)) / math.pi
    elif d == 2:
        kx = np.arange(-half_cells[0], half_cells[0] + 1) * h[0]
        ky = np.arange(-half_cells[1], half_cells[1] + 1) * h[1]
        xx, yy = np.meshgrid(kx, ky, indexing="ij")
        r2 = xx * xx + yy * yy
        weights = t / (2.0 * math.pi * (t * t + r2) ** 1.5) * h[0] * h[1]
    else:
        raise ValueError("poisson_smooth supports dimensions 1 and 2")
    weights = weights / weights.sum()
    conv = fftconvolve(f.values, weights)
    conv = np.maximum(conv, 0.0)
    axes = []
    for i in range(d):
        start = f.axes[i][0] - half_cells[i] * h[i]
        axes.append(start + np.arange(conv.shape[i]) * h[i])
    smoothed = SampledFunction(axes, conv)
    mu = poisson_certified_mu(kappa, t, d) if kappa is not None else None
    return PoissonSmoothResult(smoothed=smoothed, t=t, kappa=kappa, mu_certified=mu)
