"""Command line front end.

Exit status: 0 on success (including inconclusive checks, which are flagged in
the output), 1 when a numerical check fails, 2 on usage or input errors.
All outputs are deterministic functions of the flags; files are written
atomically.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .datum import (
    BLDatum,
    DatumError,
    finiteness_check,
    load_datum,
    scaling_condition,
    validate_datum,
)
from .functional import (
    Box,
    GaussianFunction,
    IndicatorFunction,
    InputTuple,
    QuadratureSpec,
    ball_inequality_check,
    bl_functional,
)
from .gaussians import (
    GaussianTuple,
    SingularMatrixError,
    gaussian_bl_value,
    scale_gaussian,
    solve_extremiser,
    truncation_deficit,
)
from .nonlinear import (
    LocalizedProblem,
    REGISTRY_TAGS,
    ThresholdError,
    UncertifiedInputError,
    base_case_check,
    lie_group_young,
    localization_radius,
    recursive_step_check,
    registry,
)
from .scheduler import (
    ScheduleParams,
    accumulated_factor,
    choose_delta0,
    final_bound,
    kappa_evolution,
    schedule,
    validate_params,
)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _np_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_np_default) + "\n")


def _threads() -> int:
    raw = os.environ.get("BL_SCALES_THREADS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def _load(path: str) -> BLDatum:
    datum = load_datum(path)
    return datum


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(
        method=args.method, resolution=args.resolution, seed=args.seed
    )


def cmd_constant(args) -> int:
    datum = _load(args.input)
    res = solve_extremiser(
        datum, tol=args.tol, max_iter=args.max_iter, damping=args.damping
    )
    out = {
        "bl_value": res.bl_value,
        "converged": res.converged,
        "status": res.status,
        "iterations": res.iterations,
        "residual": res.residual,
        "tol": args.tol,
    }
    _write_json(args.output, out)
    return 0 if res.converged else 1


def cmd_extremiser(args) -> int:
    datum = _load(args.input)
    res = solve_extremiser(
        datum, tol=args.tol, max_iter=args.max_iter, damping=args.damping
    )
    out = res.to_json()
    out["tol"] = args.tol
    _write_json(args.output, out)
    return 0 if res.converged else 1


def cmd_finiteness(args) -> int:
    datum = _load(args.input)
    report = finiteness_check(datum, mode=args.mode, budget=args.budget, seed=args.seed)
    out = report.to_json()
    out["mode"] = args.mode
    out["budget"] = args.budget
    out["seed"] = args.seed
    _write_json(args.output, out)
    # an infinite verdict is a successful determination, not a check failure;
    # the verdict lives in the artifact, the status only reports usage errors
    return 0


def _build_inputs(datum: BLDatum, kind: str, args) -> InputTuple:
    if kind == "extremiser":
        res = solve_extremiser(datum)
        g = res.gaussians
        return InputTuple(
            [GaussianFunction(A, c) for A, c in zip(g.blocks, g.amplitudes)]
        )
    if kind == "gaussian-iso":
        return InputTuple(
            [GaussianFunction(np.eye(nj)) for nj in datum.codims]
        )
    if kind == "indicator":
        return InputTuple(
            [IndicatorFunction(Box([0.0] * nj, [1.0] * nj)) for nj in datum.codims]
        )
    raise ValueError(f"unknown input kind {kind!r}")


def cmd_functional(args) -> int:
    datum = _load(args.input)
    inputs = _build_inputs(datum, args.inputs, args)
    value, err = bl_functional(datum, inputs, _quad(args))
    out = {
        "value": value,
        "stderr": err,
        "inputs": args.inputs,
        "method": args.method,
        "resolution": args.resolution,
        "seed": args.seed,
    }
    _write_json(args.output, out)
    return 0


def cmd_ball_check(args) -> int:
    datum = _load(args.input)
    res = solve_extremiser(datum)
    g = res.gaussians
    gauss = InputTuple(
        [GaussianFunction(A, c) for A, c in zip(g.blocks, g.amplitudes)]
    )
    if args.inputs == "indicator":
        f = InputTuple(
            [
                IndicatorFunction(Box([-0.5] * nj, [0.5] * nj))
                for nj in datum.codims
            ]
        )
    else:
        f = _build_inputs(datum, args.inputs, args)
    x_grid = np.zeros((1, datum.n))
    report = ball_inequality_check(
        datum, f, gauss, x_grid, _quad(args), near_extremiser=res.converged
    )
    out = report.to_json()
    out["method"] = args.method
    out["resolution"] = args.resolution
    out["seed"] = args.seed
    _write_json(args.output, out)
    return 1 if report.verdict == "fail" else 0


def cmd_nonlinear(args) -> int:
    datum = _load(args.input) if args.input else None
    nd = registry(args.group, datum=datum)
    u = nd.base_point()
    lp = LocalizedProblem(
        center=tuple(u), delta=args.delta0, mu=args.mu, kappa=args.kappa
    )
    q = _quad(args)
    ext = solve_extremiser(nd.linearize(u))
    g = scale_gaussian(ext.gaussians, args.delta0)
    f = InputTuple(
        [GaussianFunction(A, c) for A, c in zip(g.blocks, g.amplitudes)]
    )
    if args.mode == "base":
        report = base_case_check(nd, lp, f, q, args.alpha, args.beta_prime)
        out = report.to_json()
    else:
        r = localization_radius(args.delta0)
        x_grid = np.vstack([u, u + r * np.eye(nd.n)[0]])
        report = recursive_step_check(
            nd, lp, f, x_grid, q, args.alpha, args.beta, args.beta_prime
        )
        out = report.to_json()
    out["group"] = args.group
    out["mode"] = args.mode
    out["delta"] = args.delta0
    out["mu"] = args.mu
    out["kappa"] = args.kappa
    out["seed"] = args.seed
    _write_json(args.output, out)
    return 1 if report.verdict == "fail" else 0


def cmd_young_lie(args) -> int:
    deltas = [float(tok) for tok in args.deltas.split(",") if tok.strip()]
    if not deltas:
        raise ValueError("no scales supplied")
    q = QuadratureSpec(method=args.method, resolution=args.resolution, seed=args.seed)
    table = lie_group_young(
        args.group,
        deltas,
        q=q,
        mu=args.mu,
        kappa=args.kappa,
        workers=_threads(),
    )
    lines = [
        f"# group = {args.group}",
        f"# seed = {args.seed}",
        f"# method = {args.method}",
        f"# resolution = {args.resolution}",
        f"# bound = {_fmt(table['bound'])}",
        "delta,ratio,stderr,bound,slack",
    ]
    for row in table["rows"]:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (row.delta, row.ratio, row.stderr, row.bound, row.slack)
            )
        )
    _write_text(args.output, "\n".join(lines) + "\n")
    bad = any(row.slack < -3.0 * row.stderr for row in table["rows"])
    return 1 if bad else 0


def cmd_schedule(args) -> int:
    params = ScheduleParams(
        alpha=args.alpha,
        beta=args.beta,
        beta_prime=args.beta_prime,
        delta0=args.delta0,
        mu=args.mu,
        epsilon=args.epsilon,
        sigma=args.sigma,
    )
    bad = validate_params(params)
    if bad:
        print("; ".join(bad), file=sys.stderr)
        return 2
    deltas, k_star = schedule(params)
    product, log_bound = accumulated_factor(params, k_star)
    kappas = kappa_evolution(params, k_star, args.kappa0)
    lines = [
        f"# seed = {args.seed}",
        f"# k_star = {k_star}",
        f"# accumulated_factor = {_fmt(product)}",
        f"# log_bound = {_fmt(log_bound)}",
        f"# final_bound = {_fmt(final_bound(params.epsilon, params.sigma))}",
        "k,delta_k,kappa_k,running_product",
    ]
    running = 1.0
    for k, d in enumerate(deltas):
        if k < k_star:
            t = d**params.beta
            running *= (1.0 + t) * math.exp(params.sigma * t)
        lines.append(f"{k},{_fmt(d)},{_fmt(kappas[min(k, len(kappas) - 1)])},{_fmt(running)}")
    _write_text(args.output, "\n".join(lines) + "\n")
    return 0


def _add_common(p, quad=False, solver=False):
    p.add_argument("--output", default=None, help="output path (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    if quad:
        p.add_argument(
            "--method", choices=["tensor-grid", "monte-carlo"], default="tensor-grid"
        )
        p.add_argument("--resolution", type=int, default=256)
    if solver:
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--max-iter", type=int, default=10000)
        p.add_argument("--damping", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blscales",
        description="Brascamp-Lieb constants, extremisers, and scale schedules",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constant", help="gaussian constant of a datum")
    p.add_argument("--input", required=True)
    _add_common(p, solver=True)
    p.set_defaults(fn=cmd_constant)

    p = sub.add_parser("extremiser", help="gaussian extremiser blocks")
    p.add_argument("--input", required=True)
    _add_common(p, solver=True)
    p.set_defaults(fn=cmd_extremiser)

    p = sub.add_parser("finiteness", help="finiteness and simplicity report")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--mode",
        choices=["rank-one-exact", "exact-lattice", "randomized"],
        default="exact-lattice",
    )
    p.add_argument("--budget", type=int, default=512)
    _add_common(p)
    p.set_defaults(fn=cmd_finiteness)

    p = sub.add_parser("functional", help="evaluate the functional on inputs")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--inputs",
        choices=["gaussian-iso", "extremiser", "indicator"],
        default="gaussian-iso",
    )
    _add_common(p, quad=True)
    p.set_defaults(fn=cmd_functional)

    p = sub.add_parser("ball-check", help="convolution inequality check")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--inputs",
        choices=["gaussian-iso", "extremiser", "indicator"],
        default="indicator",
    )
    _add_common(p, quad=True)
    p.set_defaults(fn=cmd_ball_check)

    p = sub.add_parser("nonlinear", help="base or recursive step check")
    p.add_argument("--group", required=True)
    p.add_argument("--input", default=None, help="datum file for the linear tag")
    p.add_argument("--mode", choices=["base", "recursive"], default="recursive")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--beta-prime", type=float, default=0.4)
    p.add_argument("--delta0", type=float, default=0.05)
    p.add_argument("--mu", type=float, default=5e-5)
    p.add_argument("--kappa", type=float, default=1.5)
    _add_common(p, quad=True)
    p.set_defaults(fn=cmd_nonlinear)

    p = sub.add_parser("young-lie", help="group convolution ratios at scales")
    p.add_argument("--group", required=True)
    p.add_argument("--deltas", default="0.2,0.1,0.05")
    p.add_argument("--mu", type=float, default=1e-4)
    p.add_argument("--kappa", type=float, default=1.5)
    _add_common(p, quad=True)
    p.set_defaults(fn=cmd_young_lie)

    p = sub.add_parser("schedule", help="scale schedule bookkeeping")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--beta-prime", type=float, default=0.4)
    p.add_argument("--delta0", type=float, default=0.1)
    p.add_argument("--mu", type=float, default=1e-10)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--kappa0", type=float, default=1.01)
    _add_common(p)
    p.set_defaults(fn=cmd_schedule)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except DatumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ThresholdError, UncertifiedInputError, SingularMatrixError) as exc:
        print(f"check error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
