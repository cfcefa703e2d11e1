"""Localized nonlinear constants: registry data, constancy certification,
base case, recursive step, and the perturbation comparison."""

import math

import numpy as np
import pytest

from blscales.functional import GaussianFunction, InputTuple, QuadratureSpec
from blscales.gaussians import scale_gaussian, solve_extremiser
from blscales.nonlinear import (
    LinearizationError,
    LocalizedProblem,
    NonlinearDatum,
    Submersion,
    ThresholdError,
    UncertifiedInputError,
    ball_sampler,
    base_case_check,
    is_kappa_constant,
    lie_group_young,
    localization_radius,
    localized_ratio,
    perturbation_check,
    recursive_step_check,
    registry,
    validate_submersion,
)

ROOT3_OVER_2 = 0.8660254037844386


def scaled_extremiser_inputs(nd, delta, tol=1e-10):
    ext = solve_extremiser(nd.linearize(), tol=tol)
    assert ext.converged
    g = scale_gaussian(ext.gaussians, delta)
    return InputTuple(
        [GaussianFunction(A, c) for A, c in zip(g.blocks, g.amplitudes)]
    )


# ---------------------------------------------------------------------------
# registry and submersion validation


@pytest.mark.parametrize(
    "tag",
    ["young-euclidean-1", "young-euclidean-2", "young-heisenberg", "young-affine-2d",
     "perturbed-quadratic:0.3"],
)
def test_registry_data_validate(tag):
    nd = registry(tag)
    assert nd.validate() == []
    assert nd.m == 3
    assert nd.sigma == pytest.approx(2.0)


def test_registry_linear_needs_datum(young_datum):
    with pytest.raises(ValueError):
        registry("linear")
    nd = registry("linear", datum=young_datum)
    assert nd.validate() == []
    lin = nd.linearize()
    for A, B in zip(lin.maps, young_datum.maps):
        assert np.array_equal(A, B)


def test_registry_rejects_bad_tags():
    with pytest.raises(ValueError, match="available"):
        registry("young-solvable")
    with pytest.raises(ValueError):
        registry("young-euclidean-0")
    with pytest.raises(ValueError):
        registry("perturbed-quadratic:-1")


def test_heisenberg_jacobian_matches_central_differences():
    nd = registry("young-heisenberg")
    s = nd.submersions[1]
    rng = np.random.default_rng(17)
    h = 1e-6
    for _ in range(5):
        w = rng.uniform(-0.4, 0.4, 6)
        J = s.jacobian(w)
        for i in range(6):
            e = np.zeros(6)
            e[i] = h
            fd = (s(w + e) - s(w - e))[0] / (2.0 * h)
            assert np.allclose(fd, J[:, i], atol=1e-7)


def test_affine_group_jacobian_matches_central_differences():
    nd = registry("young-affine-2d")
    s = nd.submersions[1]
    rng = np.random.default_rng(23)
    h = 1e-6
    for _ in range(5):
        w = rng.uniform(-0.3, 0.3, 4)
        J = s.jacobian(w)
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            fd = (s(w + e) - s(w - e))[0] / (2.0 * h)
            assert np.allclose(fd, J[:, i], atol=1e-6)


def test_heisenberg_c2_bound_is_sharp():
    s = registry("young-heisenberg").submersions[1]
    # the remainder is exactly the bracket term; the direction below attains
    # |rem| = |w|^2 / 4
    w = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) / math.sqrt(2.0)
    for t in (0.5, 0.1, 0.02):
        c = np.zeros(6)
        rem = (s(c + t * w) - s(c[None, :]))[0] - (s.jacobian(c) @ (t * w))
        ratio = np.abs(rem).max() / t**2
        assert ratio == pytest.approx(0.25, rel=1e-9)
    # random pairs never exceed the declared bound
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(2000):
        c = rng.uniform(-0.5, 0.5, 6)
        d = rng.uniform(-0.3, 0.3, 6)
        rem = (s(c + d) - s(c[None, :]))[0] - (s.jacobian(c) @ d)
        worst = max(worst, float(np.abs(rem).max()) / float(d @ d))
    assert 0.2 <= worst <= 0.25 * (1.0 + 1e-12)


def test_validate_submersion_flags_wrong_jacobian():
    s = Submersion(
        map=lambda pts: np.sin(np.atleast_2d(pts)[:, :1]),
        jacobian=lambda x: np.array([[2.0]]),
        base_point=np.zeros(1),
        c2_bound=0.5,
    )
    msgs = validate_submersion(s)
    assert any("finite difference" in m for m in msgs)


def test_validate_submersion_flags_nonsurjective():
    s = Submersion(
        map=lambda pts: 0.0 * np.atleast_2d(pts)[:, :1],
        jacobian=lambda x: np.zeros((1, 2)),
        base_point=np.zeros(2),
        c2_bound=0.0,
    )
    msgs = validate_submersion(s)
    assert any("surjective" in m for m in msgs)


# ---------------------------------------------------------------------------
# kappa-constancy


def test_kappa_constancy_gaussian_band():
    fn = GaussianFunction(np.eye(1))
    R, mu = 2.0, 0.05
    # sup of fn(x)/fn(y) over |x| <= R, |x - y| <= mu
    analytic = math.exp(math.pi * (2.0 * R * mu + mu * mu))
    rep = is_kappa_constant(fn, ball_sampler(np.zeros(1), R), mu, analytic, samples=20000)
    assert rep.ok
    assert rep.worst_ratio <= analytic * (1.0 + 1e-9)
    rejected = is_kappa_constant(
        fn, ball_sampler(np.zeros(1), R), mu, 1.5, samples=20000
    )
    assert not rejected.ok
    assert rejected.worst_ratio > 1.5
    # witness pair reproduces the reported ratio exactly
    wx, wy = rejected.witness_x, rejected.witness_y
    again = float(fn(wx[None, :])[0] / fn(wy[None, :])[0])
    assert again == pytest.approx(rejected.worst_ratio, rel=1e-12)
    assert np.linalg.norm(wx - wy) <= mu * (1.0 + 1e-12)


def test_kappa_constancy_ignores_subnormal_noise():
    # a sharply scaled gaussian underflows to subnormals over much of the
    # region; quotients there are quantization noise and must not refute a
    # level the true function satisfies
    nd = registry("perturbed-quadratic:0.0")
    f = scaled_extremiser_inputs(nd, 0.001)
    fn = f.functions[1]
    a = float(fn.A[0, 0])
    R = math.sqrt(2.0) * 2.0 * localization_radius(0.001)
    mu = 3e-6
    analytic = math.exp(math.pi * a * (2.0 * R * mu + mu * mu))
    sampler = ball_sampler(np.zeros(1), R)
    rep = is_kappa_constant(fn, sampler, mu, analytic, samples=20000)
    assert rep.ok
    assert rep.worst_ratio <= analytic * (1.0 + 1e-9)


def test_kappa_constancy_exact_zero_is_violation():
    from blscales.functional import Box, IndicatorFunction

    fn = IndicatorFunction(Box([0.0], [1.0]))
    rep = is_kappa_constant(
        fn, ball_sampler(np.array([1.0]), 0.1), mu=0.05, kappa=100.0, samples=5000
    )
    assert not rep.ok
    assert math.isinf(rep.worst_ratio)
    assert float(fn(rep.witness_x[None, :])[0]) > 0.0
    assert float(fn(rep.witness_y[None, :])[0]) == 0.0


def test_localized_ratio_matches_sharp_constant():
    nd = registry("young-euclidean-1")
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.05, mu=1e-4, kappa=1.5)
    f = scaled_extremiser_inputs(nd, 0.05)
    ratio, err = localized_ratio(nd, lp, f, QuadratureSpec(resolution=512))
    assert abs(ratio - ROOT3_OVER_2) <= 2e-3
    assert ratio <= ROOT3_OVER_2 + 1e-9


def test_localized_ratio_rejects_uncertified_inputs():
    nd = registry("young-euclidean-1")
    # at step mu = 0.01 the delta-scale gaussian swings far beyond kappa = 1.5
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.05, mu=0.01, kappa=1.5)
    f = scaled_extremiser_inputs(nd, 0.05)
    with pytest.raises(UncertifiedInputError) as exc:
        localized_ratio(nd, lp, f, QuadratureSpec(resolution=64))
    wx, wy = exc.value.witness
    assert wx is not None and wy is not None


def test_localized_problem_validation():
    with pytest.raises(ValueError):
        LocalizedProblem(center=(0.0,), delta=1.5, mu=1e-4, kappa=1.5)
    with pytest.raises(ValueError):
        LocalizedProblem(center=(0.0,), delta=0.1, mu=0.0, kappa=1.5)
    with pytest.raises(ValueError):
        LocalizedProblem(center=(0.0,), delta=0.1, mu=1e-4, kappa=0.5)
    lp = LocalizedProblem(center=(0.0,), delta=0.1, mu=1e-4, kappa=1.5)
    assert lp.radius == pytest.approx(0.1 * math.log(10.0), rel=1e-15)
    assert lp.regime(1.5, 0.4) == "recursive"
    assert lp.regime(1.5, 0.4) == "recursive"
    base = LocalizedProblem(center=(0.0,), delta=0.1, mu=0.5, kappa=1.5)
    assert base.regime(1.5, 0.4) == "base"
    with pytest.raises(ValueError):
        localization_radius(1.0)


# ---------------------------------------------------------------------------
# base case


def test_base_case_passes_in_base_regime():
    nd = registry("perturbed-quadratic:0.5")
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.01, mu=1.5e-3, kappa=1.05)
    f = scaled_extremiser_inputs(nd, 1.0)
    rep = base_case_check(
        nd, lp, f, QuadratureSpec(resolution=128), alpha=1.5, beta_prime=0.4
    )
    assert rep.verdict == "pass"
    assert rep.threshold == pytest.approx(0.01**1.9, rel=1e-12)
    assert rep.linearization_dev <= rep.dev_bound <= lp.mu
    assert rep.bl_linear == pytest.approx(ROOT3_OVER_2, rel=1e-9)
    assert rep.bound == pytest.approx(1.05**2 * ROOT3_OVER_2, rel=1e-9)
    assert 0.0 < rep.ratio < rep.bound
    j = rep.to_json()
    assert j["verdict"] == "pass" and "extremiser" not in j


def test_base_case_threshold_guard():
    nd = registry("perturbed-quadratic:0.5")
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.01, mu=1e-6, kappa=1.05)
    f = scaled_extremiser_inputs(nd, 1.0)
    with pytest.raises(ThresholdError, match="recursive regime"):
        base_case_check(
            nd, lp, f, QuadratureSpec(resolution=64), alpha=1.5, beta_prime=0.4
        )


def test_base_case_linearization_guard():
    nd = registry("perturbed-quadratic:0.5")
    # mu sits above the regime threshold but below c2 r^2
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.01, mu=3e-4, kappa=1.05)
    f = scaled_extremiser_inputs(nd, 1.0)
    with pytest.raises(LinearizationError, match="deviation"):
        base_case_check(
            nd, lp, f, QuadratureSpec(resolution=64), alpha=1.5, beta_prime=0.4
        )


# ---------------------------------------------------------------------------
# recursive step


def test_recursive_step_linear_equality(young_datum):
    # for a linear datum with gaussian extremiser inputs the two sides of the
    # recursion describe the same scale-invariant quantity
    nd = registry("linear", datum=young_datum)
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.05, mu=1e-6, kappa=2.0)
    f = scaled_extremiser_inputs(nd, 0.05)
    x_grid = np.array([[0.0, 0.0], [0.05, -0.04]])
    rep = recursive_step_check(
        nd, lp, f, x_grid, QuadratureSpec(resolution=512),
        alpha=1.5, beta=0.3, beta_prime=0.4,
    )
    assert rep.equality_gap <= 1e-5
    assert rep.verdict == "pass"
    assert rep.slack > 0.2
    # both grid points localize the same scale-invariant ratio, so the argmax
    # is decided at quadrature-noise level; only the values are meaningful
    assert rep.max_ratio == pytest.approx(rep.lhs, abs=1e-5)
    assert rep.delta_fine == pytest.approx(0.05**1.5, rel=1e-12)
    assert rep.kappa_fine == pytest.approx(2.0 * math.exp(0.05**0.3), rel=1e-12)
    assert all(c["ok"] for c in rep.certifications)
    assert {c["kind"] for c in rep.certifications} == {"kernel", "product"}
    j = rep.to_json()
    assert len(j["entries"]) == 2
    assert j["equality_gap"] == rep.equality_gap


def test_recursive_step_regime_guard(young_datum):
    nd = registry("linear", datum=young_datum)
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.05, mu=0.01, kappa=2.0)
    f = scaled_extremiser_inputs(nd, 0.05)
    with pytest.raises(ThresholdError, match="base regime"):
        recursive_step_check(
            nd, lp, f, np.zeros((1, 2)), QuadratureSpec(resolution=64),
            alpha=1.5, beta=0.3, beta_prime=0.4,
        )


def test_recursive_step_rejects_far_x(young_datum):
    nd = registry("linear", datum=young_datum)
    lp = LocalizedProblem(center=(0.0, 0.0), delta=0.05, mu=1e-6, kappa=2.0)
    f = scaled_extremiser_inputs(nd, 0.05)
    with pytest.raises(ValueError, match="doubled"):
        recursive_step_check(
            nd, lp, f, np.array([[1.0, 0.0]]), QuadratureSpec(resolution=64),
            alpha=1.5, beta=0.3, beta_prime=0.4,
        )


# ---------------------------------------------------------------------------
# perturbation comparison


def test_perturbation_heisenberg_budget():
    nd = registry("young-heisenberg")
    u = np.zeros(6)
    q = QuadratureSpec(method="monte-carlo", resolution=400000, seed=0)
    prev = 0.0
    for delta in (0.1, 0.05, 0.025):
        rloc = localization_radius(delta)
        y = np.zeros(6)
        y[0] = 0.5 * rloc
        y[4] = -0.25 * rloc
        rep = perturbation_check(
            nd, u, y, delta, q, alpha=1.5, beta_prime=0.4
        )
        assert rep.verdict == "pass"
        assert rep.gamma == pytest.approx(0.45)
        assert rep.slack >= 0.0
        assert rep.l1_bound == pytest.approx(delta**0.45, rel=1e-12)
        assert 0.0 < rep.l1_diff <= rep.l1_bound
        # the log factor dominates at these scales, so the distance grows
        # even as delta shrinks
        assert rep.l1_diff > prev
        prev = rep.l1_diff


def test_perturbation_rejects_bad_arguments():
    nd = registry("young-heisenberg")
    u = np.zeros(6)
    q = QuadratureSpec(method="monte-carlo", resolution=1000)
    far = np.zeros(6)
    far[0] = 2.0 * localization_radius(0.05)
    with pytest.raises(ValueError, match="U_delta"):
        perturbation_check(nd, u, far, 0.05, q, alpha=1.5, beta_prime=0.4)
    y = np.zeros(6)
    y[0] = 0.5 * localization_radius(0.05)
    with pytest.raises(ValueError, match="gamma"):
        perturbation_check(
            nd, u, y, 0.05, q, alpha=1.5, beta_prime=0.4, gamma=0.3
        )
    with pytest.raises(ValueError, match="gamma"):
        perturbation_check(
            nd, u, y, 0.05, q, alpha=1.5, beta_prime=0.4, gamma=0.6
        )
    with pytest.raises(ValueError, match="delta"):
        perturbation_check(nd, u, y, 0.5, q, alpha=1.5, beta_prime=0.4)


def test_perturbation_linear_is_exact(young_datum):
    # linear maps make the two integrands identical
    nd = registry("linear", datum=young_datum)
    y = np.zeros(2)
    y[0] = 0.3 * localization_radius(0.05)
    rep = perturbation_check(
        nd, np.zeros(2), y, 0.05,
        QuadratureSpec(method="monte-carlo", resolution=50000),
        alpha=1.5, beta_prime=0.4,
    )
    assert rep.l1_diff <= 1e-12
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)
    assert rep.verdict == "pass"


# ---------------------------------------------------------------------------
# group Young study


def test_lie_group_young_rows_and_workers():
    deltas = [0.1, 0.05]
    kwargs = dict(
        deltas=deltas,
        q=QuadratureSpec(method="monte-carlo", resolution=50000, seed=3),
        mu=1e-5,
        kappa=1.5,
    )
    seq = lie_group_young("young-euclidean-1", workers=1, **kwargs)
    par = lie_group_young("young-euclidean-1", workers=2, **kwargs)
    assert seq["bound"] == pytest.approx(ROOT3_OVER_2, rel=1e-12)
    assert seq["fiber_dim"] == 1
    for a, b in zip(seq["rows"], par["rows"]):
        assert a.delta == b.delta
        assert a.ratio == b.ratio
        assert a.stderr == b.stderr
    for row in seq["rows"]:
        assert row.slack >= -3.0 * row.stderr
    fine = seq["rows"][-1]
    coarse = seq["rows"][0]
    assert fine.delta < coarse.delta
    assert fine.ratio >= coarse.ratio - 3.0 * math.hypot(fine.stderr, coarse.stderr)
