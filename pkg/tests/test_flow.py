import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from gcflow import bodies
from gcflow.flow import (FlowCollapse, FlowConfig, FlowState, V_RADIUS, diagnostics,
                         initial_body, normalize, polar_filter, round_radius_closed_form,
                         roundness, run, stable_dt, step)
from gcflow.geometry import bundle_from_support
from gcflow.grid import ball_volume, build_grid
from gcflow.support import enclosed_volume, radii_matrix, shrinker_residual, steiner_point


@pytest.mark.parametrize("kw", [dict(n=3), dict(alpha=0.0), dict(c_cfl=0.0), dict(c_cfl=1.5),
                                dict(normalization="sometimes"), dict(cadence=0),
                                dict(max_steps=-1), dict(init="cube")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        FlowConfig(**kw)


def test_config_defaults():
    assert FlowConfig(n=1).ratio_tol == 1e-6
    assert FlowConfig(n=2, resolution=(24, 48)).ratio_tol == 1e-2
    assert FlowConfig(n=1, alpha=1.5).in_uniqueness_range
    assert not FlowConfig(n=2, alpha=1.5).in_uniqueness_range


def test_perturbation_only_for_curves():
    with pytest.raises(ValueError):
        initial_body(FlowConfig(n=2, resolution=(16, 32), init="perturbed"))


@given(r=st.floats(0.3, 3.0))
def test_one_step_on_circle(r):
    cfg = FlowConfig(n=1, alpha=1.0, resolution=64, normalization="none")
    s = step(FlowState(bodies.sphere(build_grid(1, 64), r)), cfg)
    dt = s.t
    assert dt == stable_dt(bodies.sphere(build_grid(1, 64), r), cfg)
    np.testing.assert_allclose(s.body.h, r - dt / r, rtol=1e-14)
    assert s.step == 1


def _round_run(n, res, alpha, r0, dt=1e-5, steps=1000):
    cfg = FlowConfig(n=n, alpha=alpha, resolution=res, normalization="none", init="sphere")
    s = FlowState(bodies.sphere(build_grid(n, res), r0))
    for _ in range(steps):
        s = step(s, cfg, dt)
    return float(np.max(np.abs(s.body.h - round_radius_closed_form(r0, s.t, n, alpha))))


@pytest.mark.parametrize("n,res,alpha", [(1, 64, 1.0), (1, 64, 1.5), (2, (16, 32), 1.0),
                                         (2, (16, 32), 0.8)])
def test_round_law(n, res, alpha):
    assert _round_run(n, res, alpha, 1.0) <= 1e-6


@settings(max_examples=10)
@given(r0=st.floats(0.7, 2.0))
def test_round_law_any_radius(r0):
    assert _round_run(2, (16, 32), 1.0, r0) <= 1e-6


def test_round_closed_form():
    assert round_radius_closed_form(1.0, 0.0, 2, 1.0) == 1.0
    assert round_radius_closed_form(2.0, 1.0, 2, 1.0) == pytest.approx(5 ** (1 / 3), rel=1e-15)


def test_nonconvex_step_is_halved():
    cfg = FlowConfig(n=1, alpha=1.0, resolution=128, normalization="none")
    body = initial_body(cfg)
    s = step(FlowState(body), cfg, dt=5.0)
    k = round(math.log2(5.0 / s.t))
    assert k >= 1 and s.t == 5.0 * 2.0 ** -k
    assert radii_matrix(s.body).radii.min() > 0


def test_collapse_after_repeated_rejection():
    cfg = FlowConfig(n=1, alpha=1.0, resolution=128, normalization="none")
    body = bodies.sphere(build_grid(1, 128), 1e-3)
    with pytest.raises(FlowCollapse):
        step(FlowState(body), cfg, dt=1e9)


@pytest.mark.parametrize("n,res", [(1, 64), (2, (24, 48))])
def test_normalize_round(n, res):
    s = normalize(FlowState(bodies.sphere(build_grid(n, res), 2.0)))
    np.testing.assert_allclose(s.body.h, 1.0, rtol=1e-14)
    assert s.scale == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_normalize_volume_and_idempotent(seed):
    body = bodies.random_body(build_grid(2, (24, 48)), np.random.default_rng(seed))
    body = body.scaled(0.5 + seed)
    once = normalize(FlowState(body))
    V = enclosed_volume(once.body)
    assert abs(V - ball_volume(2)) <= 1e-10 * ball_volume(2)
    assert np.max(np.abs(steiner_point(once.body))) <= 1e-12
    twice = normalize(once)
    assert np.max(np.abs(twice.body.h - once.body.h)) <= 1e-12


def test_polar_filter_leaves_resolved_modes():
    g = build_grid(2, (24, 48))
    z = g.normals[..., 2]
    np.testing.assert_allclose(polar_filter(g, z), z, atol=1e-14)
    theta = np.broadcast_to(g.axes[1], g.shape)
    rough = np.cos(23 * theta)
    assert np.max(np.abs(polar_filter(g, rough)[0])) < 0.1
    row = g.shape[0] // 2
    np.testing.assert_allclose(polar_filter(g, rough)[row], rough[row], atol=1e-14)
    flat = np.ones(64)
    assert polar_filter(build_grid(1, 64), flat) is flat


@pytest.mark.parametrize("n,res", [(1, 64), (2, (24, 48))])
def test_roundness_sphere(n, res):
    Lam, Lmax, ratio, inV = roundness(bundle_from_support(bodies.sphere(build_grid(n, res))))
    # one-ulp differences between the two curvatures give Lambda of order 1e-31
    assert Lmax <= 1e-28 and ratio == pytest.approx(1.0, abs=1e-13)
    assert np.all(inV)


def test_roundness_curve_is_zero():
    Lam, Lmax, ratio, _ = roundness(bundle_from_support(bodies.ellipse(build_grid(1, 64), 2, .5)))
    assert np.all(Lam == 0) and ratio > 10


def test_roundness_ellipsoid_against_eigenvalue_oracle():
    g = build_grid(2, (24, 48))
    B = bundle_from_support(bodies.ellipsoid(g, (1.3, 1.0, 0.8)))
    Lam, Lmax, _, inV = roundness(B)
    assert Lmax > 0 and Lmax == Lam.max()
    assert V_RADIUS == pytest.approx((10 / 9 - 9 / 10) ** 2)
    rng = np.random.default_rng(0)
    for k in rng.choice(g.size, 20, replace=False):
        i, j = np.unravel_index(k, g.shape)
        l1, l2 = scipy.linalg.eigh(B.h[i, j], B.g[i, j], eigvals_only=True)
        assert Lam[i, j] == pytest.approx(2 * (l1 / l2 - l2 / l1) ** 2, rel=1e-10)
        assert inV[i, j] == (Lam[i, j] < V_RADIUS)


def test_comparison_principle():
    cfg = FlowConfig(n=2, alpha=1.0, resolution=(16, 32), normalization="none")
    g = build_grid(2, (16, 32))
    a, b = FlowState(bodies.sphere(g, 0.8)), FlowState(bodies.sphere(g, 1.0))
    for _ in range(300):
        dt = min(stable_dt(a.body, cfg), stable_dt(b.body, cfg))
        a, b = step(a, cfg, dt), step(b, cfg, dt)
        assert np.all(a.body.h < b.body.h)


def test_volume_decreases_without_normalization():
    cfg = FlowConfig(n=1, alpha=1.5, resolution=128, normalization="none")
    s = FlowState(initial_body(cfg))
    V = enclosed_volume(s.body)
    for _ in range(200):
        s = step(s, cfg)
        V1 = enclosed_volume(s.body)
        assert V1 < V
        V = V1


def test_collapse_without_normalization():
    cfg = FlowConfig(n=1, alpha=1.0, resolution=64, normalization="none", init="sphere",
                     min_volume=1.0, max_steps=10 ** 6, ratio_tol=-1.0)
    res = run(cfg)
    assert res.reason.startswith("collapse")
    assert enclosed_volume(res.state.body) < 1.0
    assert res.records[-1].step == res.state.step


def test_calabi_ellipse_is_shape_invariant():
    g = build_grid(1, 256)
    body = bodies.ellipse(g, 2.0, 0.5)
    cfg = FlowConfig(n=1, alpha=1 / 3, resolution=256, init="ellipsoid", axes=(2.0, 0.5),
                     max_steps=200, ratio_tol=1e-12, cadence=50)
    res = run(cfg, body)
    h0 = normalize(FlowState(body)).body.h
    drift = np.max(np.abs(res.state.body.h - h0))
    assert res.reason == "max-steps" and res.state.step == 200
    assert drift < shrinker_residual(body, 1 / 3)[1]


def test_run_records_and_snapshots():
    cfg = FlowConfig(n=1, alpha=1.5, resolution=64, max_steps=30, cadence=10,
                     snapshot_every=15, ratio_tol=1e-12)
    res = run(cfg)
    assert [r.step for r in res.records] == [0, 10, 20, 30]
    assert [s.step for s in res.snapshots] == [0, 15, 30]
    for r in res.records:
        assert all(math.isfinite(v) for v in r.values()) and r.Lambda_max >= 0
    again = run(cfg)
    assert [r.values() for r in again.records] == [r.values() for r in res.records]


def test_diagnostics_sphere():
    cfg = FlowConfig(n=2, alpha=1.0, resolution=(24, 48))
    rec = diagnostics(FlowState(bodies.sphere(build_grid(2, (24, 48)))), cfg)
    assert rec.K_min == pytest.approx(1.0, abs=1e-13) and rec.residual_max == 0
    assert rec.umbilicity_at_fmax <= 1e-13 and rec.gradF2_at_fmax <= 1e-12
    assert rec.f_max <= 2 * rec.w_max + 1e-10


def test_sphere_is_round_immediately():
    res = run(FlowConfig(n=2, alpha=1.0, resolution=(16, 32), init="sphere"))
    assert res.reason == "round" and res.state.step == 0


def test_n2_lambda_non_increasing_late(flow_n2):
    late = [r.Lambda_max for r in flow_n2.result.records if r.Lambda_max < 1e-3]
    assert late, "run never reached the late stage"
    assert all(b <= a + 1e-8 for a, b in zip(late, late[1:]))


def test_n1_ratio_reached(flow_n1):
    last = flow_n1.result.records[-1]
    assert flow_n1.result.reason == "round" and last.lambda_ratio - 1 < 1e-6

