import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcflow import bodies
from gcflow import geometry as geo
from gcflow import identities as ids
from gcflow.grid import build_grid


def ellipse(N):
    return geo.bundle_from_support(bodies.ellipse(build_grid(1, N), 2.0, 0.5))


@pytest.fixture(scope="module")
def spheres():
    return {1: geo.bundle_from_support(bodies.sphere(build_grid(1, 64))),
            2: geo.bundle_from_support(bodies.sphere(build_grid(2, (24, 48))))}


@pytest.mark.parametrize("n,alpha", [(1, 1.2), (1, 1.5), (1, 1.9),
                                     (2, 0.6), (2, 1.0), (2, 1.4)])
@pytest.mark.parametrize("identity", ids.ALL_IDS)
def test_sphere_roundoff(spheres, n, alpha, identity):
    rep = ids.roundoff_check(identity, spheres[n], alpha)
    assert rep.applicable and rep.passed, rep


@pytest.mark.parametrize("identity", ids.ALL_IDS)
def test_ellipse_refinement(identity):
    rep = ids.refinement_study(identity, ellipse, (128, 256, 512), 1 / 3, "ellipse")
    assert rep.applicable and rep.passed, rep
    assert rep.order >= ids.MIN_ORDER
    assert rep.residuals[0] > rep.residuals[1] > rep.residuals[2]


def test_refinement_needs_three_levels():
    with pytest.raises(ValueError):
        ids.refinement_study("L-f", ellipse, (128, 256), 1 / 3)


@pytest.mark.parametrize("identity", sorted(ids.SHRINKER_ONLY))
def test_non_shrinker_is_inapplicable(identity):
    # the ellipse is a shrinker only for alpha = 1/3
    rep = ids.check(identity, ellipse(256), 1.0)
    assert not rep.applicable and not rep.passed
    assert "not a shrinker" in rep.note
    study = ids.refinement_study(identity, ellipse, (128, 256, 512), 1.0)
    assert not study.applicable


def test_shrinker_identity_needs_alpha():
    with pytest.raises(ValueError):
        ids.check("L-f", ellipse(128), None)


@pytest.mark.parametrize("identity", ids.FUZZ_IDS)
def test_chart_free_identities_need_no_alpha(identity):
    assert ids.check(identity, ellipse(256)).applicable


def test_gate_is_resolution_indexed():
    assert ids.shrinker_gate(build_grid(1, 4096)) == ids.GATE_FLOOR
    g = build_grid(1, 128)
    assert ids.shrinker_gate(g) == pytest.approx(ids.GATE_C * (2 * math.pi / 128) ** 4)


@given(p=st.floats(0.5, 6.0), c=st.floats(1e-6, 1e3))
def test_observed_order_of_power_law(p, c):
    res = [c * 2.0 ** (-p * k) for k in range(4)]
    assert ids.observed_order(res) == pytest.approx(p, rel=1e-9)


@given(p=st.floats(0.5, 6.0))
def test_observed_order_with_explicit_steps(p):
    steps = [0.3, 0.1, 0.05]
    assert ids.observed_order([s ** p for s in steps], steps) == pytest.approx(p, rel=1e-9)


def test_observed_order_degenerate():
    assert math.isnan(ids.observed_order([1.0]))
    assert math.isnan(ids.observed_order([1e-3, 0.0, 1e-5]))


@pytest.mark.parametrize("make,alpha", [(lambda: ellipse(256), 1 / 3),
                                        (lambda: geo.bundle_from_support(
                                            bodies.random_body(build_grid(2, (24, 48)),
                                                               np.random.default_rng(2))), 0.8)])
def test_last_L_f_term_from_position_norm(make, alpha):
    """(n - 1/alpha) |X^T|^2 computed via |X|^2 - h^2 instead of chart contractions."""
    B = make()
    t4 = ids.rhs_L_f_terms(B, alpha)[3]
    tang = B.X2 - ids.support_values(B) ** 2
    np.testing.assert_allclose(t4, (B.dim - 1 / alpha) * tang, atol=1e-12)


def test_calabi_ellipsoid_residuals_converge():
    # abc = 1 makes the ellipsoid a shrinker for alpha = 1/4
    axes = (1.25, 1.0, 0.8)
    res = {i: [] for i in ids.ALL_IDS}
    for m in (24, 48, 96):
        B = geo.bundle_from_support(bodies.ellipsoid(build_grid(2, m), axes))
        assert ids.bundle_shrinker_residual(B, 0.25) < ids.shrinker_gate(B.grid)
        for i in ids.ALL_IDS:
            res[i].append(ids.residual_max(i, B, 0.25))
    for i, r in res.items():
        assert r[0] > r[1] > r[2], i
        assert ids.observed_order(r) > 1.8, (i, r)


def test_fuzz_campaign_shape():
    g = build_grid(2, (16, 32))
    reps = ids.fuzz_campaign(g, np.random.default_rng(0), count=3)
    assert [r.identity for r in reps] == list(ids.FUZZ_IDS) * 3
    assert all(r.applicable and r.threshold == 1e-5 for r in reps)
    again = ids.fuzz_campaign(g, np.random.default_rng(0), count=3)
    assert [r.residual for r in reps] == [r.residual for r in again]


def test_chart_fuzz_small():
    s = ids.chart_fuzz_campaign(build_grid(2, (16, 32)), np.random.default_rng(1), count=4)
    assert s.count == 4
    assert s.min_euler_gap >= -1e-10
    assert max(s.max_wbar_excess.values()) <= 1e-10
    assert max(s.max_f_excess.values()) <= 1e-10


@given(st.integers(0, 2 ** 32 - 1))
def test_random_jacobians_invertible(seed):
    A = ids.random_jacobians((5, 7), np.random.default_rng(seed))
    assert A.shape == (5, 7, 2, 2)
    s = np.linalg.svd(A, compute_uv=False)
    assert np.all(s[..., -1] >= math.exp(-1) - 1e-12) and np.all(s[..., 0] <= math.e + 1e-12)


def test_report_outputs():
    circle = geo.bundle_from_support(bodies.sphere(build_grid(1, 32)))
    reps = [ids.roundoff_check("L-f", circle, 1.5),
            ids.check("L-f", ellipse(128), 1.0, "ellipse")]
    rows = json.loads(ids.reports_json(reps))
    assert rows[0]["passed"] is True and rows[0]["resolution"] == [32]
    assert rows[1]["residual"] is None and rows[1]["applicable"] is False
    table = ids.reports_table(reps).splitlines()
    assert len(table) == 4
    assert table[2].endswith("PASS") and table[3].endswith("n/a")
    assert not ids.suite_passed(reps)
