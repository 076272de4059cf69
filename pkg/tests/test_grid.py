import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcflow.grid import build_grid, fejer_weights, sphere_measure


def test_circle_grid_uniform():
    g = build_grid(1, 256)
    assert g.size == 256
    np.testing.assert_allclose(g.weights, 2 * math.pi / 256, rtol=1e-15)
    assert abs(g.weights.sum() - 2 * math.pi) <= 1e-13 * 2 * math.pi
    np.testing.assert_allclose(np.diff(g.axes[0]), 2 * math.pi / 256, rtol=1e-12)


def test_sphere_grid_pole_free_and_normalized():
    g = build_grid(2, (48, 96))
    assert g.size == 4608
    assert np.all(g.weights > 0)
    assert abs(g.weights.sum() - 4 * math.pi) <= 1e-13 * 4 * math.pi
    phi = g.axes[0]
    assert phi.min() > 0 and phi.max() < math.pi


@pytest.mark.parametrize("res", [(16, 32), (24, 48), (32, 96), (17, 34)])
def test_sphere_weights_sum(res):
    g = build_grid(2, res)
    assert abs(g.weights.sum() - sphere_measure(2)) <= 1e-13 * sphere_measure(2)


def test_unsupported_dimension():
    with pytest.raises(ValueError, match="unsupported dimension"):
        build_grid(3, 32)


def test_resolution_too_small():
    with pytest.raises(ValueError, match="too small"):
        build_grid(1, 8)
    with pytest.raises(ValueError):
        build_grid(2, (8, 16))


def test_node_order_deterministic():
    a, b = build_grid(2, (16, 32)), build_grid(2, (16, 32))
    np.testing.assert_array_equal(a.nodes, b.nodes)
    assert a.nodes[1, 1] > a.nodes[0, 1]        # longitude varies fastest


@given(st.integers(min_value=0, max_value=15))
def test_fejer_exact_on_polynomials(k):
    m = 16
    w = fejer_weights(m)
    x = np.cos((np.arange(m) + 0.5) * math.pi / m)
    exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
    assert abs(np.dot(w, x ** k) - exact) < 1e-13


def _orders(errors):
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


def test_circle_stencils_fourth_order():
    e1, e2 = [], []
    for N in (32, 64, 128):
        g = build_grid(1, N)
        t = g.axes[0]
        f = np.exp(np.sin(t))
        e1.append(np.max(np.abs(g.diff(f, 0) - np.cos(t) * f)))
        e2.append(np.max(np.abs(g.diff2(f, 0) - (np.cos(t) ** 2 - np.sin(t)) * f)))
    assert min(_orders(e1)) > 3.8
    assert min(_orders(e2)) > 3.8


def test_pole_crossing_uses_parity():
    # x = sin(phi) cos(theta) is smooth on the sphere; d/dphi across the pole
    # needs the ghost value from the opposite meridian
    errs = []
    for m in (16, 32, 64):
        g = build_grid(2, m)
        phi, th = np.meshgrid(*g.axes, indexing="ij")
        x = np.sin(phi) * np.cos(th)
        errs.append(np.max(np.abs(g.diff(x, 0) - np.cos(phi) * np.cos(th))))
    assert min(_orders(errs)) > 3.5


def test_sphere_hessian_of_linear_function():
    # restriction of a linear function l(nu) satisfies Hess_S l = -l Id
    errs = []
    for m in (16, 32, 64):
        g = build_grid(2, m)
        ell = g.normals @ np.array([0.3, -0.5, 0.8])
        H = g.sphere_hessian(ell)
        np.testing.assert_allclose(H, np.swapaxes(H, -1, -2), atol=1e-14)
        errs.append(np.max(np.abs(H + ell[..., None, None] * np.eye(2))))
    assert errs[-1] < 1e-5
    assert min(_orders(errs)) > 3.5


def test_integrate_spherical_harmonic_zero_mean():
    g = build_grid(2, (24, 48))
    z = g.normals[..., 2]
    assert abs(g.integrate(3 * z * z - 1)) < 1e-13
    assert abs(g.integrate(z * z) - 4 * math.pi / 3) < 1e-13
