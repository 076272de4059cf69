"""Support functions of test bodies: balls, ellipses, ellipsoids, random convex bodies."""
import itertools

import numpy as np

from .support import SupportField, radii_matrix


def sphere(grid, r=1.0):
    return SupportField(grid, np.full(grid.shape, float(r)))


def ellipse(grid, a, b, angle=0.0):
    """Ellipse with semi-axes a (along the rotated x-axis) and b."""
    t = grid.axes[0] - angle
    return SupportField(grid, np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2))


def ellipsoid(grid, axes, rotation=None):
    """Ellipsoid with semi-axes ``axes``, optionally rotated by the matrix ``rotation``."""
    u = grid.normals
    if rotation is not None:
        u = u @ np.asarray(rotation)  # components of R^T nu
    return SupportField(grid, np.sqrt(np.sum((np.asarray(axes) * u) ** 2, axis=-1)))


def trig_perturbation(grid, cos_coeffs, sin_coeffs=None):
    """1 + sum_k c_k cos(k theta) + s_k sin(k theta) on the circle; keys are k."""
    t = grid.axes[0]
    h = np.ones(grid.shape)
    for k, c in cos_coeffs.items():
        h = h + c * np.cos(k * t)
    for k, c in (sin_coeffs or {}).items():
        h = h + c * np.sin(k * t)
    return SupportField(grid, h)


def min_radius(body):
    return float(radii_matrix(body, check=False).radii[..., -1].min())


def shrink_to_convex(body, margin=0.1, factor=0.8, max_iter=200):
    """Scale the deviation from the unit sphere by ``factor`` until W >= margin.

    Returns the admissible body and the cumulative shrink factor.
    """
    base = np.ones(body.grid.shape)
    pert = body.h - base
    scale = 1.0
    for _ in range(max_iter):
        cand = body.with_values(base + scale * pert)
        if min_radius(cand) >= margin and np.all(cand.h > 0):
            return cand, scale
        scale *= factor
    raise ValueError("could not shrink perturbation to a convex body")


def _monomials(dim, degree):
    for d in range(1, degree + 1):
        yield from itertools.combinations_with_replacement(range(dim), d)


def random_body(grid, rng, degree=3, amplitude=0.2, margin=0.1):
    """Random smooth convex body: unit sphere plus a random low-degree polynomial of nu.

    Coefficients are standard normal times ``amplitude / (#terms)**0.5``,
    then the perturbation is shrunk until the smallest radius of curvature
    is at least ``margin``.
    """
    u = grid.normals
    terms = list(_monomials(u.shape[-1], degree))
    coef = rng.standard_normal(len(terms)) * amplitude / np.sqrt(len(terms))
    h = np.ones(grid.shape)
    for c, mono in zip(coef, terms):
        h = h + c * np.prod([u[..., i] for i in mono], axis=0)
    body, _ = shrink_to_convex(SupportField(grid, h), margin=margin)
    return body


def random_rotation(rng, dim=3):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
