"""Convex bodies represented by their support function on a sphere grid.

Sign convention: with the outward normal nu, a self-similar shrinker
satisfies ``K**alpha == h``.  This is the only place the inward/outward
normal translation happens.
"""
from dataclasses import dataclass

import numpy as np

from .grid import ball_volume


class ConvexityError(ValueError):
    """Raised when a body is not strictly convex; carries the worst node."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


@dataclass(frozen=True, eq=False)
class SupportField:
    grid: object
    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.shape != self.grid.shape:
            raise ValueError(f"support values have shape {h.shape}, grid is {self.grid.shape}")
        object.__setattr__(self, "h", h)

    def scaled(self, c):
        return SupportField(self.grid, c * self.h)

    def with_values(self, h):
        return SupportField(self.grid, h)


@dataclass(frozen=True, eq=False)
class RadiiField:
    """Radii-of-curvature matrix W per node, in the orthonormal sphere frame.

    ``radii`` holds the eigenvalues in descending order; ``umbilic`` marks
    nodes where they coincide to 1e-12 relative to the trace.
    """

    W: np.ndarray
    radii: np.ndarray
    umbilic: np.ndarray

    @property
    def det(self):
        return np.prod(self.radii, axis=-1)


@dataclass(frozen=True, eq=False)
class ImmersionField:
    """Sampled immersion X with normal nu.

    ``frame`` holds X in the sphere frame (nu, e_1, ..., e_n) when it is
    known exactly; otherwise it is computed by projection.
    """

    grid: object
    X: np.ndarray
    nu: np.ndarray
    frame: np.ndarray = None

    def __post_init__(self):
        if self.frame is None:
            object.__setattr__(self, "frame", self.grid.to_frame(self.X))


def _worst(values, grid):
    k = int(np.argmin(values))
    return k, float(values.ravel()[k])


def check_positive(body):
    if np.any(~np.isfinite(body.h)) or np.any(body.h <= 0):
        k, v = _worst(np.where(np.isfinite(body.h), body.h, -np.inf), body.grid)
        raise ConvexityError(f"support function not positive at node {k} (h={v:.6g})", k, v)


def _eig2(a, b, c):
    mean = 0.5 * (a + c)
    gap = np.hypot(0.5 * (a - c), b)
    umbilic = gap < 1e-12 * np.abs(a + c)
    return np.stack([mean + gap, mean - gap], axis=-1), umbilic


def _radii(grid, h):
    if grid.dim == 1:
        w = grid.diff2(h, 0) + h
        W = w[..., None, None]
        return W, w[..., None], np.ones(grid.shape, dtype=bool)
    s, c = grid.sin_colat, grid.cos_colat
    h_p = grid.diff(h, 0)
    h_t = grid.diff(h, 1)
    h_pp = grid.diff2(h, 0)
    h_tt = grid.diff2(h, 1)
    h_pt = grid.diff(h_t, 0)
    a = h_pp + h
    b = (h_pt - (c / s) * h_t) / s
    d = h_tt / (s * s) + (c / s) * h_p + h
    W = np.stack([np.stack([a, b], -1), np.stack([b, d], -1)], -2)
    radii, umbilic = _eig2(a, b, d)
    return W, radii, umbilic


def radii_matrix(body, check=True):
    """W = Hess_S h + h Id in the orthonormal sphere frame.

    Raises ConvexityError naming the worst node when some eigenvalue is not
    positive (or ``h`` itself is not positive) and ``check`` is set.
    """
    if check:
        check_positive(body)
    W, radii, umbilic = _radii(body.grid, body.h)
    W = 0.5 * (W + np.swapaxes(W, -1, -2))
    if check:
        rmin = radii[..., -1]
        if not np.all(rmin > 0):
            k, v = _worst(np.where(np.isfinite(rmin), rmin, -np.inf), body.grid)
            raise ConvexityError(f"convexity lost at node {k} (smallest radius {v:.6g})", k, v)
    return RadiiField(W, radii, umbilic)


def gauss_curvature_from_support(body, radii=None):
    """K = 1 / det W per node."""
    radii = radii_matrix(body) if radii is None else radii
    return 1.0 / radii.det


def shrinker_residual(body, alpha, radii=None):
    """Return (h - K**alpha field, max |h - K**alpha|)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    K = gauss_curvature_from_support(body, radii)
    r = body.h - K ** alpha
    return r, float(np.max(np.abs(r)))


def enclosed_volume(body, radii=None):
    """(1/(n+1)) * integral of h det W over the sphere."""
    radii = radii_matrix(body) if radii is None else radii
    n = body.grid.dim
    return body.grid.integrate(body.h * radii.det) / (n + 1)


def steiner_point(body):
    """Steiner point (1/|B|) * integral of h(u) u; equals p for a ball centred at p."""
    g = body.grid
    w = g.weights[..., None]
    return np.sum(w * body.h[..., None] * g.normals, axis=tuple(range(g.dim))) / ball_volume(g.dim)


def translate(body, p):
    """Support function of the body translated by the vector p."""
    return body.with_values(body.h + body.grid.normals @ np.asarray(p, dtype=float))


def _gradient_frame(body):
    g = body.grid
    if g.dim == 1:
        return g.diff(body.h, 0)[..., None]
    return np.stack([g.diff(body.h, 0), g.diff(body.h, 1) / g.sin_colat], axis=-1)


def support_gradient(body):
    """Sphere gradient of h as an ambient vector per node."""
    grad = _gradient_frame(body)
    return np.einsum("...a,...ak->...k", grad, body.grid.tangents)


def embed(body):
    """Boundary point with outward normal nu: X = h nu + grad_S h."""
    check_positive(body)
    g = body.grid
    frame = np.concatenate([body.h[..., None], _gradient_frame(body)], axis=-1)
    return ImmersionField(g, g.to_cartesian(frame), g.normals.copy(), frame)
