"""Sphere grids, quadrature and fourth-order stencils.

The circle (n=1) is sampled uniformly in the angle.  The 2-sphere (n=2) uses a
latitude-longitude grid whose colatitudes are shifted by half a cell, so no
node sits on a pole.  Derivatives across a pole read ghost values from the
opposite meridian (longitude + pi), multiplied by the field's parity.
"""
import math
from dataclasses import dataclass

import numpy as np

MIN_RESOLUTION = 16


def sphere_measure(n):
    """Surface measure of the unit n-sphere."""
    return {1: 2.0 * math.pi, 2: 4.0 * math.pi}[n]


def ball_volume(n):
    """Volume of the unit ball bounded by the unit n-sphere."""
    return {1: math.pi, 2: 4.0 * math.pi / 3.0}[n]


def fejer_weights(m):
    """Fejer's first rule on the colatitudes (k + 1/2) pi / m.

    Integrates f(cos phi) over [-1, 1]; the weights are positive and sum to 2.
    """
    phi = (np.arange(m) + 0.5) * math.pi / m
    k = np.arange(1, m // 2 + 1)
    series = np.cos(2.0 * np.outer(phi, k)) / (4.0 * k * k - 1.0)
    return (2.0 / m) * (1.0 - 2.0 * series.sum(axis=1))


# Stencils are written in difference form so constants differentiate to exactly 0.

def _d1(p, d):
    # p is padded by two cells on both ends of axis 0
    return ((p[:-4] - p[4:]) + 8.0 * (p[3:-1] - p[1:-3])) / (12.0 * d)


def _d2(p, d):
    c = p[2:-2]
    return (16.0 * ((p[1:-3] - c) + (p[3:-1] - c)) - ((p[:-4] - c) + (p[4:] - c))) \
        / (12.0 * d * d)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Nodes, quadrature weights and the analytic sphere frame.

    ``normals`` holds the unit normal (grid direction) at each node and
    ``tangents`` the orthonormal sphere frame: tau for n=1, (e_phi, e_theta)
    for n=2.  Field arrays are shaped ``shape + component_dims``.
    """

    dim: int
    shape: tuple
    axes: tuple
    spacing: tuple
    periodic: tuple
    offsets: tuple
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def nodes(self):
        """Parameter tuples in row-major order, shape (size, dim)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def min_spacing(self):
        """Smallest geodesic distance between neighbouring nodes."""
        if self.dim == 1:
            return self.spacing[0]
        return min(self.spacing[0], math.sin(self.axes[0][0]) * self.spacing[1])

    @property
    def sin_colat(self):
        return np.sin(self.axes[0])[:, None]

    @property
    def cos_colat(self):
        return np.cos(self.axes[0])[:, None]

    def expand(self, a, ndim):
        """Append singleton axes so a grid-shaped array broadcasts over ndim."""
        return a.reshape(a.shape + (1,) * (ndim - a.ndim))

    def _pad(self, f, axis, parity):
        f = np.moveaxis(f, axis, 0)
        if self.periodic[axis]:
            p = np.concatenate([f[-2:], f, f[:2]], axis=0)
        else:
            # colatitude: continue across the pole on the opposite meridian
            half = self.shape[1] // 2
            sign = np.asarray(parity, dtype=float)
            top = sign * np.roll(f[1::-1], half, axis=1)
            bottom = sign * np.roll(f[:-3:-1], half, axis=1)
            p = np.concatenate([top, f, bottom], axis=0)
        return p

    def diff(self, f, axis, parity=1.0):
        """Fourth-order first derivative of ``f`` along a grid axis."""
        p = self._pad(np.asarray(f, dtype=float), axis, parity)
        return np.moveaxis(_d1(p, self.spacing[axis]), 0, axis)

    def diff2(self, f, axis, parity=1.0):
        """Fourth-order second derivative of ``f`` along a grid axis."""
        p = self._pad(np.asarray(f, dtype=float), axis, parity)
        return np.moveaxis(_d2(p, self.spacing[axis]), 0, axis)

    def gradient(self, f, parity=1.0):
        """Chart partials stacked on a new axis right after the grid axes."""
        d = [self.diff(f, a, parity) for a in range(self.dim)]
        return np.stack(d, axis=self.dim)

    def hessian(self, f):
        """Chart second partials of a scalar field, shape ``shape + (n, n)``."""
        if self.dim == 1:
            return self.diff2(f, 0)[..., None, None]
        f_t = self.diff(f, 1)
        hpp = self.diff2(f, 0)
        htt = self.diff2(f, 1)
        hpt = self.diff(f_t, 0)
        return np.stack([np.stack([hpp, hpt], -1), np.stack([hpt, htt], -1)], -2)

    def integrate(self, f):
        """Quadrature of a scalar field over the sphere."""
        return float(np.sum(self.weights * f))

    # -- tensor and vector calculus in the (theta) or (phi, theta) chart --

    def _theta_exponent(self, variance):
        # power of sin(phi) relating chart components to sphere-frame components
        idx = np.indices((self.dim,) * len(variance)) if variance else np.zeros((0,), int)
        e = np.zeros((self.dim,) * len(variance))
        for k, v in enumerate(variance):
            e = e + np.where(idx[k] == 1, 1.0 if v == "l" else -1.0, 0.0)
        return e

    def _contract_frame(self, T, rank, E):
        # contract every index of T (cyclically) with the per-node matrix E
        for _ in range(rank):
            T = np.moveaxis(T, 2, -1)
            Ex = E.reshape(E.shape[:2] + (1,) * (T.ndim - 3) + E.shape[2:])
            T = np.matmul(T[..., None, :], Ex)[..., 0, :]
        return T

    def _cartesian(self, T, rank):
        # frame components of a tangent tensor -> ambient Cartesian components
        return self._contract_frame(T, rank, self.tangents)

    def _project(self, Tc, rank):
        return self._contract_frame(Tc, rank, np.swapaxes(self.tangents, -1, -2))

    def _rotation(self, T, rank):
        # d/dtheta of the frame: e_phi -> e_theta, e_theta -> -e_phi (tangential part)
        out = np.zeros_like(T)
        for k in range(rank):
            Tk = np.moveaxis(T, 2 + k, -1)
            out = out + np.moveaxis(np.stack([Tk[..., 1], -Tk[..., 0]], -1), -1, 2 + k)
        return out

    def projected_partials(self, That, rank):
        """Tangential parts of d_phi and d_theta of a tangent tensor (n=2).

        ``That`` holds components in the orthonormal frame (e_phi, e_theta).
        The tensor is differenced through its ambient Cartesian components,
        which are smooth across the poles; the rotating frame never enters a
        stencil.  A rank-2 trace part is handled as a scalar so that
        multiples of the identity are differentiated exactly.
        """
        tau = None
        if rank == 2:
            tau = 0.5 * (That[..., 0, 0] + That[..., 1, 1])
            That = That - tau[..., None, None] * np.eye(2)
        Tc = self._cartesian(That, rank)
        dp = self._project(self.diff(Tc, 0), rank)
        dt = self._project(self.diff(Tc, 1), rank)
        if tau is not None:
            dp = dp + self.diff(tau, 0)[..., None, None] * np.eye(2)
            dt = dt + self.diff(tau, 1)[..., None, None] * np.eye(2)
        return dp, dt, That

    def sphere_hessian(self, f):
        """Covariant Hessian of a scalar on the unit sphere, orthonormal frame."""
        if self.dim == 1:
            return self.diff2(f, 0)[..., None, None]
        grad = np.stack([self.diff(f, 0), self.diff(f, 1) / self.sin_colat], axis=-1)
        dp, dt, _ = self.projected_partials(grad, 1)
        H = np.stack([dp, dt / self.sin_colat[..., None]], axis=-1)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def chart_partial(self, T, variance):
        """Partial derivatives of chart tensor components.

        ``variance`` is a string of 'l' (covariant) and 'u' (contravariant)
        letters, one per tensor index.  Returns shape
        ``shape + (n,) + index_dims`` with the derivative index first.
        """
        T = np.asarray(T, dtype=float)
        rank = len(variance)
        if self.dim == 1 or rank == 0:
            return self.gradient(T)
        e = self._theta_exponent(variance)
        s = self.expand(self.sin_colat, 2 + rank)
        c = self.expand(self.cos_colat, 2 + rank)
        scale = s ** e
        That = T / scale
        dp, dt, T0 = self.projected_partials(That, rank)
        dt = dt + c * self._rotation(T0, rank)
        return np.stack([scale * dp + e * (c / s) * T, scale * dt], axis=2)

    def to_frame(self, V):
        """Cartesian ambient vectors -> components along (nu, e_1, ..., e_n)."""
        a = np.einsum("...k,...k->...", V, self.normals)
        b = np.einsum("...ak,...k->...a", self.tangents, V)
        return np.concatenate([a[..., None], b], axis=-1)

    def to_cartesian(self, Vf):
        """Inverse of ``to_frame``."""
        out = Vf[..., :1] * self.normals
        for k in range(self.dim):
            out = out + Vf[..., k + 1:k + 2] * self.tangents[..., k, :]
        return out

    def frame_partial(self, Vf, parity=1.0):
        """Chart partials of an ambient vector field given in frame components.

        Returns frame components, shape ``shape + (n, n+1)``.  Only the
        components are differenced; derivatives of the sphere frame itself are
        analytic, so rigid sphere data is differentiated exactly.  ``parity``
        is -1 for fields that flip sign when continued across a pole.
        """
        q = -parity
        a = Vf[..., 0]
        if self.dim == 1:
            b = Vf[..., 1]
            dV = np.stack([self.diff(a, 0) - b, a + self.diff(b, 0)], axis=-1)
            return dV[..., None, :]
        bp, bt = Vf[..., 1], Vf[..., 2]
        s, c = self.sin_colat, self.cos_colat
        d_phi = np.stack([self.diff(a, 0, parity) - bp,
                          a + self.diff(bp, 0, q),
                          self.diff(bt, 0, q)], axis=-1)
        d_theta = np.stack([self.diff(a, 1) - bt * s,
                            self.diff(bp, 1) - bt * c,
                            self.diff(bt, 1) + a * s + bp * c], axis=-1)
        return np.stack([d_phi, d_theta], axis=-2)

    def chart_vector_partial(self, Ff):
        """d_i F_j for chart vectors F[..., j, :] in frame components.

        Returns shape ``shape + (n, n, n+1)`` indexed (i, j).  The theta
        vector is rescaled by 1/sin(phi) before differencing.
        """
        if self.dim == 1:
            return self.frame_partial(Ff[..., 0, :])[..., None, :]
        s, c = self.sin_colat[..., None], self.cos_colat[..., None]
        dF_phi = self.frame_partial(Ff[..., 0, :], -1.0)
        Fhat = Ff[..., 1, :] / s
        dF_theta = s[..., None] * self.frame_partial(Fhat, -1.0)
        dF_theta[..., 0, :] += c * Fhat
        return np.stack([dF_phi, dF_theta], axis=-2)


def build_grid(n, resolution):
    """Build the circle or pole-free 2-sphere grid.

    Parameters
    ----------
    n : int
        Intrinsic dimension, 1 or 2.
    resolution : int or tuple of int
        Node count per axis: ``N`` for the circle, ``(n_colat, n_lon)`` for
        the 2-sphere.  An integer ``m`` for n=2 means ``(m, 2m)``.

    Returns
    -------
    SphereGrid
    """
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension: {n}")
    if np.ndim(resolution) == 0:
        res = (int(resolution),) if n == 1 else (int(resolution), 2 * int(resolution))
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != n:
        raise ValueError(f"expected {n} resolution value(s), got {res}")
    if min(res) < MIN_RESOLUTION:
        raise ValueError(f"resolution too small: {res} (minimum {MIN_RESOLUTION} per axis)")

    if n == 1:
        (m,) = res
        d = 2.0 * math.pi / m
        theta = d * np.arange(m)
        ct, st = np.cos(theta), np.sin(theta)
        normals = np.stack([ct, st], axis=-1)
        tangents = np.stack([-st, ct], axis=-1)[:, None, :]
        weights = np.full(m, d)
        return SphereGrid(1, res, (theta,), (d,), (True,), (0.0,), weights, normals, tangents)

    mp, mt = res
    if mt % 2:
        raise ValueError(f"longitude count must be even, got {mt}")
    dp, dt = math.pi / mp, 2.0 * math.pi / mt
    phi = (np.arange(mp) + 0.5) * dp
    theta = dt * np.arange(mt)
    P, T = np.meshgrid(phi, theta, indexing="ij")
    sp, cp, st, ct = np.sin(P), np.cos(P), np.sin(T), np.cos(T)
    normals = np.stack([sp * ct, sp * st, cp], axis=-1)
    e_phi = np.stack([cp * ct, cp * st, -sp], axis=-1)
    e_theta = np.stack([-st, ct, np.zeros_like(T)], axis=-1)
    tangents = np.stack([e_phi, e_theta], axis=-2)
    weights = np.outer(fejer_weights(mp), np.full(mt, dt))
    return SphereGrid(2, res, (phi, theta), (dp, dt), (False, True), (0.5, 0.0),
                      weights, normals, tangents)
