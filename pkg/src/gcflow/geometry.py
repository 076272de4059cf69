"""Extrinsic geometry of a sampled immersion in the sphere chart.

Tensor fields are arrays shaped ``grid.shape + (n,)*rank``.  Ambient vectors
(chart tangents and their derivatives) are stored by their components in the
sphere frame (nu, e_1, ..., e_n), which is orthonormal, so inner products are
plain dot products of components.  The second
fundamental form is taken against the inward normal, so convex bodies have
h_ij positive definite and b^ij = inverse(h_ij).
"""
import string
from dataclasses import dataclass

import numpy as np

from .support import ConvexityError


@dataclass(frozen=True, eq=False)
class GeometryBundle:
    grid: object
    X: np.ndarray
    nu: np.ndarray
    F: np.ndarray          # F[..., i, :] = d_i X, frame components
    DDX: np.ndarray        # DDX[..., i, j, :] = d_i d_j X, frame components
    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    b: np.ndarray
    christoffel: np.ndarray  # christoffel[..., k, i, j] = Gamma^k_ij
    K: np.ndarray
    H: np.ndarray
    curvatures: np.ndarray   # ascending
    X2: np.ndarray
    XF: np.ndarray           # <X, F_i>
    XFup: np.ndarray         # <X, F^i>

    @property
    def dim(self):
        return self.grid.dim

    @property
    def lambda_min(self):
        return self.curvatures[..., 0]


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def principal_curvatures(g, h):
    """Roots of det(h - lambda g) = 0, ascending, closed form for n <= 2."""
    n = g.shape[-1]
    if n == 1:
        return (h[..., 0, 0] / g[..., 0, 0])[..., None]
    Linv = np.linalg.inv(np.linalg.cholesky(g))
    M = Linv @ h @ np.swapaxes(Linv, -1, -2)
    a, b, c = M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1]
    mean = 0.5 * (a + c)
    gap = np.hypot(0.5 * (a - c), b)
    return np.stack([mean - gap, mean + gap], axis=-1)


def principal_frame(bundle):
    """g-orthonormal eigenvectors of h (columns), ordered like ``curvatures``."""
    L = np.linalg.cholesky(bundle.g)
    Linv = np.linalg.inv(L)
    M = _sym(Linv @ bundle.h @ np.swapaxes(Linv, -1, -2))
    _, U = np.linalg.eigh(M)
    return np.swapaxes(Linv, -1, -2) @ U


def _finish(grid, X, nu, Xf, F, DDX, g, h, christoffel=None):
    detg = np.linalg.det(g)
    if not np.all(detg > 0):
        raise ConvexityError("degenerate metric (immersion is not regular)")
    curv = principal_curvatures(g, h)
    lmin = curv[..., 0]
    if not np.all(lmin > 0):
        k = int(np.argmin(np.where(np.isfinite(lmin), lmin, -np.inf)))
        raise ConvexityError(f"second fundamental form not positive at node {k}", k,
                             float(lmin.ravel()[k]))
    ginv = _sym(np.linalg.inv(g))
    b = _sym(np.linalg.inv(h))
    if christoffel is None:
        christoffel = np.einsum("...kl,...ijm,...lm->...kij", ginv, DDX, F)
    K = np.linalg.det(h) / detg
    H = np.einsum("...ij,...ij->...", ginv, h)
    XF = np.einsum("...ik,...k->...i", F, Xf)
    XFup = np.einsum("...ij,...j->...i", ginv, XF)
    return GeometryBundle(grid, X, nu, F, DDX, g, ginv, h, b, christoffel, K, H, curv,
                          np.einsum("...k,...k->...", Xf, Xf), XF, XFup)


def build_bundle(imm):
    """Assemble the geometry of a general immersion by differencing X twice.

    Christoffels come from <d_i d_j X, F_l>.  Bodies given by a support
    function should use ``bundle_from_support``, which is more accurate near
    the poles; this route serves as an independent check.
    """
    grid = imm.grid
    Xf = imm.frame
    F = grid.frame_partial(Xf)
    DDX = grid.chart_vector_partial(F)
    DDX = 0.5 * (DDX + np.swapaxes(DDX, -2, -3))
    g = _sym(np.einsum("...ik,...jk->...ij", F, F))
    return _finish(grid, imm.X, imm.nu, Xf, F, DDX, g, -DDX[..., 0])


def levi_civita(g, grid):
    """Gamma^k_ij of the metric g, indexed [..., k, i, j]."""
    dg = grid.chart_partial(g, "ll")
    ginv = np.linalg.inv(g)
    lower = 0.5 * (dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1))
    # lower[..., i, j, l] = Gamma_{l, ij} after the permutation below
    lower = np.moveaxis(lower, -1, -3)
    return np.einsum("...kl,...lij->...kij", ginv, lower)


def bundle_from_support(body):
    """Geometry of the boundary of a convex body given by its support function.

    With W = Hess_S h + h Id in the orthonormal sphere frame and the chart
    scaling S = diag(1, sin phi), the chart fields are g = S W W S and
    h = S W S exactly; only the Christoffels need further differencing.
    """
    from .support import embed
    grid = body.grid
    imm = embed(body)
    n = grid.dim
    W = _sym(grid.sphere_hessian(body.h) + body.h[..., None, None] * np.eye(n))
    if n == 1:
        S = np.ones(grid.shape + (1,))
    else:
        S = np.stack(np.broadcast_arrays(np.ones(grid.shape), grid.sin_colat), axis=-1)
    WS = W * S[..., None, :]                    # columns scaled: W S
    g = _sym(np.swapaxes(WS, -1, -2) @ WS)
    h = _sym(S[..., :, None] * WS)
    F = np.concatenate([np.zeros(grid.shape + (n, 1)), np.swapaxes(WS, -1, -2)], axis=-1)
    christoffel = levi_civita(g, grid)
    DDX = np.einsum("...kij,...kc->...ijc", christoffel, F)
    DDX[..., 0] -= h
    return _finish(grid, imm.X, imm.nu, imm.frame, F, DDX, g, h, christoffel)


# -- index gymnastics --------------------------------------------------------

def apply_index(T, M, axis, ngrid):
    """Contract per-node matrix M[..., a, b] with tensor index ``axis`` of T."""
    T = np.moveaxis(T, ngrid + axis, -1)
    extra = T.ndim - ngrid - 1
    Mx = M.reshape(M.shape[:ngrid] + (1,) * extra + M.shape[ngrid:])
    out = np.matmul(Mx, T[..., None])[..., 0]
    return np.moveaxis(out, -1, ngrid + axis)


def orthonormal_components(T, variance, bundle):
    """Components of a tensor field in a g-orthonormal frame."""
    L = np.linalg.cholesky(bundle.g)
    Linv = np.linalg.inv(L)
    Lt = np.swapaxes(L, -1, -2)
    ng = bundle.grid.dim
    for k, v in enumerate(variance):
        T = apply_index(T, Linv if v == "l" else Lt, k, ng)
    return T


def tensor_norm(T, variance, bundle):
    """Pointwise g-norm of a tensor field (chart independent)."""
    T = orthonormal_components(T, variance, bundle)
    axes = tuple(range(bundle.grid.dim, T.ndim))
    return np.sqrt(np.sum(T * T, axis=axes)) if axes else np.abs(T)


def transform_chart(bundle, A):
    """Pointwise linear chart change with Jacobian A[..., i, a] = d x^i / d y^a.

    Only the algebraic fields (g, h, their inverses, curvatures, |X|^2, K)
    are meaningful in the returned bundle; it is meant for pointwise
    inequalities such as Euler's formula.
    """
    At = np.swapaxes(A, -1, -2)
    g = _sym(At @ bundle.g @ A)
    h = _sym(At @ bundle.h @ A)
    Ainv = np.linalg.inv(A)
    ginv = _sym(Ainv @ bundle.ginv @ np.swapaxes(Ainv, -1, -2))
    b = _sym(Ainv @ bundle.b @ np.swapaxes(Ainv, -1, -2))
    F = np.einsum("...ia,...ik->...ak", A, bundle.F)
    XF = np.einsum("...ia,...i->...a", A, bundle.XF)
    return GeometryBundle(bundle.grid, bundle.X, bundle.nu, F, None, g, ginv, h, b, None,
                          bundle.K, bundle.H, bundle.curvatures, bundle.X2, XF,
                          np.einsum("...ab,...b->...a", ginv, XF))


# -- covariant calculus ------------------------------------------------------

def covariant_derivative(T, variance, bundle):
    """nabla_i T for a tensor of the given variance; derivative index first.

    For a symmetric 2-tensor this is d_i T_jk - G^l_ij T_lk - G^l_ik T_jl.
    """
    out = bundle.grid.chart_partial(T, variance)
    rank = len(variance)
    if rank == 0:
        return out
    G = bundle.christoffel
    letters = string.ascii_lowercase[:rank]
    tidx = "".join(letters)
    for k, v in enumerate(variance):
        a = letters[k]
        swapped = tidx[:k] + "z" + tidx[k + 1:]
        if v == "l":
            out = out - np.einsum(f"...zy{a},...{swapped}->...y{tidx}", G, T)
        else:
            out = out + np.einsum(f"...{a}yz,...{swapped}->...y{tidx}", G, T)
    return out


def covariant_derivative_sym2(T, bundle):
    """nabla_i T_jk of a covariant symmetric 2-tensor."""
    return covariant_derivative(T, "ll", bundle)


def covariant_hessian_scalar(phi, bundle):
    """nabla_i nabla_j phi = d_i d_j phi - Gamma^k_ij d_k phi."""
    dphi = bundle.grid.gradient(phi)
    return _sym(covariant_derivative(dphi, "l", bundle))


def covariant_hessian(T, variance, bundle):
    """nabla_i nabla_j T as nabla applied twice; returns indices (i, j, ...)."""
    dT = covariant_derivative(T, variance, bundle)
    return covariant_derivative(dT, "l" + variance, bundle)


def apply_L(phi, bundle, alpha):
    """L phi = alpha K^alpha b^ij nabla_i nabla_j phi for a scalar field."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    hess = covariant_hessian_scalar(phi, bundle)
    return alpha * bundle.K ** alpha * np.einsum("...ij,...ij->...", bundle.b, hess)


def apply_L_tensor(T, variance, bundle, alpha):
    """L applied componentwise-covariantly to a tensor field."""
    hess = covariant_hessian(T, variance, bundle)
    rest = string.ascii_lowercase[:len(variance)]
    contracted = np.einsum(f"...yz,...yz{rest}->...{rest}", bundle.b, hess)
    coef = bundle.grid.expand(alpha * bundle.K ** alpha, contracted.ndim)
    return coef * contracted


# -- Pogorelov-type quantities -----------------------------------------------

def bgb(bundle):
    """(b g b)^{ij} = b^{ik} g_kl b^{lj}."""
    return bundle.b @ bundle.g @ bundle.b


def euler_formula_gap(bundle):
    """lambda_min^-2 - (b g b)^{ii} / g^{ii} for each node and chart axis i."""
    diag = np.diagonal(bgb(bundle), axis1=-2, axis2=-1)
    gii = np.diagonal(bundle.ginv, axis1=-2, axis2=-1)
    return bundle.lambda_min[..., None] ** -2 - diag / gii


def pogorelov_wbar(bundle, alpha, axis=0):
    """K^a ((b g b)^{ii} / g^{ii})^(1/2) - (n a - 1)/(2 n a) |X|^2 for chart axis i."""
    n = bundle.dim
    q = bgb(bundle)[..., axis, axis] / bundle.ginv[..., axis, axis]
    return bundle.K ** alpha * np.sqrt(q) - (n * alpha - 1) / (2 * n * alpha) * bundle.X2


def w_field(bundle, alpha):
    n = bundle.dim
    return bundle.K ** alpha / bundle.lambda_min - (n * alpha - 1) / (2 * n * alpha) * bundle.X2


def f_field(bundle, alpha):
    n = bundle.dim
    trace = np.einsum("...ij,...ij->...", bundle.b, bundle.g)
    return bundle.K ** alpha * trace - (n * alpha - 1) / (2 * alpha) * bundle.X2
