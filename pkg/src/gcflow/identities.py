"""Numerical verification of the differential identities satisfied by shrinkers.

Every check compares a left-hand side built from stencils (covariant
derivatives, the operator L) against a right-hand side assembled from
bundle fields, and reports the largest chart-invariant residual norm.

Identities that only hold on self-similar shrinkers (K**alpha = h) are
gated: the input's shrinker residual must be below ``shrinker_gate``.
A fixed gate of 1e-8 cannot be combined with a refinement study at
4th order (the ellipse oracle reaches 1e-8 only where fourth
differences are dominated by roundoff), so the gate is resolution indexed.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry as geo

GATE_FLOOR = 1e-8
GATE_C = 100.0
ROUNDOFF_TOL = 1e-9
GRID_C = 1e6
MIN_ORDER = 3.0

# nabla b = -b b nabla h and <X, grad |X|^2> = 2 <X,F_i><X,F^i> hold on any
# convex immersion; everything else needs K^alpha = h
ALL_IDS = ("inverse-derivative", "L-position", "curvature-gradient", "L-curvature",
           "L-inverse-form", "L-second-form", "principal-gradient", "position-gradient", "L-f")
SHRINKER_ONLY = set(ALL_IDS) - {"inverse-derivative", "position-gradient"}


@dataclass
class IdentityReport:
    identity: str
    body: str
    resolution: tuple
    residual: float
    threshold: float
    order: float = None
    passed: bool = False
    applicable: bool = True
    residuals: list = field(default_factory=list)
    note: str = ""

    def to_dict(self):
        d = asdict(self)
        d["resolution"] = list(self.resolution)
        return d


def grid_step(grid):
    return max(grid.spacing)


def shrinker_gate(grid):
    return max(GATE_FLOOR, GATE_C * grid_step(grid) ** 4)


def grid_threshold(grid):
    """Acceptance threshold C * step**4 for a residual at grid order."""
    return ROUNDOFF_TOL + GRID_C * grid_step(grid) ** 4


def support_values(bundle):
    return np.einsum("...k,...k->...", bundle.X, bundle.nu)


def bundle_shrinker_residual(bundle, alpha):
    return float(np.max(np.abs(bundle.K ** alpha - support_values(bundle))))


def observed_order(residuals, steps=None):
    """Least-squares slope of log2(residual) against log2(1/step).

    With ``steps`` omitted the resolutions are taken to double each time.
    """
    r = np.asarray(residuals, dtype=float)
    if len(r) < 2 or np.any(r <= 0):
        return float("nan")
    x = -np.log2(np.asarray(steps, dtype=float)) if steps is not None else np.arange(len(r))
    slope = np.polyfit(x, np.log2(r), 1)[0]
    return float(-slope)


# -- shared ingredients --------------------------------------------------------

def _contract_first(vec, dT, ngrid):
    # sum_k vec_k dT[..., k, rest]
    extra = dT.ndim - ngrid - 1
    v = vec.reshape(vec.shape + (1,) * extra)
    return np.sum(v * dT, axis=ngrid)


class _Fields:
    """Derivatives shared by the identity checks on one bundle."""

    def __init__(self, bundle, alpha):
        self.B = bundle
        self.alpha = alpha
        self.n = bundle.dim
        self.Ka = bundle.K ** alpha
        self.dKa = bundle.grid.gradient(self.Ka)
        self.dh = geo.covariant_derivative(bundle.h, "ll", bundle)
        # nabla b from the inverse-derivative formula, not by differencing b
        self.db = -np.einsum("...jl,...km,...ilm->...ijk", bundle.b, bundle.b, self.dh)

    def along_F(self, dT):
        return _contract_first(self.B.XFup, dT, self.B.grid.dim)


def _max_norm(T, variance, bundle):
    return float(np.max(geo.tensor_norm(T, variance, bundle)))


# -- residual fields -----------------------------------------------------------

def residual_inverse_derivative(bundle, alpha=None):
    """nabla_i b^jk + b^jl b^km nabla_i h_lm, with nabla b differenced directly."""
    dh = geo.covariant_derivative(bundle.h, "ll", bundle)
    db = geo.covariant_derivative(bundle.b, "uu", bundle)
    r = db + np.einsum("...jl,...km,...ilm->...ijk", bundle.b, bundle.b, dh)
    return r, "luu"


def residual_L_position(bundle, alpha):
    B, n = bundle, bundle.dim
    Ka = B.K ** alpha
    lhs = geo.apply_L(B.X2, B, alpha)
    trace = np.einsum("...ij,...ij->...", B.b, B.g)
    rhs = 2 * alpha * Ka * trace - 2 * n * alpha * Ka ** 2
    return lhs - rhs, ""


def residual_curvature_gradient(bundle, alpha):
    Ka = bundle.K ** alpha
    lhs = bundle.grid.gradient(Ka)
    rhs = np.einsum("...ij,...j->...i", bundle.h, bundle.XFup)
    return lhs - rhs, "l"


def residual_L_curvature(bundle, alpha):
    f = _Fields(bundle, alpha)
    B, n, Ka = bundle, f.n, f.Ka
    lhs = geo.apply_L(Ka, B, alpha)
    rhs = f.along_F(f.dKa) + n * alpha * Ka - alpha * Ka ** 2 * B.H
    return lhs - rhs, ""


def residual_L_inverse_form(bundle, alpha):
    f = _Fields(bundle, alpha)
    B, n, Ka, a = bundle, f.n, f.Ka, alpha
    ng = B.grid.dim
    lhs = geo.apply_L_tensor(B.b, "uu", B, a)
    bdK = np.einsum("...pr,...r->...p", B.b, f.dKa)
    t1 = (1.0 / Ka)[..., None, None] * np.einsum("...p,...q->...pq", bdK, bdK)
    # A^p_{jm} = b^pr b^ik nabla_r h_ik... contracted below
    t2 = a * Ka[..., None, None] * np.einsum(
        "...pr,...qs,...ij,...km,...rik,...sjm->...pq", B.b, B.b, B.b, B.b, f.dh, f.dh)
    t3 = _contract_first(B.XFup, f.db, ng)
    t4 = -B.b - (n * a - 1) * B.ginv * Ka[..., None, None] \
        + (a * Ka * B.H)[..., None, None] * B.b
    return lhs - (t1 + t2 + t3 + t4), "uu"


def residual_L_second_form(bundle, alpha):
    f = _Fields(bundle, alpha)
    B, n, Ka, a = bundle, f.n, f.Ka, alpha
    ng = B.grid.dim
    lhs = geo.apply_L_tensor(B.h, "ll", B, a)
    trdh = np.einsum("...rs,...irs->...i", B.b, f.dh)
    t1 = -a * a * Ka[..., None, None] * np.einsum("...i,...j->...ij", trdh, trdh)
    t2 = a * Ka[..., None, None] * np.einsum("...pr,...qs,...irs,...jpq->...ij",
                                            B.b, B.b, f.dh, f.dh)
    t3 = _contract_first(B.XFup, f.dh, ng)
    hh = B.h @ B.ginv @ B.h
    t4 = B.h + (n * a - 1) * Ka[..., None, None] * hh - (a * Ka * B.H)[..., None, None] * B.h
    return lhs - (t1 + t2 + t3 + t4), "ll"


def residual_principal_gradient(bundle, alpha):
    """b^ii nabla_i K^a - <F, F^i> in a principal g-orthonormal frame at each node."""
    E = geo.principal_frame(bundle)                       # columns e_a
    dKa = bundle.grid.gradient(bundle.K ** alpha)
    dK_frame = np.einsum("...ia,...i->...a", E, dKa)
    XF_frame = np.einsum("...ia,...i->...a", E, bundle.XF)
    r = dK_frame / bundle.curvatures - XF_frame
    return r, None


def residual_position_gradient(bundle, alpha=None):
    """<X, F^i> d_i |X|^2 - 2 <X, F_i><X, F^i>; holds on any immersion."""
    B = bundle
    lhs = np.einsum("...i,...i->...", B.XFup, B.grid.gradient(B.X2))
    rhs = 2 * np.einsum("...i,...i->...", B.XF, B.XFup)
    return lhs - rhs, ""


def rhs_L_f_terms(bundle, alpha):
    """The four right-hand-side terms of the maximum-principle identity for f."""
    f = _Fields(bundle, alpha)
    B, n, Ka, a = bundle, f.n, f.Ka, alpha
    q = geo.bgb(B)
    bdK = np.einsum("...ij,...i->...j", B.b, f.dKa)
    gdb = np.einsum("...pq,...jpq->...j", B.g, f.db)
    t1 = 2 * a * Ka * np.einsum("...j,...j->...", bdK, gdb)
    t2 = np.einsum("...rs,...r,...s->...", q, f.dKa, f.dKa)
    t3 = a * Ka ** 2 * np.einsum("...rs,...ij,...km,...rik,...sjm->...", q, B.b, B.b, f.dh, f.dh)
    t4 = (n - 1.0 / a) * np.einsum("...i,...i->...", B.XF, B.XFup)
    return t1, t2, t3, t4


def residual_L_f(bundle, alpha):
    B = bundle
    ff = geo.f_field(B, alpha)
    lhs = geo.apply_L(ff, B, alpha) - np.einsum("...i,...i->...", B.XFup, B.grid.gradient(ff))
    return lhs - sum(rhs_L_f_terms(B, alpha)), ""


RESIDUALS = {
    "inverse-derivative": residual_inverse_derivative,
    "L-position": residual_L_position,
    "curvature-gradient": residual_curvature_gradient,
    "L-curvature": residual_L_curvature,
    "L-inverse-form": residual_L_inverse_form,
    "L-second-form": residual_L_second_form,
    "principal-gradient": residual_principal_gradient,
    "position-gradient": residual_position_gradient,
    "L-f": residual_L_f,
}


def residual_max(identity, bundle, alpha):
    r, variance = RESIDUALS[identity](bundle, alpha)
    if variance is None:
        return float(np.max(np.abs(r)))
    return _max_norm(r, variance, bundle) if variance else float(np.max(np.abs(r)))


# -- single-resolution checks --------------------------------------------------

def check(identity, bundle, alpha=None, body="", threshold=None):
    """Evaluate one identity on one bundle and return an IdentityReport."""
    grid = bundle.grid
    res = tuple(grid.shape)
    thr = grid_threshold(grid) if threshold is None else threshold
    if identity in SHRINKER_ONLY:
        if alpha is None or alpha <= 0:
            raise ValueError(f"identity {identity} needs a positive alpha")
        gate = shrinker_gate(grid)
        sr = bundle_shrinker_residual(bundle, alpha)
        if not sr < gate:
            return IdentityReport(identity, body, res, float("nan"), thr, applicable=False,
                                  note=f"not a shrinker: residual {sr:.3g} >= gate {gate:.3g}")
    r = residual_max(identity, bundle, alpha)
    return IdentityReport(identity, body, res, r, thr, passed=bool(r <= thr), residuals=[r])


def check_inverse_derivative(bundle, body="", threshold=None):
    return check("inverse-derivative", bundle, None, body, threshold)


def check_L_position(bundle, alpha, body="", threshold=None):
    return check("L-position", bundle, alpha, body, threshold)


def check_curvature_gradient(bundle, alpha, body="", threshold=None):
    return check("curvature-gradient", bundle, alpha, body, threshold)


def check_L_curvature(bundle, alpha, body="", threshold=None):
    return check("L-curvature", bundle, alpha, body, threshold)


def check_L_inverse_form(bundle, alpha, body="", threshold=None):
    return check("L-inverse-form", bundle, alpha, body, threshold)


def check_L_second_form(bundle, alpha, body="", threshold=None):
    return check("L-second-form", bundle, alpha, body, threshold)


def check_gradient_pair(bundle, alpha, body="", threshold=None):
    return (check("principal-gradient", bundle, alpha, body, threshold),
            check("position-gradient", bundle, alpha, body, threshold))


def check_L_f(bundle, alpha, body="", threshold=None):
    return check("L-f", bundle, alpha, body, threshold)


# -- refinement studies and campaigns ------------------------------------------

def refinement_study(identity, make_bundle, resolutions, alpha=None, body=""):
    """Residuals over a refinement sequence; pass needs grid-order size and order >= 3.

    ``make_bundle(resolution)`` returns a GeometryBundle.
    """
    if len(resolutions) < 3:
        raise ValueError("a refinement study needs at least 3 resolutions")
    reports = [check(identity, make_bundle(r), alpha, body) for r in resolutions]
    last = reports[-1]
    if not all(r.applicable for r in reports):
        bad = next(r for r in reports if not r.applicable)
        return IdentityReport(identity, body, last.resolution, float("nan"), last.threshold,
                              applicable=False, note=bad.note)
    res = [r.residual for r in reports]
    order = observed_order(res)
    passed = bool(last.residual <= last.threshold and order >= MIN_ORDER)
    return IdentityReport(identity, body, last.resolution, last.residual, last.threshold,
                          order=order, passed=passed, residuals=res)


def roundoff_check(identity, bundle, alpha=None, body="sphere"):
    """Check at roundoff level (bodies whose discrete geometry is exact)."""
    return check(identity, bundle, alpha, body, threshold=ROUNDOFF_TOL)


FUZZ_IDS = ("inverse-derivative", "position-gradient")


def fuzz_campaign(grid, rng, count=100, identities=FUZZ_IDS, threshold=1e-5,
                  degree=3, amplitude=0.2):
    """Run chart-free identities on ``count`` random convex bodies."""
    from .bodies import random_body
    reports = []
    for k in range(count):
        body = random_body(grid, rng, degree=degree, amplitude=amplitude)
        B = geo.bundle_from_support(body)
        for ident in identities:
            reports.append(check(ident, B, None, f"random#{k}", threshold))
    return reports


def random_jacobians(shape, rng, dim=2, spread=1.0):
    """Well-conditioned random chart Jacobians R1 diag(exp(u)) R2, one per node."""
    def rot(t):
        c, s = np.cos(t), np.sin(t)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    if dim == 1:
        return np.exp(rng.uniform(-spread, spread, shape + (1, 1)))
    t1 = rng.uniform(0, 2 * np.pi, shape)
    t2 = rng.uniform(0, 2 * np.pi, shape)
    u = rng.uniform(-spread, spread, shape + (2,))
    D = np.zeros(shape + (2, 2))
    D[..., 0, 0], D[..., 1, 1] = np.exp(u[..., 0]), np.exp(u[..., 1])
    return rot(t1) @ D @ rot(t2)


@dataclass
class ChartFuzzSummary:
    count: int
    min_euler_gap: float
    max_wbar_excess: dict
    max_f_excess: dict


def chart_fuzz_campaign(grid, rng, count=100, alphas=(0.6, 1.0, 1.4), degree=3,
                        amplitude=0.2):
    """Euler gap, w-bar minus w and f minus n w on random bodies in random skewed charts.

    Every chart axis is tested; the extremes over bodies, nodes and axes are kept.
    """
    from .bodies import random_body
    gap = math.inf
    wbar = {a: -math.inf for a in alphas}
    fex = {a: -math.inf for a in alphas}
    n = grid.dim
    for _ in range(count):
        body = random_body(grid, rng, degree=degree, amplitude=amplitude)
        B = geo.bundle_from_support(body)
        T = geo.transform_chart(B, random_jacobians(grid.shape, rng, n))
        gap = min(gap, float(geo.euler_formula_gap(T).min()))
        for a in alphas:
            w = geo.w_field(B, a)
            for axis in range(n):
                wbar[a] = max(wbar[a], float((geo.pogorelov_wbar(T, a, axis) - w).max()))
            fex[a] = max(fex[a], float((geo.f_field(T, a) - n * w).max()))
    return ChartFuzzSummary(count, gap, wbar, fex)


def suite_passed(reports):
    return all(r.passed for r in reports)


def reports_json(reports):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v
    rows = [{k: clean(v) for k, v in r.to_dict().items()} for r in reports]
    return json.dumps(rows, indent=2, sort_keys=True)


def reports_table(reports):
    head = (f"{'id':<19} {'body':<22} {'resolution':<12} {'residual':>11} "
            f"{'threshold':>10} {'order':>6}  status")
    lines = [head, "-" * len(head)]
    for r in reports:
        res = "x".join(str(v) for v in r.resolution)
        order = "" if r.order is None else f"{r.order:6.2f}"
        status = "n/a" if not r.applicable else ("PASS" if r.passed else "FAIL")
        lines.append(f"{r.identity:<19} {r.body[:22]:<22} {res:<12} {r.residual:11.3e} "
                     f"{r.threshold:10.2e} {order:>6}  {status}")
    return "\n".join(lines)
