"""Self-similar shrinkers: the planar ODE, shooting sweeps and w/f diagnostics.

For curves (n=1) the shrinker equation K**alpha = h becomes
h'' + h = h**(-1/alpha), since the radius of curvature is h'' + h.
"""
import math
from dataclasses import dataclass

import numpy as np

from .flow import umbilicity
from .geometry import f_field, w_field
from .grid import build_grid
from .support import SupportField

ODE_STEPS = 4096
CLOSURE_TOL = 1e-9
APPLICABLE_RESIDUAL = 5e-2


class TrajectoryError(ValueError):
    """The integrated support function reached zero (non-convex trajectory)."""


@dataclass(frozen=True, eq=False)
class ShrinkerSolution:
    alpha: float
    n: int
    body: SupportField
    residual_max: float
    closure_defect: float
    richardson_error: float
    energy_drift: float


@dataclass(frozen=True)
class ClosureReport:
    alpha: float
    h0: float
    closure_defect: float
    status: str           # "open" or "non-convex"


def _rhs(y, p):
    h, dh = y
    if not h > 0:
        raise TrajectoryError("h reached zero inside a step")
    return np.array([dh, h ** p - h])


def _rk4(y, d, count, p, out=None):
    for k in range(count):
        k1 = _rhs(y, p)
        k2 = _rhs(y + 0.5 * d * k1, p)
        k3 = _rhs(y + 0.5 * d * k2, p)
        k4 = _rhs(y + d * k3, p)
        y = y + (d / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not (y[0] > 0 and np.isfinite(y[0])):
            raise TrajectoryError(f"h reached zero near theta={(k + 1) * d:.6g}")
        if out is not None:
            out[k + 1] = y
    return y


def integrate(alpha, h0, dh0=0.0, steps=ODE_STEPS, extra=0):
    """Classical RK4 over [0, 2 pi]; returns samples of (h, h') at steps+1 nodes.

    With ``extra`` > 0 the trajectory is continued ``extra`` steps past 2 pi
    and ``extra`` steps before 0, giving steps + 1 + 2 extra rows that start at
    theta = -extra * step.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    p = -1.0 / alpha
    d = 2.0 * math.pi / steps
    y0 = np.array([h0, dh0], dtype=float)
    out = np.empty((steps + extra + 1, 2))
    out[0] = y0
    _rk4(y0, d, steps + extra, p, out)
    if not extra:
        return out
    back = np.empty((extra + 1, 2))
    back[0] = y0
    _rk4(y0, -d, extra, p, back)
    return np.concatenate([back[:0:-1], out])


def potential(h, alpha):
    """Phi with Phi'(h) = h**(-1/alpha)."""
    q = 1.0 - 1.0 / alpha
    if abs(q) < 1e-15:
        return np.log(h)
    return h ** q / q


def energy(h, dh, alpha):
    """First integral h'^2/2 + h^2/2 - Phi(h) of the shrinker ODE."""
    return 0.5 * dh * dh + 0.5 * h * h - potential(h, alpha)


def ode_residual(samples, alpha, step):
    """max |h - K**alpha| at the interior rows, with h'' the FD4 derivative of h'.

    ``samples`` is an open trajectory with two extra rows at each end, so no
    stencil wraps across the seam where the closure defect sits.
    """
    h, dh = samples[:, 0], samples[:, 1]
    d2h = (-dh[4:] + 8.0 * dh[3:-1] - 8.0 * dh[1:-3] + dh[:-4]) / (12.0 * step)
    radius = d2h + h[2:-2]
    return float(np.max(np.abs(h[2:-2] - radius ** -alpha)))


def closure_defect(traj):
    return float(abs(traj[-1, 0] - traj[0, 0]) + abs(traj[-1, 1] - traj[0, 1]))


def solve_shrinker_ode_n1(alpha, h0, dh0=0.0, steps=ODE_STEPS, tol=CLOSURE_TOL):
    """Integrate the shrinker ODE; return a ShrinkerSolution when it closes.

    Otherwise a ClosureReport carrying the defect is returned (for sweeps).
    Raises TrajectoryError when h reaches zero.
    """
    full = integrate(alpha, h0, dh0, steps, extra=2)
    traj = full[2:-2]
    defect = closure_defect(traj)
    if not defect < tol:
        return ClosureReport(alpha, h0, defect, "open")
    coarse = integrate(alpha, h0, dh0, steps // 2)
    richardson = float(np.max(np.abs(traj[::2, 0] - coarse[:, 0]))) / 15.0
    E = energy(traj[:, 0], traj[:, 1], alpha)
    grid = build_grid(1, steps)
    body = SupportField(grid, traj[:-1, 0])
    res = ode_residual(full[:-1], alpha, grid.spacing[0])
    return ShrinkerSolution(alpha, 1, body, res, defect, richardson, float(np.ptp(E)))


def shooting_sweep(alpha, h0_values, steps=ODE_STEPS, tol=CLOSURE_TOL, round_tol=1e-6):
    """Integrate from each h0 with h'(0)=0; rows (h0, defect, residual, status).

    ``status`` is "closed-round", "closed-non-round", "open" or "non-convex".
    """
    rows = []
    for h0 in h0_values:
        try:
            sol = solve_shrinker_ode_n1(alpha, float(h0), 0.0, steps, tol)
        except TrajectoryError:
            rows.append((float(h0), math.nan, math.nan, "non-convex"))
            continue
        if isinstance(sol, ClosureReport):
            rows.append((float(h0), sol.closure_defect, math.nan, "open"))
            continue
        spread = float(np.ptp(sol.body.h))
        status = "closed-round" if spread < round_tol else "closed-non-round"
        rows.append((float(h0), sol.closure_defect, sol.residual_max, status))
    return rows


# -- w and f diagnostics -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarDiagnostics:
    w: np.ndarray
    f: np.ndarray
    w_max: float
    f_max: float
    argmax_w: int
    argmax_f: int
    umbilicity: np.ndarray
    grad_X2: np.ndarray


def compute_w_f(bundle, alpha):
    """w, f, their maxima (first node among ties), U and |grad |X|^2|."""
    w = w_field(bundle, alpha)
    f = f_field(bundle, alpha)
    grad = bundle.grid.gradient(bundle.X2)
    gnorm = np.sqrt(np.einsum("...i,...ij,...j->...", grad, bundle.ginv, grad))
    kw, kf = int(np.argmax(w)), int(np.argmax(f))
    return ScalarDiagnostics(w, f, float(w.ravel()[kw]), float(f.ravel()[kf]), kw, kf,
                             umbilicity(bundle), gnorm)


def umbilic_tolerance(residual):
    return max(1e-8, 10.0 * residual)


def umbilicity_at_max(diag, bundle, residual):
    """Umbilicity and |grad |X|^2| at the maximum of f.

    ``residual`` is the input's max shrinker residual; inputs that are not
    numerical shrinkers are reported as inapplicable.
    """
    k = diag.argmax_f
    U = float(diag.umbilicity.ravel()[k])
    G = float(diag.grad_X2.ravel()[k])
    tol = umbilic_tolerance(residual)
    applicable = residual < APPLICABLE_RESIDUAL
    return {
        "argmax_f": k,
        "node": [float(x) for x in bundle.grid.nodes[k]],
        "umbilicity": U,
        "gradF2": G,
        "residual": float(residual),
        "tolerance": tol,
        "applicable": bool(applicable),
        "passed": bool(applicable and U < tol and G < tol),
    }
