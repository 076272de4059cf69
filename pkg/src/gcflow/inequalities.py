"""Scalar algebra behind the Pogorelov-type estimate: I1, J (two forms), y(alpha).

beta = (n alpha - 1) / (n alpha) and theta > 0 is a curvature ratio.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq


def beta(n, alpha):
    return (n * alpha - 1.0) / (n * alpha)


@dataclass(frozen=True)
class PogorelovParams:
    n: int
    alpha: float
    theta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    @property
    def beta(self):
        return beta(self.n, self.alpha)


def I1(n, alpha):
    """beta + 1 - alpha."""
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("alpha must be positive")
    return beta(n, alpha) + 1.0 - alpha


def I1_zero(n):
    """Larger root of alpha * I1 = -alpha^2 + 2 alpha - 1/n, i.e. 1 + sqrt(1 - 1/n).

    The larger root has no cancellation, so the quadratic formula is stable.
    """
    disc = math.sqrt(1.0 - 1.0 / n)
    return 1.0 + disc


def I1_zero_bracketed(n):
    """Independent root of I1 by bracketing (needs a sign change, so n >= 2)."""
    if n < 2:
        raise ValueError("I1 has a double root at n=1; no bracket exists")
    return brentq(lambda a: I1(n, a), 1.0 + 0.5 / n, 2.0, xtol=1e-15, rtol=1e-15, maxiter=200)


def _check_theta(theta):
    if np.any(np.asarray(theta) <= 0):
        raise ValueError("theta must be positive")


def neumaier_sum(terms):
    """Compensated sum of a list of equally shaped arrays."""
    total = np.zeros_like(np.asarray(terms[0], dtype=float))
    comp = np.zeros_like(total)
    for x in terms:
        x = np.asarray(x, dtype=float)
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp = comp + np.where(big, (total - t) + x, (x - t) + total)
        total = t
    return total + comp


def J_def_terms(n, alpha, theta):
    b = beta(n, alpha)
    d = b - theta
    return [2 * alpha * d, alpha * (theta ** -2 + 2 / theta) * d * d, b + 0 * theta]


def J_closed_terms(n, alpha, theta):
    b = beta(n, alpha)
    sq = b / theta - 1.0 / (n * alpha)
    return [b * (1 - alpha) + 0 * theta, 1.0 / n + 0 * theta, alpha * sq * sq,
            -1.0 / (n * n * alpha) + 0 * theta]


def J_def(n, alpha, theta):
    _check_theta(theta)
    return neumaier_sum(J_def_terms(n, alpha, theta))


def J_closed(n, alpha, theta):
    _check_theta(theta)
    return neumaier_sum(J_closed_terms(n, alpha, theta))


def J_pair(n, alpha, theta):
    return J_def(n, alpha, theta), J_closed(n, alpha, theta)


def J_bound(n, alpha):
    """beta (1 - alpha + 1/n), attained at theta = n alpha beta."""
    return beta(n, alpha) * (1.0 - alpha + 1.0 / n)


def y_poly(n, alpha):
    return -(2 * n + 3) * alpha * alpha + 5 * (n + 1) * alpha - 5


def y_certificate(n):
    """Exact check on [1/n, 1 + 1/n]: concavity plus endpoint signs.

    Returns a dict with the exact endpoint values, whether they match the
    closed forms 3/n - 3/n^2 and 3n - 2 - 3/n - 3/n^2, and whether the
    certificate proves y >= 0 on the interval.
    """
    n = Fraction(n)
    lo, hi = 1 / n, 1 + 1 / n
    y_lo, y_hi = y_poly(n, lo), y_poly(n, hi)
    closed_lo = 3 / n - 3 / n ** 2
    closed_hi = 3 * n - 2 - 3 / n - 3 / n ** 2
    concave = -(2 * n + 3) < 0
    return {
        "n": int(n),
        "y_lo": y_lo, "y_hi": y_hi,
        "endpoints_match": y_lo == closed_lo and y_hi == closed_hi,
        "concave": concave,
        "nonnegative": bool(concave and y_lo >= 0 and y_hi >= 0),
    }


def alpha_samples(n, count):
    """Midpoints of ``count`` equal cells of the open interval (1/n, 1 + 1/n)."""
    return 1.0 / n + (np.arange(count) + 0.5) / count


def theta_samples(count, theta_max=10.0):
    """theta_max * k / count for k = 1..count, a grid of (0, theta_max]."""
    return theta_max * np.arange(1, count + 1) / count


def scan(n_max=10, n_alpha=1000, n_theta=1000, theta_max=10.0, n_I1=10000):
    """Exhaustive scan; returns (rows, summary).

    One row per (n, alpha) with the worst J margin and form discrepancy over
    theta.  The summary holds the global extremes and the per-n checks.
    """
    theta = theta_samples(n_theta, theta_max)
    rows = []
    per_n = []
    min_margin, max_disc = math.inf, 0.0
    for n in range(1, n_max + 1):
        a = alpha_samples(n, n_alpha)
        A, T = np.meshgrid(a, theta, indexing="ij")
        jd, jc = J_pair(n, A, T)
        disc = np.abs(jd - jc) / (1.0 + np.abs(jd))
        bound = J_bound(n, a)
        margin = jd - bound[:, None]
        i1 = I1(n, a)
        yv = y_poly(n, a)
        for k in range(n_alpha):
            rows.append((n, float(a[k]), float(i1[k]), float(jd[k].min()), float(bound[k]),
                         float(margin[k].min()), float(disc[k].max()), float(yv[k])))
        a_dense = alpha_samples(n, n_I1)
        y_dense = y_poly(n, np.concatenate([[1.0 / n], a_dense, [1.0 + 1.0 / n]]))
        zero = I1_zero(n)
        cross = I1_zero_bracketed(n) if n >= 2 else None
        cert = y_certificate(n)
        per_n.append({
            "n": n,
            "I1_min": float(I1(n, a_dense).min()),
            "I1_positive": bool(np.all(I1(n, a_dense) > 0)),
            "I1_zero": zero,
            "I1_zero_expected": 1.0 + math.sqrt((n - 1) / n),
            "I1_zero_bracketed": cross,
            "J_positive": bool(np.all(jd > 0)),
            "min_J_margin": float(margin.min()),
            "max_form_discrepancy": float(disc.max()),
            "y_min": float(y_dense.min()),
            "y_endpoints_match": cert["endpoints_match"],
            "y_certified_nonnegative": cert["nonnegative"],
            "y_lo": str(cert["y_lo"]), "y_hi": str(cert["y_hi"]),
        })
        min_margin = min(min_margin, float(margin.min()))
        max_disc = max(max_disc, float(disc.max()))
    summary = {
        "min_J_margin": min_margin,
        "max_form_discrepancy": max_disc,
        "I1_zero_location": {str(p["n"]): p["I1_zero"] for p in per_n},
        "per_n": per_n,
    }
    return rows, summary


SCAN_HEADER = ("n", "alpha", "I1", "J_min", "J_bound", "J_margin_min", "form_discrepancy_max", "y")


def scan_checks(summary, form_tol=1e-11, bound_tol=1e-12, zero_tol=1e-9, y_tol=1e-12):
    """Pass/fail per property of a ``scan`` summary, over every scanned n."""
    per = summary["per_n"]

    def zero_ok(p):
        if abs(p["I1_zero"] - p["I1_zero_expected"]) > zero_tol:
            return False
        cross = p["I1_zero_bracketed"]
        return cross is None or abs(cross - p["I1_zero"]) <= zero_tol

    return {
        "J_forms_agree": summary["max_form_discrepancy"] <= form_tol,
        "J_above_bound": summary["min_J_margin"] >= -bound_tol,
        "J_positive": all(p["J_positive"] for p in per),
        "I1_positive": all(p["I1_positive"] for p in per),
        "I1_zero_located": all(zero_ok(p) for p in per),
        "y_nonnegative": all(p["y_min"] >= -y_tol for p in per),
        "y_endpoints_exact": all(p["y_endpoints_match"] for p in per),
    }
