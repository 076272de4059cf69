"""Evaluate every differential identity on the sphere, the Calabi ellipse and random bodies.

The sphere has exact discrete geometry, so residuals sit at roundoff.  The
ellipse is a shrinker only for alpha = 1/3; residuals there shrink at grid
order.  On random convex surfaces only the two chart-free identities apply,
and at 48x96 their residuals are limited by the poles.
"""
import numpy as np

from gcflow import bodies
from gcflow import geometry as geo
from gcflow import identities as ids
from gcflow.grid import build_grid

reports = []
sphere = geo.bundle_from_support(bodies.sphere(build_grid(2, (24, 48))))
for ident in ids.ALL_IDS:
    reports.append(ids.roundoff_check(ident, sphere, 1.0, "unit sphere"))


def ellipse(N):
    return geo.bundle_from_support(bodies.ellipse(build_grid(1, N), 2.0, 0.5))


for ident in ids.ALL_IDS:
    reports.append(ids.refinement_study(ident, ellipse, (128, 256, 512), 1 / 3,
                                        "ellipse a=2 b=1/2"))

# alpha = 1 is wrong for this ellipse, so the shrinker identities refuse to run
reports.append(ids.check("L-f", ellipse(256), 1.0, "ellipse, alpha=1"))

reports += ids.fuzz_campaign(build_grid(2, (48, 96)), np.random.default_rng(0), count=3)
print(ids.reports_table(reports))

print()
s = ids.chart_fuzz_campaign(build_grid(2, (48, 96)), np.random.default_rng(0), count=10)
print(f"skewed charts, {s.count} bodies: min Euler gap {s.min_euler_gap:.2e}, "
      f"max(wbar - w) {max(s.max_wbar_excess.values()):.2e}, "
      f"max(f - 2w) {max(s.max_f_excess.values()):.2e}")
