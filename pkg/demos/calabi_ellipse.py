"""The ellipse with ab = 1 is a shrinker for alpha = 1/3, three ways.

1. Its support function satisfies K^(1/3) = h; the discrete residual falls
   at 4th order under refinement.
2. Shooting the planar ODE h'' + h = h^(-3) from h(0) = 2 closes after one
   turn and reproduces the ellipse.
3. Under the normalized flow the shape does not change.

At alpha = 3/2 the same shooting sweep finds no closed orbit except the circle.
"""
import numpy as np

from gcflow import bodies
from gcflow.flow import FlowConfig, FlowState, normalize, run
from gcflow.grid import build_grid
from gcflow.identities import observed_order
from gcflow.shrinker import shooting_sweep, solve_shrinker_ode_n1
from gcflow.support import shrinker_residual

print("1. discrete residual max|K^(1/3) - h|")
res = []
for N in (64, 128, 256, 512):
    r = shrinker_residual(bodies.ellipse(build_grid(1, N), 2.0, 0.5), 1 / 3)[1]
    res.append(r)
    print(f"   N={N:4d}  {r:.3e}")
print(f"   observed order {observed_order(res):.2f}")

print("2. shooting from h(0)=2, h'(0)=0")
sol = solve_shrinker_ode_n1(1 / 3, 2.0)
exact = bodies.ellipse(sol.body.grid, 2.0, 0.5).h
print(f"   closure defect {sol.closure_defect:.1e}, "
      f"max|h - ellipse| {np.max(np.abs(sol.body.h - exact)):.1e}, "
      f"energy drift {sol.energy_drift:.1e}")

print("3. 400 steps of the normalized flow")
body = bodies.ellipse(build_grid(1, 256), 2.0, 0.5)
cfg = FlowConfig(n=1, alpha=1 / 3, resolution=256, max_steps=400, cadence=400,
                 ratio_tol=1e-12)
out = run(cfg, body)
drift = np.max(np.abs(out.state.body.h - normalize(FlowState(body)).body.h))
print(f"   t={out.state.t:.4f}, shape drift {drift:.1e} "
      f"(static residual at N=256: {res[2]:.1e})")

print("4. sweep at alpha = 3/2")
rows = shooting_sweep(1.5, np.linspace(1.01, 3.0, 30))
counts = {}
for row in rows:
    counts[row[3]] = counts.get(row[3], 0) + 1
print(f"   {counts}")
