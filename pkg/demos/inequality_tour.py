"""The scalar algebra behind the maximum-principle argument, one dimension at a time.

For each n: where I1 changes sign, the smallest J margin over a theta grid,
and the exact endpoint values of y.  For curves (n = 1) I1 is -(alpha-1)^2/alpha
and y(2) = -5, so both positivity claims are false there; for n >= 2 they hold.
"""
from gcflow import inequalities as iq

rows, summary = iq.scan(n_max=10, n_alpha=200, n_theta=200)
print(f"{'n':>3} {'I1 zero':>10} {'min I1':>10} {'J margin':>10} {'y(1/n)':>8} "
      f"{'y(1+1/n)':>9}")
for p in summary["per_n"]:
    print(f"{p['n']:3d} {p['I1_zero']:10.6f} {p['I1_min']:10.3e} {p['min_J_margin']:10.2e} "
          f"{p['y_lo']:>8} {p['y_hi']:>9}")

print()
for k, v in iq.scan_checks(summary).items():
    print(f"{k:18s} {'PASS' if v else 'FAIL'}")

# the bound is attained where the completed square vanishes
n, alpha = 3, 0.8
theta = n * alpha - 1
print(f"\nn={n} alpha={alpha} theta={theta:.1f}: J = {iq.J_def(n, alpha, theta):.15f}, "
      f"bound = {iq.J_bound(n, alpha):.15f}")
