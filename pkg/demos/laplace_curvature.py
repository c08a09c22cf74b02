"""
The determinant route to the information constant
=================================================

The Laplace functional of the quadratic distance between two candidate
drifts admits a closed determinant representation: drive a four-dimensional
coefficient system along the kernel table, accumulate a log-determinant,
and the transform value falls out.  Two independent routes are implemented:
"exact-coefficient" integrates the full time-dependent system, "asymptotic"
freezes the late-time coefficient matrix.  Their agreement, and the
curvature of the exponent in the drift gap, are both checks the test suite
pins down; this script just shows the numbers.
"""

from mixedfou.kernel import ModelParams, solve_kernel
from mixedfou.laplace import integrate_xi, slope_from_eigen, xi_mix
from mixedfou.mle import fisher_decomposition, fisher_info

params = ModelParams(2.0, 2.0, 0.75, 100.0, 2048)
table = solve_kernel(params)

# the transform at several couplings; a = 0 must give exactly 1
print(f"{'a':>5} {'exact-coefficient':>18} {'asymptotic':>12}")
for a in (0.0, 0.25, 1.0, 2.0):
    v_e = integrate_xi(params, table, 2.0, 2.1, a, "exact-coefficient").value
    v_a = integrate_xi(params, table, 2.0, 2.1, a, "asymptotic").value
    print(f"{a:>5} {v_e:>18.10f} {v_a:>12.10f}")

# curvature of the exponent slope in the drift gap h: a Richardson ladder
# over h in {0.02, 0.01, 0.005} removes the O(h) and O(h^2) terms
def kappa(h):
    return -2.0 * slope_from_eigen(xi_mix(2.0, 2.0 + h, 1.0, 2.0)) / h**2

k1, k2, k3 = kappa(0.02), kappa(0.01), kappa(0.005)
khat = (4 * (2 * k3 - k2) - (2 * k2 - k1)) / 3

info = fisher_info(2.0, 2.0)
drift_part, obs_part = fisher_decomposition(2.0, 2.0)
print(f"\nextrapolated curvature  {khat:.9f}")
print(f"closed-form information {info:.9f}")
print(f"naive split sum         {drift_part + obs_part:.9f}  "
      f"(= {drift_part:.6f} + {obs_part:.6f})")
print("\nthe curvature lands on the closed form, not on the split sum;")
print("the split ignores the cross term between the two error sources.")
