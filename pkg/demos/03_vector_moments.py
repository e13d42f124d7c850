"""
Second-order moment structure of isotropic vectors
==================================================

Every supported law satisfies E{y_j y_k} = delta_jk / n, but they differ at
the next order:

    E{y_j^2 y_k^2} = n^-2 + a n^-3 + o(n^-3)     (j != k)
    E{y_j^4} - 3 E{y_j^2 y_k^2} = b n^-2 + o(n^-2)

This script prints the Monte-Carlo ladder of the implied coefficients next
to the exact finite-n values, showing the convergence in n.
"""

from rmtlab import VectorLaw, moment_profile, run_moment_check

for spec in ["iid:rademacher", "sphere", "lpball:1", "lpball:2"]:
    law = VectorLaw.parse(spec)
    prof = moment_profile(law)
    print(f"\n{spec}:  a = {prof.a:+.3f},  b = {prof.b:+.3f}")
    print(f"  {'n':>4} {'a_hat':>8} {'(SE)':>7} {'a exact@n':>10}"
          f" {'b_hat':>8} {'(SE)':>7} {'b exact@n':>10}")
    for row in run_moment_check(law, ns=(16, 64, 256), R=20_000, seed=5):
        a_n = row.n**3 * (row.a22_exact - 1.0 / row.n**2)
        b_n = row.n**2 * row.kappa4_exact
        print(f"  {row.n:>4} {row.a_hat:>8.3f} ({row.a_se:.3f}) {a_n:>10.3f}"
              f" {row.b_hat:>8.3f} ({row.b_se:.3f}) {b_n:>10.3f}")
