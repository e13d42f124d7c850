"""
The limiting variance functional
================================

V[phi] is a double integral of the covariance kernel against phi.  We
evaluate it by pushing the contour toward the real axis on an eta ladder
and extrapolating to eta = 0, then compare with the closed form available
for the point mass sigma = delta_1 (Gauss-Chebyshev quadrature).

Also shown: the ratio V[phi] / ||phi||_{2+delta}^2 that the uniform
variance bound controls.
"""

import numpy as np

from rmtlab import (
    SigmaMeasure,
    bump_phi,
    poly_phi,
    sobolev_norm,
    variance_limit,
    variance_mp_closed,
)

sigma = SigmaMeasure.point_mass(1.0, 1.0)

for phi, name in [(poly_phi([0.0, 1.0]), "phi = lambda"),
                  (poly_phi([0.0, 0.0, 1.0]), "phi = lambda^2")]:
    closed = variance_mp_closed(phi, 1.0, 0.0, 0.0)
    rep = variance_limit(phi, sigma, 0.0, 0.0)
    print(f"{name}:")
    for eta, v in rep.v_eta:
        print(f"  eta = {eta:5.2f}   V_eta = {v:.5f}")
    print(f"  extrapolated {rep.V:.5f}   closed form {closed:.5f}"
          f"   rel err {abs(rep.V - closed) / closed:.2e}\n")

# a smooth bump, narrow vs wide: the variance scales with the squared norm
for width in (0.4, 0.8):
    phi = bump_phi(1.0, width)
    v = variance_limit(phi, sigma, 0.0, 0.0).V
    nrm2 = sobolev_norm(phi, 2.5) ** 2
    print(f"bump width {width}: V = {v:.4e},  V / ||phi||_2.5^2 = {v / nrm2:.4e}")
