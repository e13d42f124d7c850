"""Limiting variance functionals for linear eigenvalue statistics.

Implements the weighted Fourier norm

    ||phi||_s^2 = int (1 + 2|k|)^(2s) |phi_hat(k)|^2 dk,
    phi_hat(k)  = int e^{ikx} phi(x) dx,

the covariance kernel

    C(z1, z2) = d^2/dz1 dz2 [ 2 log(Df/Dz) - (a + b) f(z1) f(z2) Dz/Df ],

with Df = f(z1) - f(z2), Dz = z1 - z2, the double-integral variance

    V_eta[phi] = (1/2 pi^2) int int Re[C(z1, conj z2) - C(z1, z2)]
                 phi(l1) phi(l2) dl1 dl2,    z_i = l_i + i eta,

its eta -> 0 extrapolation, and the closed form for the point mass tau = 1
evaluated by Gauss-Chebyshev quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import SigmaMeasure, TestFunction
from .mp_limit import f_derivatives, solve_f, solve_f_grid, support_edges_mp


class GridError(ValueError):
    """Evaluation grid too coarse for the requested accuracy."""


def sobolev_norm(phi: TestFunction, s: float) -> float:
    """Weighted-Fourier norm of phi at smoothness exponent s > 0."""
    if s <= 0:
        raise ValueError("s must be > 0")
    X, dx = phi.extent, phi.step
    N = int(round(2 * X / dx))
    x = -X + dx * np.arange(N)
    vals = phi(x)
    vmax = np.abs(vals).max()
    if vmax == 0.0:
        return 0.0
    if max(abs(vals[0]), abs(vals[-1])) > 1e-6 * vmax:
        raise GridError("phi does not decay at the grid boundary")
    # phi_hat(k_j) = dx * e^{i k_j x0} * sum_m phi_m e^{2 pi i j m / N}
    k = 2.0 * np.pi * np.fft.fftfreq(N, d=dx)
    phat = dx * np.exp(1j * k * x[0]) * np.fft.ifft(vals) * N
    weight = (1.0 + 2.0 * np.abs(k)) ** (2.0 * s)
    integrand = weight * np.abs(phat) ** 2
    # Nyquist check: the weighted integrand must have died off well before
    # the largest resolved frequency
    order = np.argsort(k)
    k_sorted = k[order]
    g_sorted = integrand[order]
    tail = g_sorted[np.abs(k_sorted) > 0.9 * np.abs(k).max()]
    if tail.size and tail.max() > 1e-10 * g_sorted.max():
        raise GridError("grid too coarse for the requested weight growth")
    norm2 = float(np.trapezoid(g_sorted, k_sorted))
    return float(np.sqrt(norm2))


def _kernel_offdiag(f1, fp1, f2, fp2, dz, ab):
    """C(z1, z2) for z1 != z2 from f, f' at the two points."""
    F = f1 - f2
    c_log = fp1 * fp2 / F**2 - 1.0 / dz**2
    if ab == 0.0:
        return 2.0 * c_log
    h2 = (
        fp1 * fp2 * dz / F
        - fp1 * f2 / F
        + f1 * fp2 / F
        + fp1 * f2 * fp2 * dz / F**2
        + f1 * f2 * fp2 / F**2
        - f1 * fp1 * fp2 * dz / F**2
        + f1 * fp1 * f2 / F**2
        - 2.0 * f1 * fp1 * f2 * fp2 * dz / F**3
    )
    return 2.0 * c_log - ab * h2


def _kernel_diag(f, f1, f2, f3, ab):
    """Removable-singularity limit C(z, z) from f and its derivatives."""
    c_log = f3 / (3.0 * f1) - f2**2 / (2.0 * f1**2)
    if ab == 0.0:
        return c_log
    h2 = (
        4.0 * f1
        - 4.0 * f * f2 / f1
        - (2.0 / 3.0) * f**2 * f3 / f1**2
        + 2.0 * f**2 * f2**2 / f1**3
    )
    return c_log - 0.25 * ab * h2


def cov_kernel(
    z1: complex,
    z2: complex,
    sigma: SigmaMeasure,
    a: float,
    b: float,
    eps_factor: float = 1e-3,
) -> complex:
    """Covariance kernel C(z1, z2) of the centered resolvent traces.

    Derivatives are taken analytically via f and f'; when |z1 - z2| falls
    below eps_factor * |Im z1| the removable diagonal singularity is handled
    by the series expansion around the midpoint.
    """
    z1, z2 = complex(z1), complex(z2)
    if z1.imag == 0 or z2.imag == 0:
        raise ValueError("z1, z2 must be non-real")
    ab = a + b
    if abs(z1 - z2) < eps_factor * abs(z1.imag):
        zm = 0.5 * (z1 + z2)
        f = solve_f(zm, sigma).f
        f1, f2, f3 = f_derivatives(np.asarray(zm), sigma, np.asarray(f), order=3)
        return complex(_kernel_diag(f, complex(f1), complex(f2), complex(f3), ab))
    fa = solve_f(z1, sigma).f
    fb = solve_f(z2, sigma).f
    fpa = complex(f_derivatives(np.asarray(z1), sigma, np.asarray(fa), order=1)[0])
    fpb = complex(f_derivatives(np.asarray(z2), sigma, np.asarray(fb), order=1)[0])
    return complex(_kernel_offdiag(fa, fpa, fb, fpb, z1 - z2, ab))


def _default_grid_bounds(sigma: SigmaMeasure, margin: float):
    tau_max = float(sigma.taus.max())
    _, a_plus, _ = support_edges_mp(sigma.c)
    return (-margin, tau_max * a_plus + margin)


def _veta_on_grid(phi, eta, sigma, ab, lo, hi, npoints):
    lam = np.linspace(lo, hi, npoints)
    z = lam + 1j * eta
    f = solve_f_grid(z, sigma)
    f1, f2, f3 = f_derivatives(z, sigma, f, order=3)

    dl = lam[:, None] - lam[None, :]
    # same half-plane kernel; exact diagonal from the series limit
    with np.errstate(divide="ignore", invalid="ignore"):
        K_same = _kernel_offdiag(
            f[:, None], f1[:, None], f[None, :], f1[None, :], dl + 0j, ab
        )
    np.fill_diagonal(K_same, _kernel_diag(f, f1, f2, f3, ab))
    # opposite half-plane: z1 - conj(z2) = dl + 2 i eta, never zero
    K_conj = _kernel_offdiag(
        f[:, None], f1[:, None], np.conj(f)[None, :], np.conj(f1)[None, :],
        dl + 2j * eta, ab,
    )
    integrand = np.real(K_conj - K_same)
    pv = phi(lam)
    w = np.full(npoints, hi - lo) / (npoints - 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    fw = pv * w
    return float(fw @ integrand @ fw) / (2.0 * np.pi**2)


def variance_eta(
    phi: TestFunction,
    eta: float,
    sigma: SigmaMeasure,
    a: float,
    b: float,
    npoints: int = 400,
    margin: float = 1.0,
    refine_tol: float = 0.005,
    max_refine: int = 3,
) -> float:
    """Double-integral variance at smoothing scale eta > 0.

    The lambda grid spans the support with margin max(margin, 10 eta) and is
    doubled until the value changes by less than refine_tol (relative).
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    margin = max(margin, 10.0 * eta)
    lo, hi = _default_grid_bounds(sigma, margin)
    ab = a + b
    v = _veta_on_grid(phi, eta, sigma, ab, lo, hi, npoints)
    for _ in range(max_refine):
        npoints *= 2
        v_new = _veta_on_grid(phi, eta, sigma, ab, lo, hi, npoints)
        if abs(v_new - v) <= refine_tol * max(abs(v_new), 1e-12):
            return v_new
        v = v_new
    raise GridError(
        f"grid refinement did not settle below {refine_tol:.1%} at eta={eta}"
    )


_DEFAULT_ETA_LEVELS = (0.16, 0.08, 0.04, 0.02)


@dataclass(frozen=True)
class VarianceReport:
    """Extrapolated limit variance with its eta ladder and settings."""

    V: float
    v_eta: tuple          # ((eta, value), ...)
    converged: bool       # last two levels within level_tol of each other
    level_tol: float
    npoints: int

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "v_eta": [list(p) for p in self.v_eta],
            "converged": self.converged,
            "level_tol": self.level_tol,
            "npoints": self.npoints,
        }


def variance_limit(
    phi: TestFunction,
    sigma: SigmaMeasure,
    a: float,
    b: float,
    etas=_DEFAULT_ETA_LEVELS,
    npoints: int = 400,
    level_tol: float = 0.05,
) -> VarianceReport:
    """Evaluate variance_eta on a decreasing eta ladder and extrapolate the
    polynomial fit to eta = 0."""
    etas = np.asarray(etas, dtype=float)
    vals = np.array([variance_eta(phi, e, sigma, a, b, npoints=npoints) for e in etas])
    coeffs = np.polynomial.polynomial.polyfit(etas, vals, deg=len(etas) - 1)
    V = float(np.polynomial.polynomial.polyval(0.0, coeffs))
    scale = max(abs(vals[-1]), abs(V), 1e-12)
    converged = abs(vals[-1] - vals[-2]) <= level_tol * scale
    return VarianceReport(
        V=V,
        v_eta=tuple((float(e), float(v)) for e, v in zip(etas, vals)),
        converged=bool(converged),
        level_tol=level_tol,
        npoints=npoints,
    )


def variance_mp_closed(
    phi: TestFunction,
    c: float,
    a: float,
    b: float,
    nodes: int = 400,
) -> float:
    """Closed-form limit variance for the point mass tau = 1.

    Gauss-Chebyshev substitution lambda = 1 + c + 2 sqrt(c) cos(theta) turns
    the inverse-square-root edge weight into a flat theta measure; the
    divided-difference diagonal is replaced by phi'(lambda)^2.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    a_minus, a_plus, a_m = support_edges_mp(c)
    theta = (np.arange(nodes) + 0.5) * np.pi / nodes
    lam = a_m + 2.0 * np.sqrt(c) * np.cos(theta)
    pv = phi(lam)
    if not np.all(np.isfinite(pv)):
        raise ValueError("phi not finite on the support")
    dlam = lam[:, None] - lam[None, :]
    dphi = pv[:, None] - pv[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (dphi / dlam) ** 2
    h = 1e-6 * max(1.0, a_plus - a_minus)
    deriv = (phi(lam + h) - phi(lam - h)) / (2.0 * h)
    np.fill_diagonal(q, deriv**2)
    kernel = 4.0 * c - np.outer(lam - a_m, lam - a_m)
    dth = np.pi / nodes
    first = float(np.sum(q * kernel)) * dth * dth / (2.0 * np.pi**2)
    line = float(np.sum(pv * (lam - a_m))) * dth
    second = (a + b) / (4.0 * c * np.pi**2) * line**2
    return first + second


def variance_bound_ratio(phi: TestFunction, delta: float, measured_variance: float) -> float:
    """measured_variance / ||phi||_{2+delta}^2 (uniform-boundedness check)."""
    nrm = sobolev_norm(phi, 2.0 + delta)
    if nrm == 0.0:
        raise ValueError("zero-norm test function")
    return measured_variance / nrm**2
