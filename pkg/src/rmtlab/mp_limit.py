"""Limiting spectral law: the self-consistent equation for the Stieltjes
transform, its derivatives, and density reconstruction.

The limit Stieltjes transform f solves

    z f(z) = c - 1 - c * sum_i w_i / (1 + tau_i f(z)),    Im z != 0,

in the Herglotz class Im f(z) Im z >= 0.  The density of the limiting
measure is pi^-1 lim_{eta -> 0} Im f(lambda + i eta).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import SigmaMeasure

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Fixed-point/Newton iteration failed to reach the residual target."""


class EdgeProximityError(RuntimeError):
    """Evaluation too close to a spectral edge or atom to be trusted."""


@dataclass(frozen=True)
class MpSolution:
    f: complex
    residual: float
    iterations: int


def _residual(f: complex, z: complex, sigma: SigmaMeasure) -> float:
    t, w, c = sigma.taus, sigma.weights, sigma.c
    return abs(z * f - (c - 1.0) + c * np.sum(w / (1.0 + t * f)))


def _iterate(z: complex, sigma: SigmaMeasure, f: complex, tol: float,
             max_iter: int) -> tuple[complex, float, int]:
    """Damped fixed point on f = 1/(c sum w tau/(1 + tau f) - z) with
    Newton polish; returns (f, residual, iterations) without raising."""
    t, w, c = sigma.taus, sigma.weights, sigma.c
    res = _residual(f, z, sigma)
    theta = 1.0
    it = 0
    while res > tol and it < max_iter:
        it += 1
        target = 1.0 / (c * np.sum(w * t / (1.0 + t * f)) - z)
        cand = (1.0 - theta) * f + theta * target
        res_cand = _residual(cand, z, sigma)
        if res < 1e-4:
            # Newton polish on g(f) = z f - (c-1) + c sum w/(1 + tau f)
            g = z * f - (c - 1.0) + c * np.sum(w / (1.0 + t * f))
            gp = z - c * np.sum(w * t / (1.0 + t * f) ** 2)
            if gp != 0:
                newton = f - g / gp
                res_newton = _residual(newton, z, sigma)
                if res_newton < res_cand:
                    cand, res_cand = newton, res_newton
        if res_cand <= res:
            f, res = cand, res_cand
            theta = min(1.0, theta * 1.5)
        else:
            theta *= 0.5
            if theta < 1e-12:
                break  # stagnated; caller falls back to continuation
    return f, res, it


def solve_f(
    z: complex,
    sigma: SigmaMeasure,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    f0: complex | None = None,
) -> MpSolution:
    """Solve the self-consistent equation at one point z.

    Uses the algebraically equivalent stable form

        f = 1 / (c * sum_i w_i tau_i / (1 + tau_i f) - z),

    iterated with adaptive damping from f0 = -1/z.  If the direct iteration
    stalls (which happens over the bulk at small |Im z|), the solver
    restarts high in the half-plane, where the map is a contraction, and
    continues the solution down to the requested z in geometric steps.  The
    returned root satisfies the Herglotz constraint Im f * Im z >= 0.
    """
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be non-real")
    f_init = complex(f0) if f0 is not None else -1.0 / z
    f, res, it = _iterate(z, sigma, f_init, tol, max_iter)
    if res > tol:
        # continuation in Im z from a comfortably dissipative height
        sign = 1.0 if z.imag > 0 else -1.0
        eta = max(abs(z.imag), 2.0 * (1.0 + float(sigma.taus.max())))
        f = -1.0 / complex(z.real, sign * eta)
        while True:
            zc = complex(z.real, sign * eta)
            f, res, steps = _iterate(zc, sigma, f, tol, max_iter)
            it += steps
            if res > tol:
                raise ConvergenceError(
                    f"no convergence at z={z}: residual {res:.3e} after {it} iterations"
                )
            if eta == abs(z.imag):
                break
            eta = max(abs(z.imag), 0.5 * eta)
    if f.imag * z.imag < -1e-12 * max(1.0, abs(f)):
        raise ConvergenceError(f"non-Herglotz root at z={z}: f={f}")
    return MpSolution(f=f, residual=res, iterations=it)


def solve_f_grid(z_values: np.ndarray, sigma: SigmaMeasure, tol: float = 1e-12) -> np.ndarray:
    """Solve along an array of z points with warm-started continuation."""
    z_values = np.asarray(z_values, dtype=complex)
    out = np.empty(z_values.shape, dtype=complex)
    flat = z_values.ravel()
    res = out.ravel()
    guess = None
    for i, z in enumerate(flat):
        sol = solve_f(z, sigma, tol=tol, f0=guess)
        res[i] = sol.f
        guess = sol.f
    return out


def _inv_powers(f: np.ndarray, sigma: SigmaMeasure):
    t, w = sigma.taus, sigma.weights
    base = 1.0 + np.multiply.outer(f, t)  # (..., atoms)
    j2 = np.sum(w * t / base**2, axis=-1)
    j3 = np.sum(w * t**2 / base**3, axis=-1)
    j4 = np.sum(w * t**3 / base**4, axis=-1)
    return j2, j3, j4


def f_derivatives(z: np.ndarray, sigma: SigmaMeasure, f: np.ndarray, order: int = 1):
    """Derivatives of f by implicit differentiation of the fixed equation.

    Returns (f',), (f', f'') or (f', f'', f''') depending on order.
    """
    z = np.asarray(z, dtype=complex)
    f = np.asarray(f, dtype=complex)
    c = sigma.c
    j2, j3, j4 = _inv_powers(f, sigma)
    denom = c * j2 - z
    if np.any(np.abs(denom) < 1e-14):
        raise EdgeProximityError("implicit-derivative denominator vanished (near edge)")
    f1 = f / denom
    if order == 1:
        return (f1,)
    f2 = (2.0 * f1 + 2.0 * c * j3 * f1**2) / denom
    if order == 2:
        return (f1, f2)
    f3 = (3.0 * f2 + 6.0 * c * j3 * f1 * f2 - 6.0 * c * j4 * f1**3) / denom
    return (f1, f2, f3)


def f_prime(z: complex, sigma: SigmaMeasure) -> complex:
    """f'(z) = f / (c sum w tau/(1 + tau f)^2 - z)."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be non-real")
    f = solve_f(z, sigma).f
    return complex(f_derivatives(np.asarray(z), sigma, np.asarray(f), order=1)[0])


def closed_form_f_mp(z: complex, c: float) -> complex:
    """Herglotz root of z f^2 + (z - c + 1) f + 1 = 0 (point mass at 1)."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be non-real")
    if c < 0:
        raise ValueError("c must be >= 0")
    b = z - c + 1.0
    disc = np.sqrt(b * b - 4.0 * z)
    for root in ((-b + disc) / (2.0 * z), (-b - disc) / (2.0 * z)):
        if root.imag * z.imag >= -1e-14 * max(1.0, abs(root)):
            return complex(root)
    raise ConvergenceError(f"no Herglotz root at z={z}")  # pragma: no cover


def support_edges_mp(c: float):
    """Bulk edges and center for the point mass at 1:
    ((1 - sqrt(c))^2, (1 + sqrt(c))^2, 1 + c)."""
    if c < 0:
        raise ValueError("c must be >= 0")
    s = np.sqrt(c)
    return ((1.0 - s) ** 2, (1.0 + s) ** 2, 1.0 + c)


_DEFAULT_ETAS = (0.08, 0.04, 0.02, 0.01)


def _extrapolate_to_zero(etas: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Lagrange (polynomial) extrapolation of values(eta) to eta = 0 along
    the last... first axis is the eta index."""
    etas = np.asarray(etas, dtype=float)
    k = len(etas)
    out = np.zeros_like(values[0])
    for i in range(k):
        li = 1.0
        for j in range(k):
            if j != i:
                li *= (0.0 - etas[j]) / (etas[i] - etas[j])
        out = out + li * values[i]
    return out


def density(
    lam: float,
    sigma: SigmaMeasure,
    eta_schedule: Sequence[float] = _DEFAULT_ETAS,
    floor: float = 0.05,
) -> float:
    """Limit density at lambda via pi^-1 Im f(lambda + i eta), polynomial
    extrapolation to eta = 0 over a decreasing schedule, clamped at 0.

    Raises EdgeProximityError when the two finest levels disagree by more
    than 10% (relative to max(value, floor)), signalling an edge or atom.
    """
    etas = np.asarray(eta_schedule, dtype=float)
    if np.any(np.diff(etas) >= 0):
        raise ValueError("eta schedule must be strictly decreasing")
    if etas[-1] < 1e-6:
        raise ValueError("final eta must be >= 1e-6")
    vals = np.array([solve_f(lam + 1j * e, sigma).f.imag / np.pi for e in etas])
    if abs(vals[-1] - vals[-2]) > 0.10 * max(abs(vals[-1]), floor):
        raise EdgeProximityError(
            f"density levels disagree at lambda={lam}: {vals[-2]:.4g} vs {vals[-1]:.4g}"
        )
    rho = float(_extrapolate_to_zero(etas, vals))
    if rho < 0:
        if rho < -1e-3:
            log.warning("density clamped at lambda=%g (raw %.3e)", lam, rho)
        rho = 0.0
    return rho


def density_curve(
    lams: np.ndarray,
    sigma: SigmaMeasure,
    eta_schedule: Sequence[float] = _DEFAULT_ETAS,
) -> np.ndarray:
    """Vectorized, non-strict density on a grid (no edge-disagreement check;
    negative extrapolations clamped at 0)."""
    lams = np.asarray(lams, dtype=float)
    etas = np.asarray(eta_schedule, dtype=float)
    vals = np.empty((len(etas), len(lams)))
    for k, e in enumerate(etas):
        f = solve_f_grid(lams + 1j * e, sigma)
        vals[k] = f.imag / np.pi
    rho = _extrapolate_to_zero(etas, vals)
    return np.maximum(rho, 0.0)


def limit_cdf(sigma: SigmaMeasure, lam_max: float, npoints: int = 1200,
              eta_schedule: Sequence[float] = (0.02, 0.01, 0.005, 0.0025)):
    """Numerically integrated CDF of the limit measure on [0, lam_max].

    Integrates the density in the variable u = sqrt(lambda) so the
    inverse-square-root hard edge is resolved.  The atom at 0 has the exact
    mass max(0, 1 - c sigma({tau > 0})) (rank deficit of the sum of rank-one
    terms); the absolutely continuous part is renormalized to the remaining
    mass, which removes the small quadrature deficit near the hard edge.
    Returns (grid, cdf, atom_mass).
    """
    etas = np.asarray(eta_schedule, dtype=float)
    u = np.linspace(0.0, np.sqrt(lam_max), npoints)
    lam = u * u
    # the eta extrapolation is unreliable for lambda below the coarsest
    # smoothing scale; g(u) = 2 u rho(u^2) is smooth across a hard edge, so
    # extrapolate it from the reliable region instead
    lam0 = 2.0 * etas.max()
    good = lam >= lam0
    if not np.any(good):
        raise ValueError("lam_max too small for the eta schedule")
    g = np.zeros(npoints)
    rho = density_curve(lam[good], sigma, eta_schedule)
    g[good] = rho * 2.0 * u[good]
    i0 = int(np.argmax(good))
    if i0 > 0:
        win = slice(i0, min(i0 + 40, npoints))
        coef = np.polynomial.polynomial.polyfit(u[win], g[win], deg=2)
        g[:i0] = np.maximum(np.polynomial.polynomial.polyval(u[:i0], coef), 0.0)
    cdf_ac = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(u))])
    total = cdf_ac[-1]
    atom = max(0.0, 1.0 - sigma.c * float(sigma.weights[sigma.taus > 0].sum()))
    if total > 0:
        cdf_ac = cdf_ac * ((1.0 - atom) / total)
    cdf = np.minimum(atom + cdf_ac, 1.0)
    return lam, cdf, atom
