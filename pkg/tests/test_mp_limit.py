import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from rmtlab.ensemble import SigmaMeasure
from rmtlab.mp_limit import (
    ConvergenceError,
    EdgeProximityError,
    closed_form_f_mp,
    density,
    density_curve,
    f_derivatives,
    f_prime,
    limit_cdf,
    solve_f,
    solve_f_grid,
    support_edges_mp,
)

MP1 = SigmaMeasure.point_mass(1.0, 1.0)
TWO_ATOM = SigmaMeasure.parse("1:0.6,3:0.4", 0.7)


def mp_density(lam, c=1.0):
    am, ap = (1 - np.sqrt(c)) ** 2, (1 + np.sqrt(c)) ** 2
    lam = np.asarray(lam, dtype=float)
    out = np.zeros_like(lam)
    inside = (lam > am) & (lam < ap)
    out[inside] = np.sqrt((ap - lam[inside]) * (lam[inside] - am)) / (2 * np.pi * lam[inside])
    return out


class TestSolveF:
    def test_frozen_value_at_i(self):
        # root of z f^2 + (z - c + 1) f + 1 = 0 at z = i, c = 1, computed
        # independently with np.roots
        f = solve_f(1j, MP1).f
        assert f == pytest.approx(0.30024259022012045 + 0.6248105338438267j, abs=1e-10)

    @pytest.mark.parametrize("c", [0.25, 0.5, 1.0, 2.0])
    def test_matches_quadratic_root(self, c):
        rng = np.random.default_rng(17)
        sg = SigmaMeasure.point_mass(1.0, c)
        for _ in range(25):
            z = complex(rng.uniform(-3, 7), rng.choice([-1, 1]) * rng.uniform(0.05, 5))
            sol = solve_f(z, sg)
            assert abs(sol.f - closed_form_f_mp(z, c)) < 1e-10
            assert sol.residual <= 1e-12

    def test_herglotz_and_conjugate_symmetry(self):
        z = 0.8 + 0.4j
        f_up = solve_f(z, TWO_ATOM).f
        f_dn = solve_f(np.conj(z), TWO_ATOM).f
        assert f_up.imag > 0
        assert f_dn == pytest.approx(np.conj(f_up))

    def test_stieltjes_normalization(self):
        # t * Im f(it) -> 1 as t -> infinity (f transforms a probability measure)
        for t in (10.0, 100.0, 1000.0):
            assert t * solve_f(1j * t, TWO_ATOM).f.imag == pytest.approx(1.0, abs=2.0 / t)

    def test_rejects_real_z(self):
        with pytest.raises(ValueError):
            solve_f(1.0, MP1)

    @given(st.floats(-4, 8), st.floats(0.05, 5), st.sampled_from([1, -1]))
    @settings(max_examples=60, deadline=None)
    def test_residual_and_herglotz_everywhere(self, x, y, sign):
        z = complex(x, sign * y)
        sol = solve_f(z, TWO_ATOM)
        assert sol.residual <= 1e-12
        assert sol.f.imag * z.imag >= -1e-12

    def test_grid_matches_pointwise(self):
        z = np.linspace(-1, 5, 40) + 0.3j
        fg = solve_f_grid(z, TWO_ATOM)
        for zi, fi in zip(z[::7], fg[::7]):
            assert fi == pytest.approx(solve_f(zi, TWO_ATOM).f, abs=1e-10)


class TestDerivatives:
    @pytest.mark.parametrize("sigma", [MP1, TWO_ATOM], ids=["mp", "two-atom"])
    def test_finite_difference(self, sigma):
        z = 0.7 + 0.5j
        f = lambda zz: solve_f(zz, sigma, tol=1e-14).f
        d1, d2, d3 = f_derivatives(np.asarray(z), sigma, np.asarray(f(z)), order=3)
        h = 3e-3
        fd1 = (f(z + h) - f(z - h)) / (2 * h)
        fd2 = (f(z + h) - 2 * f(z) + f(z - h)) / h**2
        fd3 = (f(z + 2 * h) - 2 * f(z + h) + 2 * f(z - h) - f(z - 2 * h)) / (2 * h**3)
        assert abs(d1 - fd1) / abs(fd1) < 1e-5
        assert abs(d2 - fd2) / abs(fd2) < 1e-4
        assert abs(d3 - fd3) / abs(fd3) < 1e-3

    def test_f_prime_positive_imag_pairing(self):
        # f' equals the Stieltjes transform of the measure against
        # (lam - z)^-2; check against quadrature of the known density
        z = 1.5 + 0.8j
        fp = f_prime(z, MP1)
        val = quad(lambda l: mp_density(l) / (l - z) ** 2, 0, 4, complex_func=True)[0]
        assert fp == pytest.approx(val, rel=1e-6)

    def test_order_selection(self):
        z = np.asarray(1j)
        f = np.asarray(solve_f(1j, MP1).f)
        assert len(f_derivatives(z, MP1, f, order=1)) == 1
        assert len(f_derivatives(z, MP1, f, order=2)) == 2
        assert len(f_derivatives(z, MP1, f, order=3)) == 3


class TestClosedForm:
    def test_large_z_asymptotics(self):
        # f(z) ~ -1/z far from the support
        z = 100.0 + 5.0j
        assert closed_form_f_mp(z, 1.0) == pytest.approx(-1 / z, rel=0.05)

    def test_support_edges(self):
        am, ap, mid = support_edges_mp(0.25)
        assert (am, ap, mid) == (pytest.approx(0.25), pytest.approx(2.25), 1.25)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            closed_form_f_mp(1.0, 1.0)
        with pytest.raises(ValueError):
            support_edges_mp(-1.0)


class TestDensity:
    def test_matches_closed_form_inside_bulk(self):
        for lam in (0.5, 1.0, 2.0, 3.5):
            assert density(lam, MP1) == pytest.approx(mp_density(lam), rel=1e-3)

    def test_zero_outside_support(self):
        assert density(6.0, MP1) == 0.0

    def test_raises_near_edge(self):
        with pytest.raises(EdgeProximityError):
            density(1e-4, MP1)

    def test_bad_schedule(self):
        with pytest.raises(ValueError):
            density(1.0, MP1, eta_schedule=(0.01, 0.02))

    def test_curve_nonnegative_and_matches(self):
        lam = np.linspace(0.2, 5.0, 60)
        rho = density_curve(lam, MP1)
        assert rho.min() >= 0.0
        assert np.allclose(rho, mp_density(lam), atol=2e-3)

    def test_two_atom_ac_mass(self):
        # c = 0.7 < 1 leaves an atom of mass 0.3 at zero; the absolutely
        # continuous part away from it must carry the remaining 0.7
        hi = 3.0 * (1 + np.sqrt(0.7)) ** 2 + 1
        lam = np.linspace(0.05, hi, 4000)
        rho = density_curve(lam, TWO_ATOM)
        mass = np.trapezoid(rho, lam)
        assert mass == pytest.approx(0.7, abs=0.02)


class TestLimitCdf:
    def test_mp_cdf_sup_error(self):
        grid, cdf, atom = limit_cdf(MP1, 4.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.clip(grid, 1e-12, 4.0)
            exact = (np.pi + np.sqrt(x * (4 - x))
                     - 2 * np.arctan((2 - x) / np.sqrt(x * (4 - x)))) / (2 * np.pi)
        assert atom == 0.0
        assert np.max(np.abs(cdf - exact)) < 2e-3

    def test_atom_for_small_c(self):
        sg = SigmaMeasure.point_mass(1.0, 0.5)
        grid, cdf, atom = limit_cdf(sg, 3.5)
        assert atom == pytest.approx(0.5)
        assert cdf[0] == pytest.approx(0.5)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-6)

    def test_monotone(self):
        grid, cdf, _ = limit_cdf(TWO_ATOM, 3.0 * (1 + np.sqrt(0.7)) ** 2 + 1, npoints=600)
        assert np.all(np.diff(cdf) >= -1e-12)
