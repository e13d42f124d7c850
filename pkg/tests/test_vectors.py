import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from rmtlab.vectors import (
    MomentProfile,
    VectorLaw,
    estimate_moments,
    isotropy_scale_lp,
    moment_profile,
    quadratic_form_variance,
    sample_matrix,
    sample_vector,
)

ALL_LAWS = [
    "iid:gaussian",
    "iid:rademacher",
    "iid:uniform",
    "sphere",
    "lpball:1",
    "lpball:2",
    "lpball:4",
]


def law(spec):
    return VectorLaw.parse(spec)


class TestVectorLaw:
    @pytest.mark.parametrize("spec", ALL_LAWS)
    def test_parse_roundtrip(self, spec):
        assert law(spec).tag == spec

    @pytest.mark.parametrize("spec", ["iid:cauchy", "ball", "lpball:0", "lpball:-1", "lpball:x"])
    def test_parse_rejects(self, spec):
        with pytest.raises(ValueError):
            law(spec)

    def test_lpball_requires_finite_p(self):
        with pytest.raises(ValueError):
            VectorLaw("lpball", p=np.inf)


class TestSampling:
    def test_sphere_unit_norm(self):
        rng = np.random.default_rng(0)
        y = sample_matrix(law("sphere"), 3, 50, rng)
        assert np.allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-12)

    def test_rademacher_values(self):
        rng = np.random.default_rng(0)
        y = sample_matrix(law("iid:rademacher"), 8, 100, rng)
        assert set(np.unique(np.round(y * np.sqrt(8), 12))) <= {-1.0, 1.0}

    def test_uniform_range(self):
        rng = np.random.default_rng(0)
        y = sample_matrix(law("iid:uniform"), 4, 1000, rng)
        assert np.abs(y * 2).max() <= np.sqrt(3) + 1e-12

    @pytest.mark.parametrize("spec", ALL_LAWS)
    def test_isotropy_second_moment(self, spec):
        # E{y_j^2} = 1/n for every law, checked by a pooled MC average
        rng = np.random.default_rng(1)
        n = 16
        y = sample_matrix(law(spec), n, 40_000, rng)
        second = (y * y).mean(axis=0)
        assert np.allclose(second, 1.0 / n, atol=2e-3)

    @pytest.mark.parametrize("spec", ALL_LAWS)
    def test_mean_zero(self, spec):
        rng = np.random.default_rng(2)
        y = sample_matrix(law(spec), 8, 40_000, rng)
        assert np.abs(y.mean(axis=0)).max() < 5e-3

    def test_lpball_inside_scaled_ball(self):
        # before the isotropy scaling, the vector lies in the unit l_p ball
        p, n = 1.5, 6
        rng = np.random.default_rng(3)
        y = sample_matrix(law(f"lpball:{p}"), n, 2000, rng)
        s = isotropy_scale_lp(n, p)
        radii = np.sum(np.abs(y / s) ** p, axis=1)
        assert radii.max() <= 1.0 + 1e-12

    def test_sample_vector_shape(self):
        rng = np.random.default_rng(0)
        assert sample_vector(law("iid:gaussian"), 7, rng).shape == (7,)

    def test_reproducible(self):
        a = sample_matrix(law("lpball:2"), 5, 4, np.random.default_rng(9))
        b = sample_matrix(law("lpball:2"), 5, 4, np.random.default_rng(9))
        assert np.array_equal(a, b)

    @given(st.integers(1, 40), st.floats(0.5, 8.0))
    @settings(max_examples=40, deadline=None)
    def test_isotropy_scale_positive_finite(self, n, p):
        s = isotropy_scale_lp(n, p)
        assert np.isfinite(s) and s > 0


class TestMomentProfiles:
    def test_iid_profiles(self):
        for base, m4 in [("gaussian", 3.0), ("rademacher", 1.0), ("uniform", 9.0 / 5.0)]:
            prof = moment_profile(law(f"iid:{base}"))
            n = 10
            assert prof.a22_exact(n) == pytest.approx(1.0 / n**2)
            assert prof.kappa4_exact(n) == pytest.approx((m4 - 3.0) / n**2)
            assert prof.a == 0.0
            assert prof.b == pytest.approx(m4 - 3.0)

    def test_sphere_profile(self):
        prof = moment_profile(law("sphere"))
        n = 12
        assert prof.a22_exact(n) == pytest.approx(1.0 / (n * (n + 2)))
        assert prof.kappa4_exact(n) == 0.0
        assert (prof.a, prof.b) == (-2.0, 0.0)

    def test_lpball_p2_matches_euclidean_ball(self):
        # uniform on the Euclidean ball: E{x_j^2 x_k^2} = 1/((n+2)(n+4))
        # before scaling; the isotropic version multiplies by ((n+2)/n)^2
        prof = moment_profile(law("lpball:2"))
        for n in (2, 5, 20):
            raw = 1.0 / ((n + 2) * (n + 4))
            assert prof.a22_exact(n) == pytest.approx(raw * ((n + 2) / n) ** 2, rel=1e-12)

    def test_lpball_p1_n2_hand_integral(self):
        # E{x_1^2 x_2^2} over the unit cross-polytope in the plane is 1/90;
        # isotropy scale squared is n(n+1)(n+2)/(2*3) / ... reduces to
        # a22 = (1/90) * (isotropy_scale^2 * ... ) -- checked numerically
        # against the direct 2-d integral value 0.1 for the scaled vector
        prof = moment_profile(law("lpball:1"))
        s2 = isotropy_scale_lp(2, 1.0) ** 2
        assert prof.a22_exact(2) == pytest.approx(s2 * s2 / 90.0, rel=1e-12)

    def test_lpball_second_order_coefficients(self):
        for p in (1.0, 2.0, 4.0):
            prof = moment_profile(law(f"lpball:{p}"))
            assert prof.a == pytest.approx(-4.0 / p)
            b_exact = gamma(1 / p) * gamma(5 / p) / gamma(3 / p) ** 2 - 3.0
            assert prof.b == pytest.approx(b_exact, rel=1e-12)

    @pytest.mark.parametrize("spec", ["sphere", "lpball:1", "lpball:2", "lpball:4"])
    def test_ab_are_limits_of_exact_moments(self, spec):
        # a = lim n^3 (a22 - 1/n^2), b = lim n^2 kappa4
        prof = moment_profile(law(spec))
        n = 40_000
        assert n**3 * (prof.a22_exact(n) - 1.0 / n**2) == pytest.approx(prof.a, abs=2e-3)
        assert n**2 * prof.kappa4_exact(n) == pytest.approx(prof.b, abs=2e-3)


class TestEstimateMoments:
    @pytest.mark.parametrize("spec", ["iid:gaussian", "sphere", "lpball:1"])
    def test_estimates_match_exact(self, spec):
        rng = np.random.default_rng(11)
        n = 12
        prof = moment_profile(law(spec))
        est = estimate_moments(law(spec), n, 30_000, rng)
        assert abs(est.a22 - prof.a22_exact(n)) < 4 * est.a22_se
        assert abs(est.kappa4 - prof.kappa4_exact(n)) < 4 * est.kappa4_se

    def test_rejects_tiny_R(self):
        with pytest.raises(ValueError):
            estimate_moments(law("sphere"), 4, 1, np.random.default_rng(0))


class TestQuadraticFormVariance:
    def test_gaussian_identity_matrix(self):
        n = 16
        prof = moment_profile(law("iid:gaussian"))
        assert quadratic_form_variance(np.eye(n), prof, n) == pytest.approx(2.0 / n)

    def test_sphere_identity_is_zero(self):
        # (A y, y) = |y|^2 = 1 exactly on the sphere
        n = 16
        prof = moment_profile(law("sphere"))
        assert quadratic_form_variance(np.eye(n), prof, n) == pytest.approx(0.0, abs=1e-15)

    def test_montecarlo_agreement(self):
        n = 24
        rng = np.random.default_rng(7)
        A = rng.standard_normal((n, n))
        A = 0.5 * (A + A.T)
        for spec in ("iid:rademacher", "sphere"):
            prof = moment_profile(law(spec))
            exact = quadratic_form_variance(A, prof, n)
            y = sample_matrix(law(spec), n, 40_000, rng)
            q = np.einsum("ri,ij,rj->r", y, A, y)
            mc = q.var(ddof=1)
            se = np.sqrt(np.var((q - q.mean()) ** 2, ddof=1) / len(q))
            assert abs(mc - exact) < 4 * se + 1e-12

    def test_rejects_asymmetric(self):
        prof = moment_profile(law("iid:gaussian"))
        with pytest.raises(ValueError):
            quadratic_form_variance(np.array([[0.0, 1.0], [0.0, 0.0]]), prof, 2)
