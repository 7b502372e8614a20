"""Distance laws, kernels, incomplete gamma, and the quadrature engine."""
import math

import numpy as np
import pytest

from iotcov.distributions import (
    DEFAULT_QUADRATURE,
    QuadratureError,
    QuadratureSpec,
    association_probabilities,
    cluster_center_distance_law,
    integrate,
    nearest_gw_distance_law,
    nu,
    psi,
    rho,
    serving_distance_cdf,
    serving_distance_pdf,
    theta,
    upper_incomplete_gamma,
)
from iotcov.model import ConfigError, MaternCluster, ThomasCluster

LAM = 0.01


def _pdf_mass(law, hi=None):
    hi = law.support[1] if hi is None else hi
    val, _ = integrate(lambda r: float(law.pdf(r)), law.support[0], hi)
    return val


class TestDistanceLaws:
    def test_nearest_gw_ccdf_at_origin(self):
        assert nearest_gw_distance_law(LAM).ccdf(0.0) == 1.0

    def test_nearest_gw_normalization(self):
        assert _pdf_mass(nearest_gw_distance_law(LAM)) == pytest.approx(1.0, abs=1e-8)

    def test_nearest_gw_scale_point(self):
        law = nearest_gw_distance_law(1 / math.pi)
        assert law.ccdf(1.0) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_nearest_gw_rejects_bad_density(self):
        with pytest.raises(ConfigError):
            nearest_gw_distance_law(0.0)

    def test_matern_support_endpoint(self):
        law = cluster_center_distance_law(MaternCluster(r_c=4.0))
        assert law.pdf(4.0) == pytest.approx(2 / 4.0)
        assert law.ccdf(4.0) == 0.0
        assert law.pdf(4.0001) == 0.0

    def test_thomas_median(self):
        law = cluster_center_distance_law(ThomasCluster(sigma_c=1.0))
        assert law.ccdf(math.sqrt(2 * math.log(2))) == pytest.approx(0.5, rel=1e-12)

    @pytest.mark.parametrize("model", [ThomasCluster(3.0), MaternCluster(7.0)])
    def test_center_law_normalization(self, model):
        assert _pdf_mass(cluster_center_distance_law(model)) == pytest.approx(1.0, abs=1e-8)

    def test_law_shape_invariants(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            models = [ThomasCluster(rng.uniform(0.5, 30)),
                      MaternCluster(rng.uniform(0.5, 60))]
            for model in models:
                law = cluster_center_distance_law(model)
                hi = law.support[1] if math.isfinite(law.support[1]) else 200.0
                grid = np.linspace(law.support[0], hi, 64)
                pdf = np.array([float(law.pdf(r)) for r in grid])
                ccdf = np.array([float(law.ccdf(r)) for r in grid])
                assert (pdf >= 0).all()
                assert law.ccdf(law.support[0]) == pytest.approx(1.0)
                assert (np.diff(ccdf) <= 1e-12).all()
                assert _pdf_mass(law) == pytest.approx(1.0, abs=1e-7)


class TestAssociationProbabilities:
    def test_thomas_symmetry_point(self):
        sigma = math.sqrt(1 / (2 * math.pi * LAM))
        a0, a1 = association_probabilities(ThomasCluster(sigma), LAM)
        assert a1 == pytest.approx(0.5, rel=1e-12)
        assert a0 == pytest.approx(0.5, rel=1e-12)

    def test_matern_unit_point(self):
        rc = math.sqrt(1 / (math.pi * LAM))
        _, a1 = association_probabilities(MaternCluster(rc), LAM)
        assert a1 == pytest.approx(math.exp(-1), rel=1e-10)

    def test_matern_large_disc_limit(self):
        _, a1 = association_probabilities(MaternCluster(1e4), LAM)
        assert a1 == pytest.approx(1.0, abs=1e-6)

    def test_sum_to_one(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            lam = rng.uniform(1e-4, 0.1)
            for model in (ThomasCluster(rng.uniform(0.5, 50)),
                          MaternCluster(rng.uniform(0.5, 100))):
                a0, a1 = association_probabilities(model, lam)
                assert a0 + a1 == pytest.approx(1.0, abs=1e-12)

    def test_closed_form_matches_defining_integral(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            lam = rng.uniform(5e-4, 0.05)
            model = ThomasCluster(rng.uniform(1, 20)) if rng.random() < 0.5 \
                else MaternCluster(rng.uniform(1, 40))
            r0 = cluster_center_distance_law(model)
            r1 = nearest_gw_distance_law(lam)
            hi = 40 / math.sqrt(math.pi * lam)
            val, _ = integrate(lambda r: float(r0.ccdf(r)) * float(r1.pdf(r)), 0.0, hi)
            _, a1 = association_probabilities(model, lam)
            assert val == pytest.approx(a1, abs=1e-8)


class TestServingDistance:
    def test_matern_tier1_beyond_disc(self):
        assert serving_distance_pdf(1, MaternCluster(5.0), LAM, 6.0) == 0.0

    @pytest.mark.parametrize("tier", [0, 1])
    @pytest.mark.parametrize("model", [ThomasCluster(5.0), MaternCluster(12.0)])
    def test_normalization(self, tier, model):
        hi = 40 / math.sqrt(math.pi * LAM)
        if isinstance(model, MaternCluster):
            hi = min(hi, model.r_c) if tier == 1 else hi
        val, _ = integrate(lambda w: float(serving_distance_pdf(tier, model, LAM, w)),
                           0.0, hi)
        assert val == pytest.approx(1.0, abs=1e-7)

    def test_thomas_tier0_pointwise(self):
        # independent evaluation of the defining product of factors
        model = ThomasCluster(5.0)
        a0, _ = association_probabilities(model, LAM)
        for w in (1.0, 5.0, 10.0):
            expected = (1 / a0) * math.exp(-math.pi * LAM * w * w) \
                * (w / 25.0) * math.exp(-w * w / 50.0)
            assert serving_distance_pdf(0, model, LAM, w) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("tier", [0, 1])
    @pytest.mark.parametrize("model", [ThomasCluster(4.0), MaternCluster(9.0)])
    def test_cdf_matches_pdf_integral(self, tier, model):
        for w in (2.0, 6.0, 15.0):
            val, _ = integrate(
                lambda t: float(serving_distance_pdf(tier, model, LAM, t)), 0.0, w)
            assert serving_distance_cdf(tier, model, LAM, w) == pytest.approx(val, abs=1e-8)


class TestPsi:
    def test_thomas_general_matches_closed_form(self):
        model = ThomasCluster(5.0)
        for w in (0.5, 2.0, 5.0, 12.0):
            general = psi(model, LAM, 4.0, w, variant="general")
            closed = psi(model, LAM, 4.0, w, variant="closed_form")
            assert closed == pytest.approx(general, rel=1e-8)

    def test_matern_alpha4_value(self):
        # (pi*lam + 1/r_c^2) / w1^2 at w1=1, r_c=10
        val = psi(MaternCluster(10.0), LAM, 4.0, 1.0)
        assert val == pytest.approx(math.pi * LAM + 0.01, rel=1e-12)
        assert val == pytest.approx(0.04141593, abs=5e-9)

    @pytest.mark.parametrize("model,alpha", [
        (ThomasCluster(2.0), 3.0), (ThomasCluster(8.0), 4.0),
        (MaternCluster(6.0), 3.5), (MaternCluster(15.0), 4.0),
    ])
    def test_variants_agree(self, model, alpha):
        hi = model.sigma_c * 3 if isinstance(model, ThomasCluster) else model.r_c * 0.999
        for w in np.linspace(0.2, hi, 7):
            general = psi(model, LAM, alpha, float(w), variant="general")
            closed = psi(model, LAM, alpha, float(w), variant="closed_form")
            assert closed == pytest.approx(general, rel=1e-8)

    def test_wide_cluster_reduces_to_ppp_field(self):
        val = psi(ThomasCluster(1e6), LAM, 4.0, 2.0)
        assert val == pytest.approx(2 * math.pi * LAM / 2 * 2.0 ** -2, rel=1e-6)

    def test_matern_requires_w1_inside_disc(self):
        with pytest.raises(ConfigError, match="r_c"):
            psi(MaternCluster(5.0), LAM, 4.0, 5.0)

    def test_large_argument_stays_finite(self):
        # exp(w^2 / 2 sigma^2) alone would overflow double precision here
        val = psi(ThomasCluster(1.0), LAM, 4.0, 60.0)
        assert math.isfinite(val)
        assert val > 0

    def test_scaled_gamma_asymptotic_branch(self):
        # beyond the exp cutoff the Thomas kernel switches to the asymptotic
        # series; check it against an arbitrary-precision oracle
        import mpmath
        from iotcov.distributions import _exp_scaled_upper_gamma
        mpmath.mp.dps = 40
        for s in (-1.0, -1.5, -0.5):
            for x in (650.0, 2000.0):
                oracle = float(mpmath.exp(x) * mpmath.gammainc(s, x))
                assert _exp_scaled_upper_gamma(s, x) == pytest.approx(oracle, rel=1e-10)


class TestTheta:
    def test_direct_value(self):
        assert theta(LAM, 4.0, 1.0) == pytest.approx(math.pi * LAM, rel=1e-12)

    def test_power_law_scaling(self):
        for alpha in (3.0, 4.0, 5.5):
            ratio = theta(LAM, alpha, 2.0) / theta(LAM, alpha, 1.0)
            assert ratio == pytest.approx(2 ** (2 - alpha), rel=1e-12)

    def test_singular_at_origin(self):
        with pytest.raises(ConfigError):
            theta(LAM, 4.0, 0.0)

    def test_campbell_mean_oracle(self):
        # simulate the annulus field [w, r_max] directly and compare means
        w, r_max, alpha, n = 5.0, 200.0, 4.0, 120_000
        rng = np.random.default_rng(2024)
        mu = LAM * math.pi * (r_max ** 2 - w ** 2)
        counts = rng.poisson(mu, n)
        total = int(counts.sum())
        d2 = w ** 2 + (r_max ** 2 - w ** 2) * rng.random(total)
        contrib = rng.standard_exponential(total) * d2 ** (-alpha / 2)
        sums = np.zeros(n)
        np.add.at(sums, np.repeat(np.arange(n), counts), contrib)
        sums += theta(LAM, alpha, r_max)  # analytic mean beyond r_max
        se = sums.std(ddof=1) / math.sqrt(n)
        assert abs(sums.mean() - theta(LAM, alpha, w)) < 3 * se


class TestInterferenceKernels:
    def test_rho_reference_point(self):
        assert rho(1.0, 4.0) == pytest.approx(math.pi / 8, abs=1e-9)

    def test_rho_vanishes_with_threshold(self):
        assert rho(1e-12, 4.0) < 1e-6

    def test_rho_increasing_in_beta(self):
        vals = [rho(b, 4.0) for b in (0.1, 1.0, 10.0)]
        assert vals[0] < vals[1] < vals[2]

    @pytest.mark.parametrize("beta", [0.25, 1.0, 4.0])
    def test_rho_alpha4_closed_form(self, beta):
        closed = math.sqrt(beta) / 2 * math.atan(math.sqrt(beta))
        assert rho(beta, 4.0) == pytest.approx(closed, abs=1e-9)

    def test_nu_zero_radius(self):
        assert nu(LAM, 1.0, 4.0, 0.0) == 0.0

    def test_nu_reference_point(self):
        expected = math.pi * LAM * math.atan(1.0)
        assert nu(LAM, 1.0, 4.0, 1.0) == pytest.approx(expected, abs=1e-9)
        assert nu(LAM, 1.0, 4.0, 1.0) == pytest.approx(0.0246740, abs=5e-8)

    def test_nu_quadratic_scaling(self):
        base = nu(LAM, 2.0, 4.0, 1.0)
        for r in (0.5, 2.0, 7.0):
            assert nu(LAM, 2.0, 4.0, r) == pytest.approx(r * r * base, rel=1e-9)

    @pytest.mark.parametrize("beta", [0.25, 1.0, 4.0])
    def test_nu_alpha4_closed_form(self, beta):
        closed = math.pi * LAM * math.sqrt(beta) * math.atan(math.sqrt(beta))
        assert nu(LAM, beta, 4.0, 1.0) == pytest.approx(closed, abs=1e-9)


class TestUpperIncompleteGamma:
    def test_exponential_identity(self):
        assert upper_incomplete_gamma(1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_half_parameter_at_origin(self):
        assert upper_incomplete_gamma(0.5, 1e-12) == pytest.approx(math.sqrt(math.pi), abs=1e-5)

    def test_negative_integer_vs_quadrature_oracle(self):
        oracle, _ = integrate(lambda t: t ** -2 * math.exp(-t), 1.0, math.inf)
        val = upper_incomplete_gamma(-1.0, 1.0)
        assert val == pytest.approx(oracle, rel=1e-9)
        assert val == pytest.approx(0.1484955, abs=5e-8)

    def test_negative_fraction_vs_quadrature_oracle(self):
        oracle, _ = integrate(lambda t: t ** -2.5 * math.exp(-t), 0.5, math.inf)
        assert upper_incomplete_gamma(-1.5, 0.5) == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("s", [-1.5, -1.0, -0.5, 0.5])
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_recurrence(self, s, x):
        lhs = s * upper_incomplete_gamma(s, x) + x ** s * math.exp(-x)
        rhs = upper_incomplete_gamma(s + 1, x)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_divergent_domain_rejected(self):
        with pytest.raises(ConfigError):
            upper_incomplete_gamma(-1.0, 0.0)


class TestIntegrate:
    def test_unit_exponential_mass(self):
        val, err = integrate(math.exp.__call__ if False else (lambda x: math.exp(-x)),
                             0.0, math.inf)
        assert val == pytest.approx(1.0, abs=1e-9)
        assert err <= max(DEFAULT_QUADRATURE.abs_tol,
                          DEFAULT_QUADRATURE.rel_tol * abs(val))

    def test_zero_integrand(self):
        val, _ = integrate(lambda x: 0.0, 0.0, 1.0)
        assert val == 0.0

    def test_nearest_distance_normalization(self):
        val, _ = integrate(
            lambda r: 2 * math.pi * LAM * r * math.exp(-math.pi * LAM * r * r),
            0.0, math.inf)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_nonconvergence_carries_best_estimate(self):
        spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=1)
        with pytest.raises(QuadratureError) as exc:
            integrate(lambda x: math.sin(10 * x) ** 2, 0.0, 3.0, spec)
        assert math.isfinite(exc.value.best_estimate)
        assert exc.value.error_estimate > 0

    def test_spec_invariants(self):
        with pytest.raises(ConfigError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(ConfigError):
            QuadratureSpec(max_subdivisions=0)
