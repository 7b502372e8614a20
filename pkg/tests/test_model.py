"""Config validation and the scalar model quantities."""
import math

import numpy as np
import pytest

from conftest import make_config
from iotcov.model import (
    ConfigError,
    FixedEnergyThreshold,
    MaternCluster,
    RateLinkedEnergyThreshold,
    ThomasCluster,
    c_of_tau,
    e_rec_at,
    overall_mixture,
    overall_mixture_from_ratios,
    prob_gw_at_center,
    validate_config,
)


class TestValidateConfig:
    def test_reference_config_is_valid(self, thomas_cfg):
        assert validate_config(thomas_cfg) is thomas_cfg
        assert thomas_cfg.alpha == 4.0
        assert thomas_cfg.lambda_total == thomas_cfg.lambda_bc + thomas_cfg.lambda_b

    def test_alpha_boundary_rejected(self):
        with pytest.raises(ConfigError, match="alpha must exceed 2"):
            make_config(ThomasCluster(5.0), alpha=2.0)

    def test_gw_centers_cannot_outnumber_clusters(self):
        with pytest.raises(ConfigError, match="lambda_bc"):
            make_config(ThomasCluster(5.0), lambda_bc=0.02, lambda_b=0.0,
                        lambda_total=0.02, lambda_c=0.01)

    def test_density_split_must_add_up(self):
        with pytest.raises(ConfigError, match="lambda_total"):
            make_config(ThomasCluster(5.0), lambda_total=0.02)

    @pytest.mark.parametrize("field,value", [
        ("eta", 1.5), ("eta", -0.1), ("p_t", 0.0), ("slot_t", 0.0),
        ("noise", -1e-12), ("beta", 0.0), ("n1", 0.0), ("n2", -1.0),
    ])
    def test_scalar_invariants(self, field, value):
        with pytest.raises(ConfigError, match=field.split("_")[0]):
            make_config(ThomasCluster(5.0), **{field: value})

    def test_cluster_scale_must_be_positive(self):
        with pytest.raises(ConfigError, match="sigma_c"):
            make_config(ThomasCluster(0.0))
        with pytest.raises(ConfigError, match="r_c"):
            make_config(MaternCluster(-1.0))

    def test_fixed_threshold_must_be_nonnegative(self):
        with pytest.raises(ConfigError, match="e_rec"):
            make_config(ThomasCluster(5.0), e_rec=FixedEnergyThreshold(-1.0))


class TestEnergyThreshold:
    def test_fixed_is_constant_in_tau(self):
        cfg = make_config(ThomasCluster(5.0), e_rec=FixedEnergyThreshold(0.5))
        for tau in (0.1, 0.5, 0.9):
            assert e_rec_at(cfg, tau) == 0.5

    def test_rate_linked_formula(self, thomas_cfg):
        # (1 - 0.5) * 1 * (1e-4 * 1 + 5e-5) = 7.5e-5
        assert e_rec_at(thomas_cfg, 0.5) == pytest.approx(7.5e-5, rel=1e-12)

    def test_rate_linked_vanishes_at_full_charging(self, thomas_cfg):
        assert e_rec_at(thomas_cfg, 1 - 1e-9) == pytest.approx(0.0, abs=1e-12)

    def test_rate_default_tracks_sinr_target(self):
        cfg = make_config(ThomasCluster(5.0), beta=3.0,
                          e_rec=RateLinkedEnergyThreshold(a=1e-4, b=0.0))
        assert e_rec_at(cfg, 0.5) == pytest.approx(0.5 * 1e-4 * math.log2(4.0))

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.2, 1.3])
    def test_tau_domain(self, thomas_cfg, tau):
        with pytest.raises(ConfigError, match="tau"):
            e_rec_at(thomas_cfg, tau)


class TestCOfTau:
    def test_direct_arithmetic(self):
        cfg = make_config(ThomasCluster(5.0), e_rec=FixedEnergyThreshold(7.5e-5))
        assert c_of_tau(cfg, 0.5) == pytest.approx(3e-4, rel=1e-12)

    def test_zero_threshold(self):
        cfg = make_config(ThomasCluster(5.0), e_rec=FixedEnergyThreshold(0.0))
        for tau in (0.05, 0.5, 0.95):
            assert c_of_tau(cfg, tau) == 0.0

    def test_no_harvesting_rejected(self, thomas_cfg):
        cfg = make_config(ThomasCluster(5.0), eta=0.0)
        with pytest.raises(ConfigError, match="eta"):
            c_of_tau(cfg, 0.5)

    @pytest.mark.parametrize("e_rec", [
        FixedEnergyThreshold(7.5e-5),
        RateLinkedEnergyThreshold(a=1e-4, b=5e-5, r_prime=1.0),
    ])
    def test_strictly_decreasing_in_tau(self, e_rec):
        cfg = make_config(ThomasCluster(5.0), e_rec=e_rec)
        grid = np.arange(0.05, 0.951, 0.05)
        vals = [c_of_tau(cfg, t) for t in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert c_of_tau(cfg, 0.2) > c_of_tau(cfg, 0.8)


class TestMixture:
    def test_all_clusters_have_gws(self):
        cfg = make_config(ThomasCluster(5.0))
        assert prob_gw_at_center(cfg) == 1.0

    def test_symmetric_weights(self):
        cfg = make_config(ThomasCluster(5.0), lambda_bc=0.005, lambda_b=0.005)
        assert prob_gw_at_center(cfg) == pytest.approx(0.5)

    def test_weighted_by_cluster_sizes(self):
        cfg = make_config(ThomasCluster(5.0), lambda_bc=0.005, lambda_b=0.005,
                          n1=2.0, n2=1.0)
        assert prob_gw_at_center(cfg) == pytest.approx(2 / 3)

    def test_no_clusters_rejected(self):
        cfg = make_config(ThomasCluster(5.0), lambda_c=0.0, lambda_bc=0.0,
                          lambda_b=0.01)
        with pytest.raises(ConfigError, match="lambda_c"):
            prob_gw_at_center(cfg)

    def test_equals_gamma_when_sizes_match(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            gamma = rng.uniform(0.01, 1.0)
            lc = rng.uniform(0.001, 0.05)
            cfg = make_config(ThomasCluster(5.0), lambda_c=lc,
                              lambda_bc=gamma * lc,
                              lambda_b=0.06 - gamma * lc,
                              lambda_total=0.06)
            p = prob_gw_at_center(cfg)
            assert 0.0 <= p <= 1.0
            assert p == pytest.approx(gamma, rel=1e-12)

    def test_degenerate_endpoints(self):
        assert overall_mixture(0.8, 0.4, 1.0) == 0.8
        assert overall_mixture(0.8, 0.4, 0.0) == 0.4

    def test_equivalent_parametrizations(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            zeta = rng.uniform(0.05, 5.0)
            gamma = rng.uniform(0.0, 1.0)
            chi, chi_bar = rng.uniform(0.0, 1.0, size=2)
            p_b = gamma / (zeta + gamma * (1 - zeta))
            lhs = overall_mixture(chi, chi_bar, p_b)
            rhs = overall_mixture_from_ratios(chi, chi_bar, zeta, gamma)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_monotone_in_gamma_when_clustered_wins(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            zeta = rng.uniform(0.05, 5.0)
            chi_bar = rng.uniform(0.0, 1.0)
            chi = rng.uniform(chi_bar, 1.0)
            gammas = np.linspace(0.0, 1.0, 21)
            vals = [overall_mixture_from_ratios(chi, chi_bar, zeta, g)
                    for g in gammas]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_strictly_increasing_sweep(self):
        vals = [overall_mixture_from_ratios(0.8, 0.4, 1.0, g)
                for g in np.linspace(0.0, 1.0, 11)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
