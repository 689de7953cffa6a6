"""Closed-form rate operations: bounds, fixed point, scaling probe."""

import numpy as np
import pytest

from mmfdr.errors import ModeError
from mmfdr.estimation import compute_link_statistics
from mmfdr.model import correlation_set
from mmfdr.rates import (asym_rate_rd_hia, asym_rate_sr_hia, e2e_rate,
                         fixed_point_psi, scaling_probe, simplified_upper,
                         upper_rate_rd, upper_rate_sr)
from tests.conftest import make_config


def single_antenna_config(**kw):
    base = dict(k=2, n_s=1, n_d=1, n_r=24, n_t=24, nu=0.01, mu=0.01,
                r0=0.3, r_ei=0.7, beta_ei=1.0)
    base.update(kw)
    return make_config(**base)


class TestFixedPoint:
    def test_single_pair_closed_form(self):
        cfg = single_antenna_config(k=1)
        corr = correlation_set(cfg)
        state = fixed_point_psi(cfg, corr, 0)
        rho = cfg.beta_ei * cfg.nu_r * np.sum(cfg.e_r) + 1.0
        theta = (cfg.mu_r * np.sum(cfg.nu_s * cfg.e_s * cfg.beta_sr)
                 + cfg.beta_ei * cfg.nu_r * np.sum(cfg.e_r) + cfg.mu_r)
        expected = np.eye(cfg.n_r) / (theta + rho)
        assert np.max(np.abs(state.psi - expected)) < 1e-12
        assert state.residual < 1e-8

    def test_no_impairments(self):
        cfg = single_antenna_config(k=2, nu=0.0, mu=0.0, beta_ei=0.0)
        corr = correlation_set(cfg)
        state = fixed_point_psi(cfg, corr, 0)
        assert np.isclose(state.rho, 1.0)
        assert np.max(np.abs(state.psi - np.eye(cfg.n_r))) < 1e-12

    def test_self_consistency_residual(self):
        # converged deltas re-substituted into their defining map
        cfg = single_antenna_config(k=3, nu=0.05, mu=0.03, beta_ei=2.0)
        corr = correlation_set(cfg)
        state = fixed_point_psi(cfg, corr, 1)
        rho = state.rho
        theta = (cfg.mu_r * np.sum(cfg.nu_s * cfg.e_s * cfg.beta_sr)
                 + cfg.beta_ei * cfg.nu_r * np.sum(cfg.e_r) + cfg.mu_r)
        others = [l for l in range(3) if l != 1]
        m = (theta + rho) * np.eye(cfg.n_r, dtype=complex)
        for l in others:
            coeff = cfg.nu_s[l] * cfg.e_s[l] * cfg.beta_sr[l]
            m += coeff / (cfg.n_r * (1 + state.delta[l])) * corr.c_sr[l].m
        psi = np.linalg.inv(m)
        for l in others:
            coeff = cfg.nu_s[l] * cfg.e_s[l] * cfg.beta_sr[l]
            mapped = coeff / cfg.n_r * np.real(np.trace(corr.c_sr[l].m @ psi))
            assert abs(mapped - state.delta[l]) < 1e-8

    def test_requires_single_antenna(self):
        cfg = make_config(n_s=2)
        with pytest.raises(ModeError):
            fixed_point_psi(cfg, correlation_set(cfg), 0)


class TestUpperRateSr:
    def test_clean_single_pair(self):
        cfg = single_antenna_config(k=1, nu=0.0, mu=0.0, beta_ei=0.0)
        corr = correlation_set(cfg)
        rate = upper_rate_sr(cfg, corr, 0)
        quad = cfg.e_s[0] * cfg.beta_sr[0] * cfg.n_r  # Psi = I, Tr(C) = N_R
        assert np.isclose(rate, cfg.prefactor * np.log2(1 + quad), rtol=1e-12)

    def test_zero_power(self):
        cfg = single_antenna_config(k=1)
        cfg = cfg.replace(e_s=np.zeros(1))
        assert upper_rate_sr(cfg, correlation_set(cfg), 0) == 0.0

    def test_saturation_with_source_distortion(self):
        for e_db in (10.0, 30.0, 50.0):
            cfg = single_antenna_config(k=2, nu=0.04, e_db=e_db)
            corr = correlation_set(cfg)
            rate = upper_rate_sr(cfg, corr, 0)
            ceiling = cfg.prefactor * np.log2(1 + 1 / cfg.nu_s[0])
            assert rate <= ceiling + 1e-12


class TestUpperRateRd:
    def test_clean_collapse(self):
        cfg = single_antenna_config(k=1, nu=0.0, mu=0.0)
        rate = upper_rate_rd(cfg, 0)
        expected = cfg.prefactor * np.log2(
            1 + cfg.n_t * cfg.beta_rd[0] * cfg.e_r[0])
        assert np.isclose(rate, expected, rtol=1e-12)

    def test_zero_power(self):
        cfg = single_antenna_config(k=1)
        cfg = cfg.replace(e_r=np.zeros(1), e_s=cfg.e_s)
        assert upper_rate_rd(cfg, 0) == 0.0

    def test_arithmetic_oracle(self):
        cfg = single_antenna_config(k=1, n_r=100, n_t=100)
        cfg = cfg.replace(e_r=np.array([1.0]), e_r_max=1.0,
                          nu_r=0.01, mu_d=np.array([0.01]),
                          beta_rd=np.array([1.0]))
        # term-by-term evaluation
        num = 100 * 1.0 * 1.0
        den = 0.01 * 1.0 * 1.0 + 0.01 * (num + 0.01 * 1.0 * 1.0 + 1.0) + 1.0
        expected = cfg.prefactor * np.log2(1 + num / den)
        assert np.isclose(upper_rate_rd(cfg, 0), expected, rtol=1e-12)


class TestSimplifiedUpper:
    def test_vanishing_load_matches_min_inverse_levels(self):
        cfg = single_antenna_config(k=2, n_r=10 ** 6, n_t=10 ** 6)
        cfg = cfg.replace(nu_s=np.full(2, 0.04), mu_d=np.full(2, 0.01))
        rate = simplified_upper(cfg)
        expected = cfg.prefactor * np.log2(1 + 25.0)  # min{1/0.04, 1/0.01}
        assert abs(rate - expected) / expected < 1e-3

    def test_unbounded_as_impairments_vanish(self):
        prev = 0.0
        for nu in (1e-2, 1e-4, 1e-6, 1e-8):
            cfg = single_antenna_config(k=2, nu=nu, mu=nu)
            rate = simplified_upper(cfg)
            assert rate > prev
            prev = rate
        assert prev > 20.0
        cfg = single_antenna_config(k=2, nu=0.0, mu=0.0, beta_ei=0.0)
        assert simplified_upper(cfg) == np.inf

    def test_mixed_levels_arithmetic_oracle(self):
        cfg = single_antenna_config(k=10, n_r=100, n_t=100, nu=0.03, mu=0.02,
                                    beta_ei=1.5)
        cfg = cfg.replace(nu_r=0.05, mu_r=0.01)
        k_over_n = 10 / 100
        den_sr = (0.03 + k_over_n * 0.01 * 0.03
                  + k_over_n * 0.05 * cfg.e_r[0] * 1.5 / (cfg.e_s[0] * 1.0))
        den_rd = 0.02 + k_over_n * 0.05 * 1.02
        expected = cfg.prefactor * np.log2(1 + min(1 / den_sr, 1 / den_rd))
        assert np.isclose(simplified_upper(cfg), expected, rtol=1e-12)

    def test_rejects_heterogeneous(self):
        cfg = single_antenna_config(k=2)
        cfg = cfg.replace(e_s=np.array([1.0, 2.0]))
        with pytest.raises(ModeError):
            simplified_upper(cfg)

    def test_bounded_by_level_ceiling(self):
        for k, n in ((2, 32), (4, 64), (8, 128)):
            cfg = single_antenna_config(k=k, n_r=n, n_t=n, nu=0.02, mu=0.03)
            ceiling = cfg.prefactor * np.log2(1 + min(1 / 0.02, 1 / 0.03))
            assert simplified_upper(cfg) <= ceiling + 1e-12


class TestEndToEnd:
    def test_min_examples(self):
        assert e2e_rate(2.0, 3.0) == 2.0
        assert e2e_rate(0.0, 5.0) == 0.0
        assert e2e_rate(4.0, 4.0) == 4.0


class TestAsymTrivialCases:
    def test_clean_single_pair_limit(self):
        cfg = make_config(k=1, n_s=4, n_d=4, n_r=32, n_t=32, nu=0.0, mu=0.0,
                          beta_ei=0.0, e_t_db=80.0)
        corr = correlation_set(cfg)
        stats = compute_link_statistics(cfg, corr, 24, 24)
        sr, terms = asym_rate_sr_hia(cfg, corr, stats)
        tr = np.real(np.trace(stats.c_eff_sr[0]))
        expected = cfg.prefactor * np.log2(1 + cfg.e_s[0] * tr)
        assert np.isclose(sr[0], expected, rtol=1e-4)
        for name in ("var", "ei", "mui", "dt", "dr"):
            assert terms[name][0] < 1e-4 * terms["awgn"][0] + 1e-12

        rd, terms_rd = asym_rate_rd_hia(cfg, corr, stats)
        expected_rd = cfg.prefactor * np.log2(
            1 + cfg.e_r[0] * np.real(np.trace(stats.c_hat_rd[0])))
        assert np.isclose(rd[0], expected_rd, rtol=1e-4)

    def test_no_loopback_kills_ei_term(self):
        cfg = make_config(k=2, beta_ei=0.0)
        corr = correlation_set(cfg)
        stats = compute_link_statistics(cfg, corr, 12, 12)
        _, terms = asym_rate_sr_hia(cfg, corr, stats)
        assert np.all(terms["ei"] == 0)

    def test_no_relay_tx_distortion_kills_downlink_dt(self):
        cfg = make_config(k=2)
        cfg = cfg.replace(nu_r=0.0)
        corr = correlation_set(cfg)
        stats = compute_link_statistics(cfg, corr, 12, 12)
        _, terms = asym_rate_rd_hia(cfg, corr, stats)
        assert np.all(terms["dt"] == 0)

    def test_impairment_monotonicity(self):
        # raising any level never increases the closed-form rates
        base = make_config(k=2, n_r=24, n_t=24, nu=0.01, mu=0.01, beta_ei=1.0)
        corr = correlation_set(base)

        def rates_for(cfg):
            stats = compute_link_statistics(cfg, corr, 16, 16)
            sr, _ = asym_rate_sr_hia(cfg, corr, stats)
            rd, _ = asym_rate_rd_hia(cfg, corr, stats)
            return np.minimum(sr, rd)

        r0 = rates_for(base)
        for field in ("nu_s", "nu_r", "mu_r", "mu_d"):
            val = getattr(base, field)
            bumped = base.replace(**{field: val + 0.05})
            assert np.all(rates_for(bumped) <= r0 + 1e-9), field


class TestScalingProbe:
    @staticmethod
    def _factory(scaled):
        def make(n):
            k = 4
            n_node = max(1, n // k) if scaled else 4
            cfg = make_config(k=k, n_s=n_node, n_d=n_node, n_r=n, n_t=n,
                              nu=0.0025, mu=0.0025, r0=0.3, r_ei=0.8,
                              beta_ei=1.0, phase_seed=3)
            return cfg, max(k, (2 * n) // 3), max(k, (2 * n) // 3)
        return make

    def test_awgn_slope_is_minus_one(self):
        probe = scaling_probe(self._factory(scaled=True), [32, 64, 128])
        assert abs(probe.slopes["awgn"] + 1.0) < 0.1

    def test_ei_and_dt_slopes(self):
        scaled = scaling_probe(self._factory(scaled=True), [32, 64, 128])
        fixed = scaling_probe(self._factory(scaled=False), [32, 64, 128])
        assert scaled.slopes["ei"] <= -0.9
        # source transmit distortion: flat when node arrays are fixed,
        # decaying ~1/N when they scale with the relay array
        assert abs(fixed.slopes["dt"]) < 0.3
        assert scaled.slopes["dt"] <= -0.7
