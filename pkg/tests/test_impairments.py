"""Distortion-noise covariances, sampling, and relay closed forms."""

import numpy as np
import pytest

from mmfdr.errors import ConfigError, ModeError
from mmfdr.impairments import (ei_expected_cov, relay_rx_distortion_cov_closed_form,
                               rx_distortion_cov, sample_distortion,
                               tx_distortion_cov)
from mmfdr.model import build_exponential_correlation, correlation_set, sample_channel
from mmfdr.transceiver import source_bf
from tests.conftest import make_config


class TestCovariances:
    def test_zero_level_gives_zero(self):
        assert np.all(tx_distortion_cov([1.0, 2.0], 0.0).diag == 0)
        assert np.all(rx_distortion_cov([1.0, 2.0], 0.0).diag == 0)

    def test_proportionality(self):
        assert np.allclose(tx_distortion_cov([1.0, 1.0], 0.04).diag, [0.04, 0.04])
        assert np.allclose(rx_distortion_cov([2.0, 3.0], 0.01).diag, [0.02, 0.03])

    def test_beamformed_signal_profile(self):
        # nu * E_S * |p_i|^2 per antenna for a unit-power beamformed signal
        p = source_bf(build_exponential_correlation(4, 0.6))
        e_s, nu = 2.5, 0.03
        cov = tx_distortion_cov(e_s * np.abs(p) ** 2, nu)
        expected = np.array([nu * e_s * abs(p[i]) ** 2 for i in range(4)])
        assert np.allclose(cov.diag, expected, atol=1e-14)

    def test_rejects_negative_inputs(self):
        with pytest.raises(ConfigError):
            tx_distortion_cov([-1.0], 0.1)
        with pytest.raises(ConfigError):
            rx_distortion_cov([1.0], -0.1)

    def test_linearity_and_monotonicity(self):
        diag = np.array([0.5, 1.5, 2.0])
        base = tx_distortion_cov(diag, 0.02).diag
        assert np.allclose(tx_distortion_cov(3.0 * diag, 0.02).diag, 3.0 * base)
        higher = tx_distortion_cov(diag, 0.03).diag
        assert np.all(higher >= base)


class TestSampling:
    def test_zero_cov_gives_zero_vector(self, rng):
        cov = tx_distortion_cov(np.zeros(3), 0.1)
        assert np.all(sample_distortion(cov, rng) == 0)

    def test_zero_entries_stay_zero(self, rng):
        cov = rx_distortion_cov(np.array([1.0, 0.0]), 0.5)
        x = sample_distortion(cov, rng)
        assert x[1] == 0

    def test_moments(self):
        rng = np.random.default_rng(8)
        cov = rx_distortion_cov(np.array([1.0, 1.0]), 0.5)
        draws = np.stack([sample_distortion(cov, rng) for _ in range(10_000)])
        assert np.all(np.abs(np.mean(draws, axis=0)) < 0.05)
        assert np.allclose(np.mean(np.abs(draws) ** 2, axis=0), 0.5, rtol=0.05)

    def test_cross_antenna_independence(self):
        rng = np.random.default_rng(9)
        cov = rx_distortion_cov(np.ones(2), 1.0)
        draws = np.stack([sample_distortion(cov, rng) for _ in range(10_000)])
        rho = np.mean(draws[:, 0] * np.conj(draws[:, 1]))
        assert abs(rho) < 0.05


class TestRelayClosedForms:
    def test_all_impairments_zero(self):
        cfg = make_config(k=2, n_s=1, n_d=1, nu=0.0, mu=0.0)
        assert np.all(relay_rx_distortion_cov_closed_form(cfg).diag == 0)

    def test_only_receive_level_survives(self):
        cfg = make_config(k=1, n_s=1, n_d=1, nu=0.0, mu=0.01, beta_ei=0.0)
        cfg = cfg.replace(nu_r=0.0)
        cov = relay_rx_distortion_cov_closed_form(cfg)
        assert np.allclose(cov.diag, 0.01)

    def test_mixed_parameters_term_by_term(self):
        cfg = make_config(k=2, n_s=1, n_d=1)
        cfg = cfg.replace(nu_s=np.array([0.02, 0.05]), e_s=np.array([2.0, 3.0]),
                          beta_sr=np.array([1.0, 0.5]), mu_r=0.01, nu_r=0.03,
                          e_r=np.array([1.0, 2.0]), e_r_max=4.0, beta_ei=1.7)
        # independent term-by-term arithmetic
        term1 = 0.01 * (0.02 * 2.0 * 1.0 + 0.05 * 3.0 * 0.5)
        term2 = 1.7 * 0.03 * (1.0 + 2.0)
        term3 = 0.01
        cov = relay_rx_distortion_cov_closed_form(cfg)
        assert np.allclose(cov.diag, term1 + term2 + term3, rtol=1e-12)
        assert cov.diag.shape == (cfg.n_r,)

    def test_requires_single_antenna_sources(self):
        cfg = make_config(n_s=2, n_d=1)
        with pytest.raises(ModeError):
            relay_rx_distortion_cov_closed_form(cfg)


class TestEiExpectedCov:
    def test_zero_transmit_cov(self):
        cfg = make_config()
        corr = correlation_set(cfg)
        theta = tx_distortion_cov(np.zeros(cfg.n_t), 0.1)
        out = ei_expected_cov(cfg, corr, theta, signal_diag=np.zeros(cfg.n_t))
        assert np.all(out == 0)

    def test_identity_trace_shortcut(self):
        # Ct = I and Theta = c I gives (1 + 1/nu) beta c N_T C_EI
        cfg = make_config(r_ei=0.0, beta_ei=2.0)
        corr = correlation_set(cfg)
        nu_r, c = 0.05, 0.3
        theta = tx_distortion_cov(np.full(cfg.n_t, c / nu_r), nu_r)
        out = ei_expected_cov(cfg, corr, theta)
        expected = (1 + 1 / nu_r) * 2.0 * c * cfg.n_t * corr.c_ei.m
        assert np.allclose(out, expected, rtol=1e-12)

    def test_against_monte_carlo_moment(self):
        cfg = make_config(n_r=4, n_t=3, beta_ei=1.5, r_ei=0.6)
        corr = correlation_set(cfg)
        rng = np.random.default_rng(12)
        signal = np.array([0.5, 1.0, 0.2])
        nu_r = 0.08
        theta = tx_distortion_cov(signal, nu_r)
        omega = np.diag(signal + theta.diag)
        acc = np.zeros((cfg.n_r, cfg.n_r), dtype=complex)
        n_draws = 10_000
        for _ in range(n_draws):
            h = sample_channel(corr.c_ei, corr.ct_ei, cfg.beta_ei, rng)
            acc += h @ omega @ h.conj().T
        acc /= n_draws
        out = ei_expected_cov(cfg, corr, theta, signal_diag=signal)
        err = np.linalg.norm(acc - out) / np.linalg.norm(out)
        assert err < 0.05

    def test_zero_level_requires_signal_diag(self):
        cfg = make_config()
        corr = correlation_set(cfg)
        theta = tx_distortion_cov(np.ones(cfg.n_t), 0.0)
        with pytest.raises(ConfigError):
            ei_expected_cov(cfg, corr, theta)
        out = ei_expected_cov(cfg, corr, theta, signal_diag=np.ones(cfg.n_t))
        assert np.isfinite(out).all()
