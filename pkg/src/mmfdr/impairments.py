"""Transmit/receive RF-chain distortion noise.

Imperfect RF chains are modeled by additive zero-mean complex Gaussian
distortion whose per-antenna variance is proportional to the signal power
at that antenna: level ``nu`` on the transmit side, ``mu`` on the receive
side.  Level 0 recovers ideal hardware.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigError, ModeError
from .model import CorrelationSet, complex_normal


@dataclass(frozen=True)
class DistortionCov:
    """Diagonal distortion covariance: entry i = level * signal power at antenna i."""

    diag: np.ndarray
    kind: str           # "transmit" | "receive"
    level: float


def tx_distortion_cov(signal_cov_diag, nu: float) -> DistortionCov:
    """Covariance of transmit distortion for a given per-antenna signal power."""
    diag = np.asarray(signal_cov_diag, dtype=float)
    if nu < 0:
        raise ConfigError("impairment level must be nonnegative")
    if np.any(diag < 0):
        raise ConfigError("signal power entries must be nonnegative")
    return DistortionCov(diag=nu * diag, kind="transmit", level=float(nu))


def rx_distortion_cov(received_cov_diag, mu: float) -> DistortionCov:
    """Covariance of receive distortion for a given per-antenna received power."""
    diag = np.asarray(received_cov_diag, dtype=float)
    if mu < 0:
        raise ConfigError("impairment level must be nonnegative")
    if np.any(diag < 0):
        raise ConfigError("received power entries must be nonnegative")
    return DistortionCov(diag=mu * diag, kind="receive", level=float(mu))


def sample_distortion(cov: DistortionCov, rng: np.random.Generator) -> np.ndarray:
    """One circular complex Gaussian draw with independent entries."""
    return np.sqrt(cov.diag) * complex_normal(rng, cov.diag.shape)


def relay_rx_distortion_cov_closed_form(cfg: SystemConfig) -> DistortionCov:
    """Scenario-averaged relay receive-distortion covariance, single-antenna mode.

    Valid for N_S = 1 (the large-array bound path).  The diagonal is the
    constant mu_R * sum_l nu_S,l E_S,l beta_SR,l + beta_EI * nu_R * sum_l E_R,l
    + mu_R, using unit-diagonal correlation so the loopback trace term reduces
    to the total relay transmit power.
    """
    if cfg.n_s != 1:
        raise ModeError("closed-form relay receive distortion requires N_S = 1")
    theta = (
        cfg.mu_r * float(np.sum(cfg.nu_s * cfg.e_s * cfg.beta_sr))
        + cfg.beta_ei * cfg.nu_r * float(np.sum(cfg.e_r))
        + cfg.mu_r
    )
    return DistortionCov(diag=np.full(cfg.n_r, theta), kind="receive", level=cfg.mu_r)


def ei_expected_cov(cfg: SystemConfig, corr: CorrelationSet,
                    theta_r_t: DistortionCov, signal_diag=None) -> np.ndarray:
    """Average loopback interference covariance seen at the relay input.

    Returns E[H_EI (diag(signal) + Theta_R^T) H_EI^H] for the diagonal
    approximation of the relay transmit covariance:
    beta_EI * Tr(Ct_EI (diag(signal) + Theta)) * C_EI.  When nu_R > 0 the
    signal part equals Theta / nu_R, so callers may omit ``signal_diag``;
    for nu_R = 0 it must be supplied explicitly.
    """
    theta_diag = np.asarray(theta_r_t.diag, dtype=float)
    if signal_diag is None:
        if theta_r_t.level <= 0:
            raise ConfigError("signal_diag is required when the transmit level is 0")
        signal_diag = theta_diag / theta_r_t.level
    signal_diag = np.asarray(signal_diag, dtype=float)
    ct = corr.ct_ei.m
    scale = cfg.beta_ei * float(np.real(np.sum(np.diagonal(ct) * (signal_diag + theta_diag))))
    return scale * corr.c_ei.m
