"""Reduced-dimension pilot training and LMMSE estimation of effective channels.

Only the effective channels (seen through the outer and node beamformers)
are estimated, so the pilot overhead per node is a fixed ``tau`` symbols
regardless of array sizes.  Pilots are corrupted by transmit distortion at
the training node, receive distortion at the relay, and unit-variance AWGN;
the LMMSE gain accounts for all three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigError
from .model import (CorrelationSet, _as_matrix, build_exponential_correlation,
                    complex_normal, sorted_eigh)
from .transceiver import dest_bf, outer_bf, source_bf


def pilot_sequence(tau: int, e_t: float) -> np.ndarray:
    """Constant-amplitude pilot of per-symbol power e_t (one node per slot)."""
    return np.sqrt(e_t) * np.ones(tau, dtype=complex)


def effective_cov(beta: float, c_rx, c_tx, p_outer: np.ndarray, p_node: np.ndarray) -> np.ndarray:
    """Covariance of the effective channel P^H H p.

    Equals beta * lambda_1(C_tx) * P^H C_rx P when the node beamformer is
    the dominant eigenvector of its transmit-side correlation.
    """
    m_rx = _as_matrix(c_rx)
    lam1 = float(sorted_eigh(c_tx)[0][0])
    return beta * lam1 * (p_outer.conj().T @ m_rx @ p_outer)


def _side_params(cfg: SystemConfig, side: str, k: int):
    """(nu_tx, beta, n_node) for the training node of the given link side."""
    if side == "sr":
        return float(cfg.nu_s[k]), float(cfg.beta_sr[k])
    if side == "rd":
        return float(cfg.nu_d[k]), float(cfg.beta_rd[k])
    raise ConfigError(f"unknown link side {side!r}")


def pilot_rx_distortion_scale(cfg: SystemConfig, side: str, k: int,
                              e_t: float | None = None) -> float:
    """Std deviation of the relay's receive distortion during training.

    The distortion variance is proportional to the average received power
    per antenna, mu_R * (E_T * beta * (lam1 + nu) + 1), a scenario statistic
    under the unit-diagonal correlation assumption.
    """
    nu_tx, beta = _side_params(cfg, side, k)
    if e_t is None:
        e_t = cfg.e_t
    r = cfg.r_sr[k] if side == "sr" else cfg.r_rd[k]
    n_tx = cfg.n_s if side == "sr" else cfg.n_d
    lam1 = float(np.linalg.eigvalsh(build_exponential_correlation(n_tx, r).m)[-1])
    return float(np.sqrt(cfg.mu_r * (e_t * beta * (lam1 + nu_tx) + 1.0)))


def simulate_pilot_rx(channel: np.ndarray, cfg: SystemConfig, p_outer: np.ndarray,
                      p_node: np.ndarray, side: str, k: int,
                      rng: np.random.Generator, pilot: np.ndarray | None = None) -> np.ndarray:
    """One noisy reduced-dimension pilot observation of an effective channel.

    Returns z = h_eff + (1/(tau E_T)) P^H (H T phi* + R phi* + N phi*) where
    T is the training node's transmit distortion, R the relay's receive
    distortion, and N AWGN.
    """
    if pilot is None:
        pilot = pilot_sequence(cfg.tau, cfg.e_t)
    tau = pilot.shape[0]
    e_t = float(np.mean(np.abs(pilot) ** 2))
    nu_tx, _ = _side_params(cfg, side, k)
    n_rx, n_tx = channel.shape

    h_eff = p_outer.conj().T @ channel @ p_node

    # transmit distortion: per-antenna variance nu * E_T * |p_i|^2 per symbol
    t_mat = np.sqrt(nu_tx * e_t) * (np.abs(p_node)[:, None] * complex_normal(rng, (n_tx, tau)))
    r_scale = pilot_rx_distortion_scale(cfg, side, k, e_t)
    r_mat = r_scale * complex_normal(rng, (n_rx, tau))
    n_mat = complex_normal(rng, (n_rx, tau))

    corrupt = channel @ t_mat + r_mat + n_mat
    return h_eff + (p_outer.conj().T @ (corrupt @ pilot.conj())) / (tau * e_t)


def lmmse_gain(cfg: SystemConfig, c_eff: np.ndarray, side: str, k: int,
               lam1: float | None = None) -> np.ndarray:
    """LMMSE gain matrix Gamma for one effective channel.

    Inverse of C + (nu/(lam1 tau)) C + (1/(tau E_T)) I
    + (mu_R/tau)(1/E_T + beta (lam1 + nu)) I.
    """
    nu_tx, beta = _side_params(cfg, side, k)
    a = c_eff.shape[0]
    if lam1 is None:
        # c_eff = beta * lam1 * P^H C P with unit-diagonal C and orthonormal P,
        # so the trace pins lam1 only up to Tr(P^H C P); callers normally pass it.
        raise ConfigError("lam1 (dominant transmit-side eigenvalue) is required")
    bracket = (
        c_eff
        + (nu_tx / (lam1 * cfg.tau)) * c_eff
        + (1.0 / (cfg.tau * cfg.e_t)) * np.eye(a)
        + (cfg.mu_r / cfg.tau) * (1.0 / cfg.e_t + beta * (lam1 + nu_tx)) * np.eye(a)
    )
    return np.linalg.inv(bracket)


def lmmse_estimate(z: np.ndarray, c_eff: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """LMMSE estimate C Gamma z of the effective channel from observation z."""
    return c_eff @ gamma @ z


def estimate_cov(c_eff: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Covariance C Gamma C of the LMMSE estimate."""
    return c_eff @ gamma @ c_eff


def node_power_profile(c_tx, p_node: np.ndarray, nu_tx: float) -> float:
    """Tr(C_tx (p p^H + nu diag(p p^H))): average tx power shaping at the node."""
    m = _as_matrix(c_tx)
    quad = float(np.real(p_node.conj() @ m @ p_node))
    diag_part = float(np.real(np.sum(np.diagonal(m) * np.abs(p_node) ** 2)))
    return quad + nu_tx * diag_part


def delta_term(cfg: SystemConfig, side: str, k: int, c_eff: np.ndarray,
               gamma: np.ndarray, c_tx, p_node: np.ndarray) -> float:
    """Large-array limit of E|dh^H hhat|^2 (estimate/error cross power).

    First branch: transmit-impairment self term (nu/tau) Tr(Chat)^2 sum|p_i|^4.
    Second branch: pilot-noise term
    (1/tau)(mu_R/E_T + 1/E_T + mu_R beta Tr(C_tx Omega)) Tr(C^3 Gamma^2),
    written with mu_R distributed so the mu_R -> 0 limit is explicit.
    """
    nu_tx, beta = _side_params(cfg, side, k)
    c_hat = estimate_cov(c_eff, gamma)
    tr_hat = float(np.real(np.trace(c_hat)))
    p4 = float(np.sum(np.abs(p_node) ** 4))
    first = (nu_tx / cfg.tau) * tr_hat ** 2 * p4

    c3g2 = float(np.real(np.trace(c_eff @ c_eff @ c_eff @ gamma @ gamma)))
    profile = node_power_profile(c_tx, p_node, nu_tx)
    second = (1.0 / cfg.tau) * (cfg.mu_r / cfg.e_t + 1.0 / cfg.e_t
                                + cfg.mu_r * beta * profile) * c3g2
    return first + second


@dataclass(frozen=True)
class EstimateSet:
    """Per-trial effective-channel estimates plus the scenario statistics."""

    h_hat_sr: np.ndarray    # K x A_R
    h_hat_rd: np.ndarray    # K x A_T
    stats: "LinkStatistics"


@dataclass(frozen=True)
class LinkStatistics:
    """Second-order statistics of effective channels for one (A_R, A_T) choice.

    Everything the closed-form rate expressions and the SINR coefficient
    assembly need: outer/node beamformers, effective and estimate
    covariances, LMMSE gains and the estimate/error cross powers delta.
    """

    a_r: int
    a_t: int
    p_r: np.ndarray          # N_R x A_R
    p_t: np.ndarray          # N_T x A_T
    p_s: np.ndarray          # K x N_S
    p_d: np.ndarray          # K x N_D
    lam1_sr: np.ndarray      # K dominant eigenvalues of source-side correlation
    lam1_rd: np.ndarray
    c_eff_sr: np.ndarray     # K x A_R x A_R
    c_eff_rd: np.ndarray     # K x A_T x A_T
    gamma_sr: np.ndarray     # K x A_R x A_R
    gamma_rd: np.ndarray     # K x A_T x A_T
    c_hat_sr: np.ndarray     # K x A_R x A_R
    c_hat_rd: np.ndarray     # K x A_T x A_T
    tr_hat_sr: np.ndarray    # K traces of c_hat_sr
    tr_hat_rd: np.ndarray
    delta_sr: np.ndarray     # K
    delta_rd: np.ndarray

    @property
    def k(self) -> int:
        return self.p_s.shape[0]


def compute_link_statistics(cfg: SystemConfig, corr: CorrelationSet,
                            a_r: int, a_t: int) -> LinkStatistics:
    """Build all second-order statistics for the chosen DOF parameters."""
    p_r, p_t = outer_bf(corr.c_ei, corr.ct_ei, a_r, a_t)
    p_s = np.stack([source_bf(corr.ct_sr[k]) for k in range(cfg.k)])
    p_d = np.stack([dest_bf(corr.ct_rd[k]) for k in range(cfg.k)])

    lam1_sr = np.array([float(sorted_eigh(corr.ct_sr[k])[0][0]) for k in range(cfg.k)])
    lam1_rd = np.array([float(sorted_eigh(corr.ct_rd[k])[0][0]) for k in range(cfg.k)])

    c_eff_sr = np.stack([
        cfg.beta_sr[k] * lam1_sr[k] * (p_r.conj().T @ corr.c_sr[k].m @ p_r)
        for k in range(cfg.k)])
    c_eff_rd = np.stack([
        cfg.beta_rd[k] * lam1_rd[k] * (p_t.conj().T @ corr.c_rd[k].m @ p_t)
        for k in range(cfg.k)])

    gamma_sr = np.stack([
        lmmse_gain(cfg, c_eff_sr[k], "sr", k, lam1=lam1_sr[k]) for k in range(cfg.k)])
    gamma_rd = np.stack([
        lmmse_gain(cfg, c_eff_rd[k], "rd", k, lam1=lam1_rd[k]) for k in range(cfg.k)])

    c_hat_sr = np.stack([estimate_cov(c_eff_sr[k], gamma_sr[k]) for k in range(cfg.k)])
    c_hat_rd = np.stack([estimate_cov(c_eff_rd[k], gamma_rd[k]) for k in range(cfg.k)])

    delta_sr = np.array([
        delta_term(cfg, "sr", k, c_eff_sr[k], gamma_sr[k], corr.ct_sr[k], p_s[k])
        for k in range(cfg.k)])
    delta_rd = np.array([
        delta_term(cfg, "rd", k, c_eff_rd[k], gamma_rd[k], corr.ct_rd[k], p_d[k])
        for k in range(cfg.k)])

    return LinkStatistics(
        a_r=a_r, a_t=a_t, p_r=p_r, p_t=p_t, p_s=p_s, p_d=p_d,
        lam1_sr=lam1_sr, lam1_rd=lam1_rd,
        c_eff_sr=c_eff_sr, c_eff_rd=c_eff_rd,
        gamma_sr=gamma_sr, gamma_rd=gamma_rd,
        c_hat_sr=c_hat_sr, c_hat_rd=c_hat_rd,
        tr_hat_sr=np.real(np.trace(c_hat_sr, axis1=1, axis2=2)),
        tr_hat_rd=np.real(np.trace(c_hat_rd, axis1=1, axis2=2)),
        delta_sr=delta_sr, delta_rd=delta_rd,
    )


@dataclass(frozen=True)
class DofScalingReport:
    """Advisory check that the retained DOF keep the effective channels strong."""

    ratio_sr: np.ndarray    # Tr(C_eff_SR,k) / N_R per pair
    ratio_rd: np.ndarray    # Tr(C_eff_RD,k) / N_T per pair
    threshold: float
    flagged_sr: np.ndarray
    flagged_rd: np.ndarray

    @property
    def ok(self) -> bool:
        return not (np.any(self.flagged_sr) or np.any(self.flagged_rd))


def check_dof_scaling(cfg: SystemConfig, corr: CorrelationSet, a_r: int, a_t: int,
                      threshold: float = 0.05) -> DofScalingReport:
    """Report Tr(C_eff)/N per link and flag pairs below the threshold.

    Values near zero mean the outer projection discarded almost all of the
    desired channel's energy, invalidating the large-array rate expressions.
    """
    stats = compute_link_statistics(cfg, corr, a_r, a_t)
    tr_sr = np.real(np.trace(stats.c_eff_sr, axis1=1, axis2=2))
    tr_rd = np.real(np.trace(stats.c_eff_rd, axis1=1, axis2=2))
    ratio_sr = tr_sr / cfg.n_r
    ratio_rd = tr_rd / cfg.n_t
    return DofScalingReport(
        ratio_sr=ratio_sr, ratio_rd=ratio_rd, threshold=threshold,
        flagged_sr=ratio_sr < threshold, flagged_rd=ratio_rd < threshold,
    )
