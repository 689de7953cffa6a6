"""Achievable-rate evaluation: Monte Carlo and closed-form large-array paths.

The Monte Carlo path simulates the full signal chain (channels, pilots,
LMMSE estimates, two-stage beamforming, distortion) and applies the
worst-case-Gaussian rate bound to sample moments.  The closed-form path
evaluates the deterministic large-array equivalents of every SINR term from
the second-order statistics alone.  A separate set of operations evaluates
the single-antenna linear-processing upper bound (whitened matched filter
uplink via a fixed point, eigen-beamformed downlink, and its simplified
homogeneous-network form).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import SystemConfig
from .errors import ConvergenceError, ModeError, SingularChannelError
from .estimation import (EstimateSet, LinkStatistics, compute_link_statistics,
                         node_power_profile)
from .impairments import relay_rx_distortion_cov_closed_form
from .model import (ChannelSet, CorrelationSet, channel_factors, complex_normal,
                    correlation_set, trial_rng)
from .transceiver import BeamformerSet


def e2e_rate(r_sr: float, r_rd: float) -> float:
    """Decode-and-forward end-to-end rate: the weaker hop limits."""
    return min(r_sr, r_rd)


def _rate(prefactor: float, sinr: float) -> float:
    return prefactor * np.log2(1.0 + sinr)


# ---------------------------------------------------------------------------
# closed-form large-array terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SrCoefficients:
    """Uplink SINR denominator, split per source/relay power coefficient.

    gamma_SR,k = E_S,k / (sum_j a[k,j] E_S,j + sum_j b[k,j] E_R,j + awgn[k])
    with a = a_var + a_mui + a_dt + a_dr and b = b_ei + b_dr.
    """

    a_var: np.ndarray
    a_mui: np.ndarray
    a_dt: np.ndarray
    a_dr: np.ndarray
    b_ei: np.ndarray
    b_dr: np.ndarray
    awgn: np.ndarray

    @property
    def a(self) -> np.ndarray:
        return self.a_var + self.a_mui + self.a_dt + self.a_dr

    @property
    def b(self) -> np.ndarray:
        return self.b_ei + self.b_dr


@dataclass(frozen=True)
class RdCoefficients:
    """Downlink SINR pieces: gamma_RD,k = gain[k] E_R,k / (sum_j b[k,j] E_R,j + const[k])."""

    gain: np.ndarray
    b_var: np.ndarray
    b_mui: np.ndarray
    b_dt: np.ndarray
    b_dr: np.ndarray
    const: np.ndarray

    @property
    def b(self) -> np.ndarray:
        return self.b_var + self.b_mui + self.b_dt + self.b_dr


def _tr(m: np.ndarray) -> float:
    return float(np.real(np.trace(m)))


def sr_coefficients(cfg: SystemConfig, corr: CorrelationSet,
                    stats: LinkStatistics) -> SrCoefficients:
    """Assemble every uplink large-array term as a power coefficient."""
    k_n = cfg.k
    p_r, p_t = stats.p_r, stats.p_t
    tr_sr, tr_rd = stats.tr_hat_sr, stats.tr_hat_rd

    # loopback + relay receive distortion couplings (per relay stream j)
    c_ei_red = p_r.conj().T @ corr.c_ei.m @ p_r
    tr_ei_cross = np.array([_tr(stats.c_hat_sr[k] @ c_ei_red) for k in range(k_n)])
    xi_tr = np.empty(k_n)          # Tr(Ct_EI Xi_j), Xi_j from stream j's estimate cov
    for j in range(k_n):
        outer = p_t @ stats.c_hat_rd[j] @ p_t.conj().T
        xi = outer + cfg.nu_r * np.diag(np.real(np.diagonal(outer)))
        xi_tr[j] = _tr(corr.ct_ei.m @ xi)

    b_ei = np.zeros((k_n, k_n))
    b_dr = np.zeros((k_n, k_n))
    for k in range(k_n):
        for j in range(k_n):
            coupling = cfg.beta_ei * xi_tr[j] / tr_rd[j]
            b_ei[k, j] = coupling * tr_ei_cross[k] / tr_sr[k] ** 2
            b_dr[k, j] = cfg.mu_r * coupling / tr_sr[k]

    # source-power couplings
    profile = np.array([
        node_power_profile(corr.ct_sr[j], stats.p_s[j], cfg.nu_s[j]) for j in range(k_n)])
    a_var = np.zeros((k_n, k_n))
    a_mui = np.zeros((k_n, k_n))
    a_dt = np.zeros((k_n, k_n))
    a_dr = np.zeros((k_n, k_n))
    for k in range(k_n):
        a_var[k, k] = stats.delta_sr[k] / tr_sr[k] ** 2
        g_kk = _g_self(cfg, corr, stats, k)
        a_dt[k, k] = cfg.nu_s[k] * g_kk / tr_sr[k] ** 2
        for j in range(k_n):
            a_dr[k, j] = cfg.mu_r * cfg.beta_sr[j] * profile[j] / tr_sr[k]
            if j == k:
                continue
            a_mui[k, j] = _tr((stats.c_eff_sr[j] - stats.c_hat_sr[j])
                              @ stats.c_hat_sr[k]) / tr_sr[k] ** 2
            g_kj = cfg.beta_sr[j] * _tr(
                stats.c_hat_sr[k] @ (p_r.conj().T @ corr.c_sr[j].m @ p_r))
            a_dt[k, j] = cfg.nu_s[j] * g_kj / tr_sr[k] ** 2

    awgn = (cfg.mu_r + 1.0) / tr_sr
    return SrCoefficients(a_var=a_var, a_mui=a_mui, a_dt=a_dt, a_dr=a_dr,
                          b_ei=b_ei, b_dr=b_dr, awgn=awgn)


def _g_self(cfg: SystemConfig, corr: CorrelationSet, stats: LinkStatistics, k: int) -> float:
    """Self coupling of the source's own transmit distortion into its estimate."""
    p = stats.p_s[k]
    lam1 = stats.lam1_sr[k]
    tr_hat = stats.tr_hat_sr[k]
    ct = corr.ct_sr[k].m
    d_ct = np.abs(p)[:, None] ** 2 * ct
    c3g2 = _tr(stats.c_eff_sr[k] @ stats.c_eff_sr[k] @ stats.c_eff_sr[k]
               @ stats.gamma_sr[k] @ stats.gamma_sr[k])
    profile = node_power_profile(ct, p, cfg.nu_s[k])
    return (
        tr_hat ** 2 * float(np.sum(np.abs(p) ** 4))
        + (cfg.nu_s[k] / cfg.tau) * tr_hat ** 2 * _tr(d_ct @ d_ct) / lam1 ** 2
        + (cfg.mu_r / cfg.tau) * (1.0 / cfg.e_t + cfg.beta_sr[k] * profile) * c3g2 / lam1
        + (1.0 / (cfg.tau * cfg.e_t)) * c3g2 / lam1
    )


def rd_coefficients(cfg: SystemConfig, corr: CorrelationSet,
                    stats: LinkStatistics) -> RdCoefficients:
    """Assemble every downlink large-array term as a relay-power coefficient."""
    k_n = cfg.k
    p_t = stats.p_t
    tr_rd = stats.tr_hat_rd

    outer = [p_t @ stats.c_hat_rd[j] @ p_t.conj().T for j in range(k_n)]
    b_var = np.zeros((k_n, k_n))
    b_mui = np.zeros((k_n, k_n))
    b_dt = np.zeros((k_n, k_n))
    b_dr = np.zeros((k_n, k_n))
    for k in range(k_n):
        c_full = corr.c_rd[k].m
        b_var[k, k] = stats.delta_rd[k] / tr_rd[k]
        p4 = float(np.sum(np.abs(stats.p_d[k]) ** 4))
        c3g2 = _tr(stats.c_eff_rd[k] @ stats.c_eff_rd[k] @ stats.c_eff_rd[k]
                   @ stats.gamma_rd[k] @ stats.gamma_rd[k])
        pilot_term = (1.0 / cfg.tau) * (
            cfg.mu_r / cfg.e_t + 1.0 / cfg.e_t
            + cfg.mu_r * cfg.beta_rd[k] * (stats.lam1_rd[k] + cfg.nu_d[k])
        ) * c3g2 / stats.lam1_rd[k]
        b_dr[k, k] = cfg.mu_d[k] * (p4 * tr_rd[k] ** 2 + pilot_term) / tr_rd[k]
        for j in range(k_n):
            b_dt[k, j] = (cfg.nu_r * cfg.beta_rd[k] * stats.lam1_rd[k]
                          * float(np.real(np.sum(np.diagonal(c_full) * np.diagonal(outer[j]))))
                          / tr_rd[j])
            if j == k:
                continue
            b_mui[k, j] = _tr((stats.c_eff_rd[k] - stats.c_hat_rd[k])
                              @ stats.c_hat_rd[j]) / tr_rd[j]
            # stream j's unit-trace covariance (incl. its transmit distortion)
            # seen through destination k's receive chain
            xi_tr_kj = _tr(c_full @ outer[j]) + cfg.nu_r * tr_rd[j]
            b_dr[k, j] = cfg.mu_d[k] * cfg.beta_rd[k] * xi_tr_kj / tr_rd[j]

    # the mu_D * AWGN contribution folds into the power-free constant
    const = cfg.mu_d + 1.0
    return RdCoefficients(gain=tr_rd.copy(), b_var=b_var, b_mui=b_mui,
                          b_dt=b_dt, b_dr=b_dr, const=const)


def statistical_profiles(cfg: SystemConfig, corr: CorrelationSet, stats: LinkStatistics):
    """Scenario-average distortion power profiles used by the trial chain.

    Returns (g_bar, rx_bar, r_scale_sr, r_scale_rd): per-antenna average
    relay transmit power, average relay received power per antenna (uniform
    under unit-diagonal correlation), and per-link pilot receive-distortion
    standard deviations.
    """
    from .estimation import pilot_rx_distortion_scale

    k_n = cfg.k
    g_bar = np.zeros(cfg.n_t)
    tr_ct_omega = 0.0
    ct_ei = corr.ct_ei.m
    for l in range(k_n):
        outer = stats.p_t @ stats.c_hat_rd[l] @ stats.p_t.conj().T
        diag_l = np.real(np.diagonal(outer))
        g_bar += cfg.e_r[l] * diag_l / stats.tr_hat_rd[l]
        xi_tr = float(np.real(np.trace(ct_ei @ outer))
                      + cfg.nu_r * np.real(np.sum(np.diagonal(ct_ei) * diag_l)))
        tr_ct_omega += cfg.e_r[l] * xi_tr / stats.tr_hat_rd[l]
    rx_bar = 1.0 + cfg.beta_ei * tr_ct_omega
    for j in range(k_n):
        profile = node_power_profile(corr.ct_sr[j], stats.p_s[j], cfg.nu_s[j])
        rx_bar += cfg.e_s[j] * cfg.beta_sr[j] * profile
    r_scale_sr = np.array([pilot_rx_distortion_scale(cfg, "sr", k) for k in range(k_n)])
    r_scale_rd = np.array([pilot_rx_distortion_scale(cfg, "rd", k) for k in range(k_n)])
    return g_bar, rx_bar, r_scale_sr, r_scale_rd


def asym_rate_sr_hia(cfg: SystemConfig, corr: CorrelationSet, stats: LinkStatistics):
    """Closed-form uplink rates and term breakdown (arrays over pairs)."""
    co = sr_coefficients(cfg, corr, stats)
    terms = {
        "desired": cfg.e_s.copy(),
        "var": co.a_var @ cfg.e_s,
        "mui": co.a_mui @ cfg.e_s,
        "dt": co.a_dt @ cfg.e_s,
        "dr": co.a_dr @ cfg.e_s + co.b_dr @ cfg.e_r + cfg.mu_r / stats.tr_hat_sr,
        "ei": co.b_ei @ cfg.e_r,
        "awgn": 1.0 / stats.tr_hat_sr,
    }
    denom = (terms["var"] + terms["mui"] + terms["dt"] + terms["dr"]
             + terms["ei"] + terms["awgn"])
    rates = cfg.prefactor * np.log2(1.0 + terms["desired"] / denom)
    return rates, terms


def asym_rate_rd_hia(cfg: SystemConfig, corr: CorrelationSet, stats: LinkStatistics):
    """Closed-form downlink rates and term breakdown (arrays over pairs)."""
    co = rd_coefficients(cfg, corr, stats)
    terms = {
        "desired": co.gain * cfg.e_r,
        "var": co.b_var @ cfg.e_r,
        "mui": co.b_mui @ cfg.e_r,
        "dt": co.b_dt @ cfg.e_r,
        "dr": co.b_dr @ cfg.e_r + cfg.mu_d,
        "awgn": np.ones(cfg.k),
    }
    denom = terms["var"] + terms["mui"] + terms["dt"] + terms["dr"] + terms["awgn"]
    rates = cfg.prefactor * np.log2(1.0 + terms["desired"] / denom)
    return rates, terms


# ---------------------------------------------------------------------------
# Monte Carlo path
# ---------------------------------------------------------------------------

@dataclass
class TermAccumulator:
    """Running sums of per-trial term samples (commutative, order independent)."""

    k: int
    n: int = 0
    failures: int = 0
    sum_c: np.ndarray = None
    sum_c2: np.ndarray = None
    sum_d: np.ndarray = None
    sum_d2: np.ndarray = None
    sum_derr2: np.ndarray = None
    sums: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sum_c = np.zeros(self.k, dtype=complex)
        self.sum_c2 = np.zeros(self.k)
        self.sum_d = np.zeros(self.k, dtype=complex)
        self.sum_d2 = np.zeros(self.k)
        self.sum_derr2 = np.zeros(self.k)
        for name in ("ei", "mui", "dt", "dr", "wn2", "mui_d", "dt_d", "dr_d"):
            self.sums[name] = np.zeros(self.k)

    def add(self, c, ei, mui, dt, dr, wn2, d, d_hat, mui_d, dt_d, dr_d):
        self.n += 1
        self.sum_c += c
        self.sum_c2 += np.abs(c) ** 2
        self.sum_d += d
        self.sum_d2 += np.abs(d) ** 2
        self.sum_derr2 += np.abs(d - d_hat) ** 2
        for name, val in (("ei", ei), ("mui", mui), ("dt", dt), ("dr", dr),
                          ("wn2", wn2), ("mui_d", mui_d), ("dt_d", dt_d), ("dr_d", dr_d)):
            self.sums[name] += val

    def mean(self, name: str) -> np.ndarray:
        return self.sums[name] / self.n

    def mean_c(self) -> np.ndarray:
        return self.sum_c / self.n

    def var_c(self) -> np.ndarray:
        return np.maximum(self.sum_c2 / self.n - np.abs(self.mean_c()) ** 2, 0.0)

    def mean_d(self) -> np.ndarray:
        return self.sum_d / self.n

    def var_d(self) -> np.ndarray:
        """Mean squared estimation-error leakage |d - d_hat|^2.

        This measures the variance contribution of the channel estimation
        error through the transmit beamformer, which is the piece the
        large-array rate expression counts; the residual hardening
        fluctuation of the beamforming gain is excluded (it is dominated by
        the desired power at scale).
        """
        return self.sum_derr2 / self.n


def _draw_trial(cfg: SystemConfig, rng) -> tuple:
    """Standard-normal blocks for one trial, in the canonical draw order."""
    k, n_r, n_t, n_s, n_d, tau = cfg.k, cfg.n_r, cfg.n_t, cfg.n_s, cfg.n_d, cfg.tau
    x_sr = np.empty((k, n_r, n_s), dtype=complex)
    x_rd = np.empty((k, n_t, n_d), dtype=complex)
    for j in range(k):
        x_sr[j] = complex_normal(rng, (n_r, n_s))
    for j in range(k):
        x_rd[j] = complex_normal(rng, (n_t, n_d))
    x_ei = complex_normal(rng, (n_r, n_t))
    t_sr = np.empty((k, n_s, tau), dtype=complex)
    r_sr = np.empty((k, n_r, tau), dtype=complex)
    n_sr = np.empty((k, n_r, tau), dtype=complex)
    for j in range(k):
        t_sr[j] = complex_normal(rng, (n_s, tau))
        r_sr[j] = complex_normal(rng, (n_r, tau))
        n_sr[j] = complex_normal(rng, (n_r, tau))
    t_rd = np.empty((k, n_d, tau), dtype=complex)
    r_rd = np.empty((k, n_t, tau), dtype=complex)
    n_rd = np.empty((k, n_t, tau), dtype=complex)
    for j in range(k):
        t_rd[j] = complex_normal(rng, (n_d, tau))
        r_rd[j] = complex_normal(rng, (n_t, tau))
        n_rd[j] = complex_normal(rng, (n_t, tau))
    return x_sr, x_rd, x_ei, t_sr, r_sr, n_sr, t_rd, r_rd, n_rd


def run_monte_carlo(cfg: SystemConfig, a_r: int, a_t: int, trials: int, seed: int,
                    use_estimates: bool = True, corr: CorrelationSet | None = None,
                    stats: LinkStatistics | None = None) -> TermAccumulator:
    """Accumulate per-trial term samples over independently seeded trials."""
    if corr is None:
        corr = correlation_set(cfg)
    if stats is None:
        stats = compute_link_statistics(cfg, corr, a_r, a_t)
    factors = channel_factors(corr)
    g_est_sr = np.stack([stats.c_eff_sr[k] @ stats.gamma_sr[k] for k in range(cfg.k)])
    g_est_rd = np.stack([stats.c_eff_rd[k] @ stats.gamma_rd[k] for k in range(cfg.k)])
    p_r_h = np.ascontiguousarray(stats.p_r.conj().T)
    p_t_h = np.ascontiguousarray(stats.p_t.conj().T)
    g_bar, rx_bar, r_scale_sr, r_scale_rd = statistical_profiles(cfg, corr, stats)

    acc = TermAccumulator(k=cfg.k)
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        draws = _draw_trial(cfg, rng)
        out = kernels.trial_terms(
            cfg.e_s, cfg.e_r, cfg.nu_s, cfg.nu_d, cfg.nu_r, cfg.mu_r, cfg.mu_d,
            cfg.e_t, cfg.tau, cfg.beta_sr, cfg.beta_rd, cfg.beta_ei,
            factors.s_sr_rx, factors.s_sr_tx, factors.s_rd_rx, factors.s_rd_tx,
            factors.s_ei_rx, factors.s_ei_tx,
            p_r_h, p_t_h, stats.p_s, stats.p_d,
            g_est_sr, g_est_rd, use_estimates,
            r_scale_sr, r_scale_rd, g_bar, rx_bar, *draws)
        if not out[0]:
            acc.failures += 1
            continue
        acc.add(*out[1:])
    if acc.n == 0:
        raise SingularChannelError(
            f"all {trials} trials hit rank-deficient effective channels")
    return acc


def mc_rate_sr(cfg: SystemConfig, acc: TermAccumulator):
    """Uplink rates from accumulated samples, plus the mean term breakdown."""
    mean_c = acc.mean_c()
    terms = {
        "desired": cfg.e_s * np.abs(mean_c) ** 2,
        "var": cfg.e_s * acc.var_c(),
        "ei": acc.mean("ei"),
        "mui": acc.mean("mui"),
        "dt": acc.mean("dt"),
        "dr": acc.mean("dr"),
        "awgn": acc.mean("wn2"),
    }
    denom = (terms["var"] + terms["ei"] + terms["mui"] + terms["dt"]
             + terms["dr"] + terms["awgn"])
    rates = cfg.prefactor * np.log2(1.0 + terms["desired"] / denom)
    return rates, terms


def mc_rate_rd(cfg: SystemConfig, acc: TermAccumulator):
    """Downlink rates from accumulated samples, plus the mean term breakdown."""
    mean_d = acc.mean_d()
    terms = {
        "desired": cfg.e_r * np.abs(mean_d) ** 2,
        "var": cfg.e_r * acc.var_d(),  # estimation-error leakage, see var_d
        "mui": acc.mean("mui_d"),
        "dt": acc.mean("dt_d"),
        "dr": acc.mean("dr_d"),
        "awgn": np.ones(cfg.k),
    }
    denom = terms["var"] + terms["mui"] + terms["dt"] + terms["dr"] + terms["awgn"]
    rates = cfg.prefactor * np.log2(1.0 + terms["desired"] / denom)
    return rates, terms


def mc_uplink_terms(channels: ChannelSet, bf: BeamformerSet, est: EstimateSet,
                    cfg: SystemConfig, rng=None, corr: CorrelationSet | None = None):
    """Single-trial realized uplink terms from explicit objects.

    Vectorized numpy evaluation, independent of the fused trial kernel (the
    two are cross-checked in tests).  Symbol/distortion/noise averages are
    taken per trial, so no extra randomness is consumed.
    """
    if corr is None:
        corr = correlation_set(cfg)
    k_n = cfg.k
    w_r = bf.w_r
    w_t = bf.w_t
    g_bar, rx_bar, _, _ = statistical_profiles(cfg, corr, est.stats)

    c = np.zeros(k_n, dtype=complex)
    ei = np.zeros(k_n)
    mui = np.zeros(k_n)
    dt = np.zeros(k_n)
    dr = np.zeros(k_n)
    wn2 = np.zeros(k_n)
    for k in range(k_n):
        wk = w_r[:, k]
        c[k] = wk.conj() @ channels.h_sr[k] @ bf.p_s[k]
        wn2[k] = float(np.real(wk.conj() @ wk))
        mui[k] = sum(
            cfg.e_s[j] * abs(wk.conj() @ channels.h_sr[j] @ bf.p_s[j]) ** 2
            for j in range(k_n) if j != k)
        dt[k] = sum(
            cfg.nu_s[j] * cfg.e_s[j]
            * float(np.sum(np.abs(channels.h_sr[j].conj().T @ wk) ** 2
                           * np.abs(bf.p_s[j]) ** 2))
            for j in range(k_n))
        b = channels.h_ei.conj().T @ wk
        ei[k] = float(np.sum(cfg.e_r * np.abs(b.conj() @ w_t) ** 2)
                      + cfg.nu_r * np.sum(np.abs(b) ** 2 * g_bar))
        dr[k] = cfg.mu_r * rx_bar * wn2[k]
    return c, ei, mui, dt, dr, wn2


def mc_downlink_terms(channels: ChannelSet, bf: BeamformerSet, est: EstimateSet,
                      cfg: SystemConfig, rng=None, corr: CorrelationSet | None = None):
    """Single-trial realized downlink terms from explicit objects.

    The estimated effective channels in ``est`` supply the reference
    coefficient d_hat, so d - d_hat isolates the estimation-error leakage.
    """
    if corr is None:
        corr = correlation_set(cfg)
    k_n = cfg.k
    w_t = bf.w_t
    g_bar, _, _, _ = statistical_profiles(cfg, corr, est.stats)
    v_scaled = w_t * np.sqrt(cfg.e_r)[None, :]

    d = np.zeros(k_n, dtype=complex)
    d_hat = np.zeros(k_n, dtype=complex)
    mui_d = np.zeros(k_n)
    dt_d = np.zeros(k_n)
    dr_d = np.zeros(k_n)
    for k in range(k_n):
        h_eff = channels.h_rd[k].conj().T @ w_t   # N_D x K after combining
        row = bf.p_d[k].conj() @ h_eff
        d[k] = row[k]
        d_hat[k] = est.h_hat_rd[k].conj() @ bf.w_t_inner[:, k]
        mui_d[k] = float(np.sum(np.abs(row) ** 2 * cfg.e_r) - np.abs(row[k]) ** 2 * cfg.e_r[k])
        u = channels.h_rd[k] @ bf.p_d[k]
        dt_d[k] = cfg.nu_r * float(np.sum(g_bar * np.abs(u) ** 2))
        m = channels.h_rd[k].conj().T @ v_scaled
        rx_d = 1.0 + np.sum(np.abs(m) ** 2, axis=1) + cfg.nu_r * (np.abs(channels.h_rd[k]) ** 2).T @ g_bar
        dr_d[k] = cfg.mu_d[k] * float(np.sum(np.abs(bf.p_d[k]) ** 2 * rx_d))
    return d, d_hat, mui_d, dt_d, dr_d


# ---------------------------------------------------------------------------
# single-antenna upper bound (linear processing, large arrays)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointState:
    """Converged interference-whitening matrix and auxiliary scalars."""

    psi: np.ndarray
    delta: dict
    rho: float
    iterations: int
    residual: float


def fixed_point_psi(cfg: SystemConfig, corr: CorrelationSet, k: int,
                    tol: float = 1e-8, max_iter: int = 500) -> FixedPointState:
    """Fixed point defining the uplink whitening matrix in single-antenna mode.

    Iterates the auxiliary scalars from 1/rho until the self-consistency
    residual drops below ``tol``; raises :class:`ConvergenceError` otherwise.
    """
    if not cfg.is_single_antenna():
        raise ModeError("fixed point requires single-antenna sources/destinations")
    rho = cfg.beta_ei * cfg.nu_r * float(np.sum(cfg.e_r)) + 1.0
    theta = float(relay_rx_distortion_cov_closed_form(cfg).diag[0])
    others = [l for l in range(cfg.k) if l != k]
    coeff = {l: cfg.nu_s[l] * cfg.e_s[l] * cfg.beta_sr[l] for l in others}
    delta = {l: 1.0 / rho for l in others}

    def psi_of(d):
        m = (theta + rho) * np.eye(cfg.n_r, dtype=complex)
        for l in others:
            m += (coeff[l] / (cfg.n_r * (1.0 + d[l]))) * corr.c_sr[l].m
        return np.linalg.inv(m)

    residual = 0.0
    for it in range(max_iter):
        psi = psi_of(delta)
        candidate = {l: coeff[l] / cfg.n_r * float(np.real(np.trace(corr.c_sr[l].m @ psi)))
                     for l in others}
        residual = max((abs(candidate[l] - delta[l]) for l in others), default=0.0)
        if residual < tol:
            return FixedPointState(psi=psi, delta=dict(delta), rho=rho,
                                   iterations=it + 1, residual=residual)
        delta = candidate
    raise ConvergenceError(
        f"fixed point did not converge in {max_iter} iterations", residual=residual)


def upper_rate_sr(cfg: SystemConfig, corr: CorrelationSet, k: int) -> float:
    """Uplink rate bound for pair k under whitened matched filtering."""
    state = fixed_point_psi(cfg, corr, k)
    quad = cfg.e_s[k] * cfg.beta_sr[k] * float(np.real(np.trace(corr.c_sr[k].m @ state.psi)))
    return _rate(cfg.prefactor, quad / (1.0 + cfg.nu_s[k] * quad))


def upper_rate_rd(cfg: SystemConfig, k: int) -> float:
    """Downlink rate bound for pair k under eigen beamforming."""
    if not cfg.is_single_antenna():
        raise ModeError("downlink bound requires single-antenna destinations")
    e_tot = float(np.sum(cfg.e_r))
    num = cfg.n_t * cfg.beta_rd[k] * cfg.e_r[k]
    den = (cfg.nu_r * cfg.beta_rd[k] * e_tot
           + cfg.mu_d[k] * (num + cfg.nu_r * cfg.beta_rd[k] * e_tot + 1.0) + 1.0)
    return _rate(cfg.prefactor, num / den)


def simplified_upper(cfg: SystemConfig) -> float:
    """Homogeneous-network end-to-end bound; shows the impairment ceiling.

    Requires per-pair parameters {beta, E, nu_S, mu_D} identical across
    pairs.  With vanishing impairments the bound is unbounded (returns inf).
    """
    for name in ("e_s", "e_r", "nu_s", "mu_d", "beta_sr", "beta_rd"):
        arr = getattr(cfg, name)
        if not np.all(arr == arr[0]):
            raise ModeError(f"simplified bound requires homogeneous {name}")
    e_s, e_r = cfg.e_s[0], cfg.e_r[0]
    nu_s, mu_d = cfg.nu_s[0], cfg.mu_d[0]
    beta_sr = cfg.beta_sr[0]
    if e_s <= 0 or e_r < 0:
        return 0.0
    den_sr = (nu_s + (cfg.k / cfg.n_r) * cfg.mu_r * nu_s
              + (cfg.k / cfg.n_r) * cfg.nu_r * e_r * cfg.beta_ei / (e_s * beta_sr))
    den_rd = mu_d + (cfg.k / cfg.n_t) * cfg.nu_r * (1.0 + mu_d)
    with np.errstate(divide="ignore"):
        sinr = min(np.divide(1.0, den_sr) if den_sr > 0 else np.inf,
                   np.divide(1.0, den_rd) if den_rd > 0 else np.inf)
    return _rate(cfg.prefactor, sinr)


# ---------------------------------------------------------------------------
# reporting and scaling probe
# ---------------------------------------------------------------------------

@dataclass
class RateReport:
    """Per-pair rates (arrays over k) plus the SR-hop term breakdown."""

    rate_sr_mc: np.ndarray
    rate_rd_mc: np.ndarray
    rate_e2e_mc: np.ndarray
    rate_sr_asym: np.ndarray
    rate_rd_asym: np.ndarray
    rate_e2e_asym: np.ndarray
    breakdown: dict
    prefactor: float
    mc_failures: int = 0

    @property
    def se_mc(self) -> float:
        return float(np.sum(self.rate_e2e_mc))

    @property
    def se_asym(self) -> float:
        return float(np.sum(self.rate_e2e_asym))

    @property
    def se_total(self) -> float:
        se = self.se_asym
        return se if np.isfinite(se) else self.se_mc


def evaluate_rates(cfg: SystemConfig, a_r: int, a_t: int, mode: str = "asym",
                   trials: int = 1000, seed: int = 0,
                   corr: CorrelationSet | None = None) -> RateReport:
    """Evaluate MC and/or closed-form rates for one scenario."""
    if corr is None:
        corr = correlation_set(cfg)
    stats = compute_link_statistics(cfg, corr, a_r, a_t)
    nan = np.full(cfg.k, np.nan)
    sr_mc = rd_mc = nan
    sr_as = rd_as = nan
    breakdown = {}
    failures = 0
    if mode in ("asym", "both"):
        sr_as, breakdown = asym_rate_sr_hia(cfg, corr, stats)
        rd_as, _ = asym_rate_rd_hia(cfg, corr, stats)
    if mode in ("mc", "both"):
        acc = run_monte_carlo(cfg, a_r, a_t, trials, seed, corr=corr, stats=stats)
        sr_mc, terms_mc = mc_rate_sr(cfg, acc)
        rd_mc, _ = mc_rate_rd(cfg, acc)
        failures = acc.failures
        if mode == "mc":
            breakdown = terms_mc
    return RateReport(
        rate_sr_mc=sr_mc, rate_rd_mc=rd_mc,
        rate_e2e_mc=np.minimum(sr_mc, rd_mc),
        rate_sr_asym=sr_as, rate_rd_asym=rd_as,
        rate_e2e_asym=np.minimum(sr_as, rd_as),
        breakdown=breakdown, prefactor=cfg.prefactor, mc_failures=failures,
    )


@dataclass(frozen=True)
class ScalingProbe:
    """Closed-form term powers across an antenna grid with log-log slopes."""

    n_values: np.ndarray
    terms: dict        # name -> array over the grid (pair 0)
    slopes: dict       # name -> fitted log2-log2 slope (nan for all-zero terms)
    rates: np.ndarray  # end-to-end rate of pair 0 over the grid


def scaling_probe(make_scenario, n_list) -> ScalingProbe:
    """Evaluate term scaling over a monotone antenna grid.

    ``make_scenario(n)`` must return (cfg, a_r, a_t) for array size n.
    """
    n_values = np.asarray(sorted(n_list), dtype=float)
    names = ("desired", "var", "ei", "mui", "dt", "dr", "awgn")
    collected = {name: [] for name in names}
    rates = []
    for n in n_values:
        cfg, a_r, a_t = make_scenario(int(n))
        corr = correlation_set(cfg)
        stats = compute_link_statistics(cfg, corr, a_r, a_t)
        sr, terms = asym_rate_sr_hia(cfg, corr, stats)
        rd, _ = asym_rate_rd_hia(cfg, corr, stats)
        for name in names:
            collected[name].append(float(terms[name][0]))
        rates.append(float(min(sr[0], rd[0])))
    terms = {name: np.asarray(vals) for name, vals in collected.items()}
    slopes = {}
    logn = np.log2(n_values)
    for name, vals in terms.items():
        if np.any(vals <= 0):
            slopes[name] = float("nan")
        else:
            slopes[name] = float(np.polyfit(logn, np.log2(vals), 1)[0])
    return ScalingProbe(n_values=n_values, terms=terms, slopes=slopes,
                        rates=np.asarray(rates))
