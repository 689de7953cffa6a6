"""Hot per-trial Monte Carlo kernels.

One fused kernel evaluates a full trial: correlated channel synthesis from
pre-drawn i.i.d. complex Gaussians, noisy reduced-dimension pilot
observations, LMMSE estimates, inner zero-forcing, and every realized
uplink/downlink signal, interference and distortion power.  Randomness is
drawn by the caller (numpy Generator) so the numba and numpy paths of the
same source produce matching results; see ``accel.maybe_jit``.

Distortion-noise covariances are scenario statistics (expectations over
symbols, noise and fading), matching the signal model: the caller passes
the relay-side profiles ``g_bar`` (per-antenna relay transmit power incl.
its distortion ratio base), ``rx_bar`` (relay received power per antenna)
and per-link pilot receive-distortion scales.  Destination receive
distortion keeps the realized per-antenna power (its dominant coherent
part is pair specific).

Shapes: channels are stacked per pair, e.g. ``x_sr`` is (K, N_R, N_S).
All complex arrays are complex128 and C-contiguous.
"""

import numpy as np

from .accel import maybe_jit


@maybe_jit
def _abs2(x):
    return np.real(x) ** 2 + np.imag(x) ** 2


@maybe_jit
def _hconj(a):
    return np.ascontiguousarray(a.conj().T)


@maybe_jit
def _gram_cond(gram):
    s = np.linalg.svd(gram.copy())[1]
    if s[-1] <= 0.0:
        return np.inf
    return s[0] / s[-1]


@maybe_jit
def _zf_receive_cols(h_hat):
    """W = H (H^H H)^{-1}; returns (W, ok flag)."""
    gram = _hconj(h_hat) @ h_hat
    if _gram_cond(gram) > 1e10:
        return np.zeros_like(h_hat), False
    return h_hat @ np.linalg.inv(gram), True


@maybe_jit
def _zf_transmit_cols(h_hat):
    """W = H (H^H H)^{-1} Upsilon^{-1/2} with unit-norm columns; (W, ups, ok)."""
    k = h_hat.shape[1]
    gram = _hconj(h_hat) @ h_hat
    ups = np.zeros(k)
    if _gram_cond(gram) > 1e10:
        return np.zeros_like(h_hat), ups, False
    ginv = np.linalg.inv(gram)
    w = h_hat @ ginv
    for l in range(k):
        ups[l] = np.real(ginv[l, l])
        w[:, l] = w[:, l] / np.sqrt(ups[l])
    return w, ups, True


@maybe_jit
def _pilot_obs(channel, h_eff, p_outer_h, p_node, nu_tx, e_t, tau, r_scale,
               t_std, r_std, n_std):
    """Noisy reduced-dimension pilot observation for one link.

    t_std (N_tx, tau), r_std/n_std (N_rx, tau) are i.i.d. CN(0,1);
    ``r_scale`` is the precomputed standard deviation of the receiver's
    distortion during training.
    """
    abs_p = np.abs(p_node)
    t_mat = np.sqrt(nu_tx * e_t) * (abs_p.reshape(-1, 1) * t_std)
    corrupt = channel @ t_mat + r_scale * r_std + n_std
    comb = np.sum(corrupt, axis=1) * np.sqrt(e_t)
    return h_eff + (p_outer_h @ comb) / (tau * e_t)


@maybe_jit
def trial_terms(
    e_s, e_r, nu_s, nu_d, nu_r, mu_r, mu_d, e_t, tau,
    beta_sr, beta_rd, beta_ei,
    s_sr_rx, s_sr_tx, s_rd_rx, s_rd_tx, s_ei_rx, s_ei_tx,
    p_r_h, p_t_h, p_s, p_d,
    g_est_sr, g_est_rd, use_estimates,
    r_scale_sr, r_scale_rd, g_bar, rx_bar,
    x_sr, x_rd, x_ei, t_sr, r_sr, n_sr, t_rd, r_rd, n_rd,
):
    """All realized per-pair terms for one Monte Carlo trial.

    Returns (ok, c, ei, mui, dt, dr, wn2, d, d_hat, mui_d, dt_d, dr_d):
    ``c``/``d`` are the complex desired-signal coefficients of the two hops
    and ``d_hat`` the downlink coefficient with the estimated channel in
    place of the true one (so d - d_hat isolates the estimation-error
    leakage).  The rest are realized linear powers (conditional on the drawn
    channels, averaged over symbols, distortion and noise).  ``ok`` is False
    when the inner zero-forcing hit a rank-deficient effective channel.
    """
    k_pairs = e_s.shape[0]
    n_r = s_ei_rx.shape[0]
    n_t = s_ei_tx.shape[0]
    n_s = p_s.shape[1]
    n_d = p_d.shape[1]
    a_r = p_r_h.shape[0]
    a_t = p_t_h.shape[0]

    c = np.zeros(k_pairs, dtype=np.complex128)
    d = np.zeros(k_pairs, dtype=np.complex128)
    d_hat = np.zeros(k_pairs, dtype=np.complex128)
    ei = np.zeros(k_pairs)
    mui = np.zeros(k_pairs)
    dt = np.zeros(k_pairs)
    dr = np.zeros(k_pairs)
    wn2 = np.zeros(k_pairs)
    mui_d = np.zeros(k_pairs)
    dt_d = np.zeros(k_pairs)
    dr_d = np.zeros(k_pairs)

    # channel synthesis
    h_sr = np.zeros((k_pairs, n_r, n_s), dtype=np.complex128)
    h_rd = np.zeros((k_pairs, n_t, n_d), dtype=np.complex128)
    for k in range(k_pairs):
        h_sr[k] = np.sqrt(beta_sr[k]) * (s_sr_rx[k] @ (x_sr[k] @ s_sr_tx[k]))
        h_rd[k] = np.sqrt(beta_rd[k]) * (s_rd_rx[k] @ (x_rd[k] @ s_rd_tx[k]))
    h_ei = np.sqrt(beta_ei) * (s_ei_rx @ (x_ei @ s_ei_tx))

    # effective channels and (optionally) their LMMSE estimates
    h_eff_sr = np.zeros((a_r, k_pairs), dtype=np.complex128)
    h_eff_rd = np.zeros((a_t, k_pairs), dtype=np.complex128)
    h_zf_sr = np.zeros((a_r, k_pairs), dtype=np.complex128)
    h_zf_rd = np.zeros((a_t, k_pairs), dtype=np.complex128)
    for k in range(k_pairs):
        h_eff_sr[:, k] = p_r_h @ (h_sr[k] @ p_s[k])
        h_eff_rd[:, k] = p_t_h @ (h_rd[k] @ p_d[k])
    if use_estimates:
        for k in range(k_pairs):
            z_sr = _pilot_obs(h_sr[k], h_eff_sr[:, k].copy(), p_r_h, p_s[k],
                              nu_s[k], e_t, tau, r_scale_sr[k],
                              t_sr[k], r_sr[k], n_sr[k])
            h_zf_sr[:, k] = g_est_sr[k] @ z_sr
        for k in range(k_pairs):
            z_rd = _pilot_obs(h_rd[k], h_eff_rd[:, k].copy(), p_t_h, p_d[k],
                              nu_d[k], e_t, tau, r_scale_rd[k],
                              t_rd[k], r_rd[k], n_rd[k])
            h_zf_rd[:, k] = g_est_rd[k] @ z_rd
    else:
        h_zf_sr = h_eff_sr.copy()
        h_zf_rd = h_eff_rd.copy()

    w_r_inner, ok_r = _zf_receive_cols(h_zf_sr)
    w_t_inner, _, ok_t = _zf_transmit_cols(h_zf_rd)
    if not (ok_r and ok_t):
        return False, c, ei, mui, dt, dr, wn2, d, d_hat, mui_d, dt_d, dr_d

    # relay transmit: full beamformer and per-stream scaled columns
    w_t_full = np.ascontiguousarray(p_t_h.conj().T) @ w_t_inner    # N_T x K
    v_scaled = np.zeros((n_t, k_pairs), dtype=np.complex128)
    for l in range(k_pairs):
        v_scaled[:, l] = np.sqrt(e_r[l]) * w_t_full[:, l]

    # uplink terms
    p_r_cols = np.ascontiguousarray(p_r_h.conj().T)                # N_R x A_R
    for k in range(k_pairs):
        w_inner_k = w_r_inner[:, k].copy()
        c[k] = np.sum(np.conj(w_inner_k) * h_eff_sr[:, k])
        wn2[k] = np.real(np.sum(np.conj(w_inner_k) * w_inner_k))
        acc_mui = 0.0
        for j in range(k_pairs):
            if j != k:
                cross = np.sum(np.conj(w_inner_k) * h_eff_sr[:, j])
                acc_mui += e_s[j] * (np.real(cross) ** 2 + np.imag(cross) ** 2)
        mui[k] = acc_mui

        w_full_k = p_r_cols @ w_inner_k                            # N_R
        acc_dt = 0.0
        for j in range(k_pairs):
            v = _hconj(h_sr[j]) @ w_full_k                         # N_S
            acc_dt += nu_s[j] * e_s[j] * np.sum(_abs2(v) * _abs2(p_s[j]))
        dt[k] = acc_dt

        b = _hconj(h_ei) @ w_full_k                                # N_T
        acc_ei = 0.0
        for l in range(k_pairs):
            dot = np.sum(np.conj(b) * w_t_full[:, l])
            acc_ei += e_r[l] * (np.real(dot) ** 2 + np.imag(dot) ** 2)
        acc_ei += nu_r * np.sum(_abs2(b) * g_bar)
        ei[k] = acc_ei

        dr[k] = mu_r * rx_bar * wn2[k]

    # downlink terms
    for k in range(k_pairs):
        d[k] = np.sum(np.conj(h_eff_rd[:, k]) * w_t_inner[:, k])
        d_hat[k] = np.sum(np.conj(h_zf_rd[:, k]) * w_t_inner[:, k])
        acc_mui = 0.0
        for j in range(k_pairs):
            if j != k:
                cross = np.sum(np.conj(h_eff_rd[:, k]) * w_t_inner[:, j])
                acc_mui += e_r[j] * (np.real(cross) ** 2 + np.imag(cross) ** 2)
        mui_d[k] = acc_mui

        u = h_rd[k] @ p_d[k]                                       # N_T
        dt_d[k] = nu_r * np.sum(g_bar * _abs2(u))

        m = _hconj(h_rd[k]) @ v_scaled                             # N_D x K
        rx_d = 1.0 + np.sum(_abs2(m), axis=1) + nu_r * (_abs2(h_rd[k]).T @ g_bar)
        dr_d[k] = mu_d[k] * np.sum(_abs2(p_d[k]) * rx_d)

    return True, c, ei, mui, dt, dr, wn2, d, d_hat, mui_d, dt_d, dr_d
