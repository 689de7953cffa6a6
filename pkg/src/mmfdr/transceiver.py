"""Beamformer construction.

The relay uses a two-stage scheme: statistical outer beamformers that
project onto the weakly coupled eigenspace of the loopback-interference
correlation (suppressing self-interference without instantaneous loopback
CSI), and inner zero-forcing beamformers on the reduced-dimension effective
channels.  Sources and destinations use the dominant eigenvector of their
local transmit-side correlation.  The single-antenna bound path uses a
whitened matched filter and an eigen beamformer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularChannelError
from .model import CorrelationSet, _as_matrix, sorted_eigh

ZF_COND_LIMIT = 1e10


@dataclass(frozen=True)
class BeamformerSet:
    """All beamformers of one scenario realization.

    ``w_r_inner`` columns satisfy w^H h_eff = delta_kj exactly on the
    channels they were built from; ``p_t @ w_t_inner`` columns have unit
    norm.  ``p_r``/``p_t`` have orthonormal columns.
    """

    p_r: np.ndarray         # N_R x A_R
    p_t: np.ndarray         # N_T x A_T
    w_r_inner: np.ndarray   # A_R x K
    w_t_inner: np.ndarray   # A_T x K
    upsilon: np.ndarray     # K diagonal normalizers
    p_s: np.ndarray         # K x N_S unit vectors
    p_d: np.ndarray         # K x N_D unit vectors
    a_r: int
    a_t: int

    @property
    def w_r(self) -> np.ndarray:
        """Full relay receive beamformer, N_R x K."""
        return self.p_r @ self.w_r_inner

    @property
    def w_t(self) -> np.ndarray:
        """Full relay transmit beamformer, N_T x K (unit-norm columns)."""
        return self.p_t @ self.w_t_inner


def outer_bf(c_ei, c_ei_tx, a_r: int, a_t: int):
    """Outer beamformers: eigenvectors of the A smallest loopback eigenvalues.

    Column j of the receive (transmit) matrix is the eigenvector paired with
    the (N - A + j)-th largest eigenvalue of the receive-side (transmit-side)
    loopback correlation, so later columns see weaker coupling.
    """
    m_rx = _as_matrix(c_ei)
    m_tx = _as_matrix(c_ei_tx)
    n_r, n_t = m_rx.shape[0], m_tx.shape[0]
    if not (1 <= a_r <= n_r) or not (1 <= a_t <= n_t):
        raise ConfigError(f"DOF parameters out of range: A_R={a_r} (<= {n_r}), A_T={a_t} (<= {n_t})")
    _, v_rx = sorted_eigh(m_rx)
    _, v_tx = sorted_eigh(m_tx)
    p_r = np.ascontiguousarray(v_rx[:, n_r - a_r:])
    p_t = np.ascontiguousarray(v_tx[:, n_t - a_t:])
    return p_r, p_t


def source_bf(c_tx_sr_k) -> np.ndarray:
    """Dominant eigenvector of the source-side correlation (phase-normalized)."""
    _, v = sorted_eigh(c_tx_sr_k)
    return np.ascontiguousarray(v[:, 0])


def dest_bf(c_tx_rd_k) -> np.ndarray:
    """Dominant eigenvector of the destination-side correlation."""
    _, v = sorted_eigh(c_tx_rd_k)
    return np.ascontiguousarray(v[:, 0])


def inner_zf(h_eff_sr: np.ndarray, h_eff_rd: np.ndarray):
    """Zero-forcing inner beamformers from effective channel matrices.

    Receive side: W = H (H^H H)^{-1}.  Transmit side additionally normalizes
    each column to unit norm through the diagonal matrix Upsilon with
    Upsilon_ll = [ (H^H H)^{-1} ]_ll.
    """
    w_r = _zf_receive(h_eff_sr)
    w_t, upsilon = _zf_transmit(h_eff_rd)
    return w_r, w_t, upsilon


def _gram_inverse(h: np.ndarray) -> np.ndarray:
    gram = h.conj().T @ h
    if not np.all(np.isfinite(gram)):
        raise SingularChannelError("effective channel contains non-finite entries")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > ZF_COND_LIMIT:
        raise SingularChannelError(
            f"effective channel Gram matrix condition number {cond:.3e} exceeds {ZF_COND_LIMIT:g}")
    return np.linalg.inv(gram)


def _zf_receive(h: np.ndarray) -> np.ndarray:
    return h @ _gram_inverse(h)


def _zf_transmit(h: np.ndarray):
    gram_inv = _gram_inverse(h)
    upsilon = np.real(np.diagonal(gram_inv)).copy()
    w = (h @ gram_inv) / np.sqrt(upsilon)[None, :]
    return w, upsilon


def upper_bound_rx_bf(q: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Whitened matched filter Q^{-1} h / ||Q^{-1} h||."""
    try:
        w = np.linalg.solve(q, h)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("interference-plus-noise covariance is singular") from exc
    nrm = np.linalg.norm(w)
    if not np.isfinite(nrm) or nrm == 0:
        raise SingularChannelError("whitened matched filter collapsed to zero")
    return w / nrm


def eigen_bf_rd(h_rd: np.ndarray) -> np.ndarray:
    """Matched (eigen) transmit beamformer h / ||h||."""
    nrm = np.linalg.norm(h_rd)
    if nrm == 0:
        raise ConfigError("cannot normalize a zero channel vector")
    return h_rd / nrm


def build_hia_beamformers(corr: CorrelationSet, a_r: int, a_t: int,
                          h_eff_sr: np.ndarray, h_eff_rd: np.ndarray) -> BeamformerSet:
    """Assemble the full two-stage beamformer set for one realization.

    ``h_eff_sr`` (A_R x K) and ``h_eff_rd`` (A_T x K) are effective channels
    (true or estimated) already reduced by the outer beamformers.
    """
    p_r, p_t = outer_bf(corr.c_ei, corr.ct_ei, a_r, a_t)
    k = h_eff_sr.shape[1]
    w_r, w_t, upsilon = inner_zf(h_eff_sr, h_eff_rd)
    p_s = np.stack([source_bf(corr.ct_sr[j]) for j in range(k)])
    p_d = np.stack([dest_bf(corr.ct_rd[j]) for j in range(k)])
    return BeamformerSet(p_r=p_r, p_t=p_t, w_r_inner=w_r, w_t_inner=w_t,
                         upsilon=upsilon, p_s=p_s, p_d=p_d, a_r=a_r, a_t=a_t)
