"""Antenna correlation matrices and correlated Rayleigh channel sampling.

Channels follow the separable (Kronecker) correlation model: a draw is
``sqrt(beta) * C_rx^{1/2} X C_tx^{1/2}`` with ``X`` i.i.d. standard circular
complex Gaussian.  Correlation matrices are Hermitian Toeplitz with unit
diagonal and bounded spectral radius; the exponential model parameterizes
them by a single complex coefficient per link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigError, NotPSDError

HERMITIAN_TOL = 1e-12
PSD_TOL = -1e-10
SQRT_CLAMP_TOL = -1e-8


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian Toeplitz unit-diagonal PSD correlation matrix."""

    m: np.ndarray
    rank_deficient: bool = False

    @property
    def n(self) -> int:
        return self.m.shape[0]

    def validate(self):
        """Check the structural invariants; raises on violation."""
        m = self.m
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("correlation matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ConfigError("correlation matrix is not Hermitian")
        for d in range(m.shape[0]):
            diag = np.diagonal(m, offset=d)
            if np.max(np.abs(diag - diag[0])) > HERMITIAN_TOL:
                raise ConfigError("correlation matrix is not Toeplitz")
        if abs(m[0, 0] - 1.0) > HERMITIAN_TOL:
            raise ConfigError("correlation matrix must have unit diagonal")
        evals = np.linalg.eigvalsh(m)
        if evals[0] < PSD_TOL:
            raise NotPSDError(f"smallest eigenvalue {evals[0]:.3e} below tolerance")
        if evals[-1] > m.shape[0] + 1e-9:
            raise ConfigError("spectral radius exceeds matrix dimension")
        return self


def _as_matrix(c) -> np.ndarray:
    return c.m if isinstance(c, CorrelationMatrix) else np.asarray(c, dtype=complex)


def build_exponential_correlation(n: int, r: complex) -> CorrelationMatrix:
    """Exponential correlation matrix: entry (l, j) = r^(j-l) for l <= j.

    The lower triangle is the conjugate mirror.  |r| = 1 is allowed but
    produces a rank-1 matrix, flagged via ``rank_deficient``.
    """
    if n < 1:
        raise ConfigError("dimension must be >= 1")
    r = complex(r)
    if abs(r) > 1 + 1e-12:
        raise ConfigError(f"|r| = {abs(r):g} exceeds 1")
    powers = r ** np.arange(n)
    idx = np.arange(n)
    lag = idx[None, :] - idx[:, None]
    m = np.where(lag >= 0, powers[np.abs(lag)], np.conj(powers[np.abs(lag)]))
    m = np.ascontiguousarray(m.astype(complex))
    return CorrelationMatrix(m=m, rank_deficient=bool(abs(abs(r) - 1.0) < 1e-12 and n > 1))


def hermitian_sqrt(c) -> np.ndarray:
    """Hermitian PSD square root S with S @ S^H = C.

    Eigenvalues in [SQRT_CLAMP_TOL, 0) are treated as numerical noise and
    clamped to zero; anything lower raises :class:`NotPSDError`.
    """
    m = _as_matrix(c)
    evals, evecs = np.linalg.eigh(m)
    if evals[0] < SQRT_CLAMP_TOL:
        raise NotPSDError(f"matrix is not PSD: smallest eigenvalue {evals[0]:.3e}")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def sorted_eigh(c):
    """Eigendecomposition with eigenvalues sorted descending.

    Eigenvector phase is fixed by making each column's largest-magnitude
    component real and positive, so results are reproducible across runs.
    Ties are broken by the underlying LAPACK order (stable under the
    descending flip).
    """
    m = _as_matrix(c)
    evals, evecs = np.linalg.eigh(m)
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1].copy()
    for j in range(evecs.shape[1]):
        i = int(np.argmax(np.abs(evecs[:, j])))
        pivot = evecs[i, j]
        if abs(pivot) > 0:
            evecs[:, j] *= np.conj(pivot) / abs(pivot)
    return evals, evecs


@dataclass(frozen=True)
class CorrelationSet:
    """All per-link correlation matrices of one scenario."""

    c_sr: list          # K matrices, N_R x N_R (relay receive side)
    ct_sr: list         # K matrices, N_S x N_S (source transmit side)
    c_rd: list          # K matrices, N_T x N_T (relay transmit side)
    ct_rd: list         # K matrices, N_D x N_D (destination side)
    c_ei: CorrelationMatrix     # N_R x N_R
    ct_ei: CorrelationMatrix    # N_T x N_T


def correlation_set(cfg: SystemConfig) -> CorrelationSet:
    """Build every link's correlation matrices from the scenario coefficients."""
    return CorrelationSet(
        c_sr=[build_exponential_correlation(cfg.n_r, cfg.r_sr[k]) for k in range(cfg.k)],
        ct_sr=[build_exponential_correlation(cfg.n_s, cfg.r_sr[k]) for k in range(cfg.k)],
        c_rd=[build_exponential_correlation(cfg.n_t, cfg.r_rd[k]) for k in range(cfg.k)],
        ct_rd=[build_exponential_correlation(cfg.n_d, cfg.r_rd[k]) for k in range(cfg.k)],
        c_ei=build_exponential_correlation(cfg.n_r, cfg.r_ei),
        ct_ei=build_exponential_correlation(cfg.n_t, cfg.r_ei),
    )


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization of every link."""

    h_sr: list      # K matrices, N_R x N_S
    h_rd: list      # K matrices, N_T x N_D
    h_ei: np.ndarray  # N_R x N_T


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. standard circular complex Gaussian draws (unit variance per entry)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channel(c_rx, c_tx, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Draw sqrt(beta) * C_rx^{1/2} X C_tx^{1/2} with X i.i.d. CN(0, 1)."""
    if beta < 0:
        raise ConfigError("fading variance must be nonnegative")
    s_rx = hermitian_sqrt(c_rx)
    s_tx = hermitian_sqrt(c_tx)
    x = complex_normal(rng, (s_rx.shape[0], s_tx.shape[0]))
    return np.sqrt(beta) * (s_rx @ x @ s_tx)


@dataclass(frozen=True)
class ChannelFactors:
    """Precomputed matrix square roots so repeated draws skip the eigensolves."""

    s_sr_rx: np.ndarray   # (K, N_R, N_R)
    s_sr_tx: np.ndarray   # (K, N_S, N_S)
    s_rd_rx: np.ndarray   # (K, N_T, N_T)
    s_rd_tx: np.ndarray   # (K, N_D, N_D)
    s_ei_rx: np.ndarray   # (N_R, N_R)
    s_ei_tx: np.ndarray   # (N_T, N_T)


def channel_factors(corr: CorrelationSet) -> ChannelFactors:
    return ChannelFactors(
        s_sr_rx=np.stack([hermitian_sqrt(c) for c in corr.c_sr]),
        s_sr_tx=np.stack([hermitian_sqrt(c) for c in corr.ct_sr]),
        s_rd_rx=np.stack([hermitian_sqrt(c) for c in corr.c_rd]),
        s_rd_tx=np.stack([hermitian_sqrt(c) for c in corr.ct_rd]),
        s_ei_rx=hermitian_sqrt(corr.c_ei),
        s_ei_tx=hermitian_sqrt(corr.ct_ei),
    )


def sample_channel_set(cfg: SystemConfig, rng: np.random.Generator,
                       factors: ChannelFactors | None = None) -> ChannelSet:
    """Draw one fading realization of all K + K + 1 links.

    Draw order is fixed (SR links, RD links, loopback link) so a given seed
    always produces bitwise identical output.
    """
    if factors is None:
        factors = channel_factors(correlation_set(cfg))
    h_sr = [
        np.sqrt(cfg.beta_sr[k])
        * (factors.s_sr_rx[k] @ complex_normal(rng, (cfg.n_r, cfg.n_s)) @ factors.s_sr_tx[k])
        for k in range(cfg.k)
    ]
    h_rd = [
        np.sqrt(cfg.beta_rd[k])
        * (factors.s_rd_rx[k] @ complex_normal(rng, (cfg.n_t, cfg.n_d)) @ factors.s_rd_tx[k])
        for k in range(cfg.k)
    ]
    h_ei = np.sqrt(cfg.beta_ei) * (
        factors.s_ei_rx @ complex_normal(rng, (cfg.n_r, cfg.n_t)) @ factors.s_ei_tx)
    return ChannelSet(h_sr=h_sr, h_rd=h_rd, h_ei=h_ei)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-style per-trial stream: independent of trial execution order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(trial))))
