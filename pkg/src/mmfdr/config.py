"""Scenario configuration for the multi-pair full-duplex relay network.

A :class:`SystemConfig` fully parameterizes one scenario: antenna counts,
coherence/training structure, transmit powers, RF-chain impairment levels,
large-scale fading variances and antenna correlation coefficients.  All
powers are linear (not dB).  Per-pair quantities are length-``K`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError


def db_to_linear(x):
    """Convert dB to linear scale."""
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def _per_pair(value, k: int, name: str) -> np.ndarray:
    """Broadcast a scalar to a length-K float array, or validate an array."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(k, float(arr[0]))
    if arr.shape != (k,):
        raise ConfigError(f"{name} must be a scalar or length-{k} sequence, got shape {arr.shape}")
    return arr


def _per_pair_complex(value, k: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=complex))
    if arr.size == 1:
        arr = np.full(k, complex(arr[0]))
    if arr.shape != (k,):
        raise ConfigError(f"{name} must be a scalar or length-{k} sequence, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SystemConfig:
    """One fully specified relaying scenario.

    Attributes
    ----------
    k : number of source-destination pairs.
    n_s, n_d : antennas per source / destination.
    n_r, n_t : relay receive / transmit antennas.
    t : coherence interval in symbols.
    tau : pilot length per node in symbols.
    e_s, e_r : per-pair source powers and relay per-stream powers (linear).
    e_s_max, e_r_max : power caps (per source, total relay).
    e_t : pilot symbol power.
    nu_s, nu_d, nu_r : transmit-impairment levels (sources, destinations, relay).
    mu_r, mu_d : receive-impairment levels (relay, destinations).
    beta_sr, beta_rd, beta_ei : large-scale fading variances.
    r_sr, r_rd, r_ei : complex antenna correlation coefficients per link.
    """

    k: int
    n_s: int
    n_d: int
    n_r: int
    n_t: int
    t: int
    tau: int
    e_s: np.ndarray
    e_r: np.ndarray
    e_s_max: np.ndarray
    e_r_max: float
    e_t: float
    nu_s: np.ndarray
    nu_d: np.ndarray
    nu_r: float
    mu_r: float
    mu_d: np.ndarray
    beta_sr: np.ndarray
    beta_rd: np.ndarray
    beta_ei: float
    r_sr: np.ndarray = field(default=None)
    r_rd: np.ndarray = field(default=None)
    r_ei: complex = 0.0

    def __post_init__(self):
        k = int(self.k)
        for name in ("e_s", "e_r", "e_s_max", "nu_s", "nu_d", "mu_d", "beta_sr", "beta_rd"):
            object.__setattr__(self, name, _per_pair(getattr(self, name), k, name))
        r_sr = self.r_sr if self.r_sr is not None else 0.0
        r_rd = self.r_rd if self.r_rd is not None else 0.0
        object.__setattr__(self, "r_sr", _per_pair_complex(r_sr, k, "r_sr"))
        object.__setattr__(self, "r_rd", _per_pair_complex(r_rd, k, "r_rd"))
        object.__setattr__(self, "r_ei", complex(self.r_ei))
        for name in ("k", "n_s", "n_d", "n_r", "n_t", "t", "tau"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("e_r_max", "e_t", "nu_r", "mu_r", "beta_ei"):
            object.__setattr__(self, name, float(getattr(self, name)))
        self._validate()
        for name in ("e_s", "e_r", "e_s_max", "nu_s", "nu_d", "mu_d",
                     "beta_sr", "beta_rd", "r_sr", "r_rd"):
            getattr(self, name).flags.writeable = False

    def _validate(self):
        if self.k < 1:
            raise ConfigError("need at least one source-destination pair")
        if min(self.n_s, self.n_d, self.n_r, self.n_t) < 1:
            raise ConfigError("antenna counts must be positive")
        if self.k > min(self.n_r, self.n_t):
            raise ConfigError(
                f"K={self.k} exceeds min(N_R, N_T)={min(self.n_r, self.n_t)}")
        if self.tau < 1:
            raise ConfigError("pilot length tau must be >= 1")
        if self.t <= 2 * self.k * self.tau:
            raise ConfigError(
                f"coherence interval T={self.t} must exceed 2*K*tau={2 * self.k * self.tau}")
        for name in ("e_s", "e_r", "e_s_max", "nu_s", "nu_d", "mu_d", "beta_sr", "beta_rd"):
            if np.any(getattr(self, name) < 0):
                raise ConfigError(f"{name} entries must be nonnegative")
        if self.e_r_max < 0 or self.e_t < 0 or self.nu_r < 0 or self.mu_r < 0 or self.beta_ei < 0:
            raise ConfigError("powers and impairment levels must be nonnegative")
        if float(np.sum(self.e_r)) > self.e_r_max * (1 + 1e-9):
            raise ConfigError(
                f"sum of relay stream powers {np.sum(self.e_r):g} exceeds cap {self.e_r_max:g}")
        tol = 1 + 1e-12
        if np.any(np.abs(self.r_sr) > tol) or np.any(np.abs(self.r_rd) > tol) or abs(self.r_ei) > tol:
            raise ConfigError("correlation coefficients must satisfy |r| <= 1")

    @property
    def prefactor(self) -> float:
        """Fraction of the coherence block left for data after training."""
        return (self.t - 2 * self.k * self.tau) / self.t

    def default_a_r(self) -> int:
        return max(self.k, (2 * self.n_r) // 3)

    def default_a_t(self) -> int:
        return max(self.k, (2 * self.n_t) // 3)

    def is_single_antenna(self) -> bool:
        return self.n_s == 1 and self.n_d == 1

    def is_homogeneous(self) -> bool:
        """True when all per-pair parameters are identical across pairs."""
        return all(
            np.allclose(arr, arr[0], rtol=0.0, atol=0.0)
            for arr in (self.e_s, self.e_r, self.nu_s, self.nu_d, self.mu_d,
                        self.beta_sr, self.beta_rd, self.r_sr, self.r_rd)
        )

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.copy() if isinstance(v, np.ndarray) else v
        return out


def draw_correlation_phases(cfg: SystemConfig, r0: float, r_ei_mag: float,
                            rng: np.random.Generator) -> SystemConfig:
    """Assign per-link correlation coefficients with the given magnitudes.

    Every desired-link coefficient gets magnitude ``r0`` and an independent
    phase drawn uniformly from [0, pi]; the loopback coefficient gets
    magnitude ``r_ei_mag`` and its own phase.  Phases are drawn once per
    scenario.
    """
    if not (0 <= r0 <= 1 and 0 <= r_ei_mag <= 1):
        raise ConfigError("correlation magnitudes must lie in [0, 1]")
    ph_sr = rng.uniform(0.0, np.pi, cfg.k)
    ph_rd = rng.uniform(0.0, np.pi, cfg.k)
    ph_ei = rng.uniform(0.0, np.pi)
    return cfg.replace(
        r_sr=r0 * np.exp(1j * ph_sr),
        r_rd=r0 * np.exp(1j * ph_rd),
        r_ei=r_ei_mag * np.exp(1j * ph_ei),
    )
