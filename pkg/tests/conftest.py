import numpy as np
import pytest

from mmfdr.config import SystemConfig, draw_correlation_phases


def make_config(k=2, n_s=2, n_d=2, n_r=16, n_t=16, e_db=3.0, e_t_db=10.0,
                nu=0.01, mu=0.01, beta_ei=1.0, r0=0.3, r_ei=0.7,
                t=300, tau=2, phase_seed=11, **overrides):
    """Small scenario with every impairment source active."""
    e = float(10 ** (e_db / 10))
    base = dict(
        k=k, n_s=n_s, n_d=n_d, n_r=n_r, n_t=n_t, t=t, tau=tau,
        e_s=e, e_r=e, e_s_max=e, e_r_max=k * e, e_t=float(10 ** (e_t_db / 10)),
        nu_s=nu, nu_d=nu, nu_r=nu, mu_r=mu, mu_d=mu,
        beta_sr=1.0, beta_rd=1.0, beta_ei=beta_ei,
    )
    base.update(overrides)
    cfg = SystemConfig(**base)
    return draw_correlation_phases(cfg, r0, r_ei, np.random.default_rng(phase_seed))


@pytest.fixture
def small_cfg():
    return make_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
