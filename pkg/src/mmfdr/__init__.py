"""Multi-pair full-duplex relaying with hardware-impaired massive arrays.

Simulation and analysis of a decode-and-forward relay serving K
source-destination pairs: correlated channel models with transmit/receive
distortion noise, a two-stage impairment-aware transceiver, reduced
dimension LMMSE channel estimation, Monte Carlo and closed-form large-array
rate evaluation, and joint DOF/power optimization via successive geometric
programming.
"""

from .config import SystemConfig, db_to_linear, draw_correlation_phases
from .errors import (ConfigError, ConvergenceError, MMFDRError, ModeError,
                     NotPSDError, SingularChannelError)
from .estimation import (EstimateSet, LinkStatistics, check_dof_scaling,
                         compute_link_statistics, effective_cov, lmmse_estimate,
                         lmmse_gain, simulate_pilot_rx)
from .experiment import (CSV_COLUMNS, ExperimentSpec, parse_config, preset,
                         run_experiment, serialize_config, write_csv)
from .gp import GPResult, Monomial, PosynomialProgram, solve_gp
from .impairments import (DistortionCov, ei_expected_cov,
                          relay_rx_distortion_cov_closed_form, rx_distortion_cov,
                          sample_distortion, tx_distortion_cov)
from .model import (ChannelSet, CorrelationMatrix, CorrelationSet,
                    build_exponential_correlation, channel_factors, complex_normal,
                    correlation_set, hermitian_sqrt, sample_channel,
                    sample_channel_set, sorted_eigh, trial_rng)
from .optimizer import (JdpoResult, PowerAllocation, SinrModel, build_sinr_model,
                        jdpo, jdpo_ee, monomial_approx, power_control_fixed_dof)
from .rates import (FixedPointState, RateReport, asym_rate_rd_hia, asym_rate_sr_hia,
                    e2e_rate, evaluate_rates, fixed_point_psi, mc_downlink_terms,
                    mc_rate_rd, mc_rate_sr, mc_uplink_terms, run_monte_carlo,
                    scaling_probe, simplified_upper, upper_rate_rd, upper_rate_sr)
from .transceiver import (BeamformerSet, build_hia_beamformers, dest_bf, eigen_bf_rd,
                          inner_zf, outer_bf, source_bf, upper_bound_rx_bf)

__version__ = "0.1.0"
