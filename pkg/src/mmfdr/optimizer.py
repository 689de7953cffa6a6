"""Joint DOF and power optimization on the closed-form SINR model.

The large-array SINRs are linear-fractional in the transmit powers with
fixed nonnegative coefficients, so power control condenses (via a monomial
approximation of 1 + gamma) into a sequence of geometric programs; the DOF
parameters are then improved by alternating 1-D sweeps over sampled
candidate sets.  An energy-efficiency variant minimizes total power under a
spectral-efficiency target turned into a monomial equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .errors import ConfigError
from .estimation import compute_link_statistics
from .gp import GPResult, Monomial, PosynomialProgram, solve_gp
from .model import CorrelationSet, correlation_set
from .rates import rd_coefficients, sr_coefficients

POWER_TOL = 1e-4
GP_ROUNDS = 30


@dataclass(frozen=True)
class SinrModel:
    """Fixed SINR coefficients for one (A_R, A_T) choice.

    gamma_SR,k = E_S,k / (sum_j a_r[k,j] E_S,j + sum_j b_r[k,j] E_R,j + awgn_sr[k])
    gamma_RD,k = gain_rd[k] E_R,k / (sum_j b_d[k,j] E_R,j + awgn_rd[k])
    """

    a_r_mat: np.ndarray
    b_r_mat: np.ndarray
    b_d_mat: np.ndarray
    awgn_sr: np.ndarray
    gain_rd: np.ndarray
    awgn_rd: np.ndarray
    prefactor: float
    a_r: int
    a_t: int

    @property
    def k(self) -> int:
        return self.awgn_sr.shape[0]

    def gamma_sr(self, e_s: np.ndarray, e_r: np.ndarray) -> np.ndarray:
        return e_s / (self.a_r_mat @ e_s + self.b_r_mat @ e_r + self.awgn_sr)

    def gamma_rd(self, e_r: np.ndarray) -> np.ndarray:
        return self.gain_rd * e_r / (self.b_d_mat @ e_r + self.awgn_rd)

    def gamma(self, e_s: np.ndarray, e_r: np.ndarray) -> np.ndarray:
        return np.minimum(self.gamma_sr(e_s, e_r), self.gamma_rd(e_r))

    def se(self, e_s: np.ndarray, e_r: np.ndarray) -> float:
        return float(self.prefactor * np.sum(np.log2(1.0 + self.gamma(e_s, e_r))))


def build_sinr_model(cfg: SystemConfig, corr: CorrelationSet | None,
                     a_r: int, a_t: int) -> SinrModel:
    """Assemble the power-coefficient model from the link statistics."""
    if corr is None:
        corr = correlation_set(cfg)
    stats = compute_link_statistics(cfg, corr, a_r, a_t)
    sr = sr_coefficients(cfg, corr, stats)
    rd = rd_coefficients(cfg, corr, stats)
    return SinrModel(
        a_r_mat=sr.a, b_r_mat=sr.b, b_d_mat=rd.b,
        awgn_sr=sr.awgn, gain_rd=rd.gain, awgn_rd=rd.const,
        prefactor=cfg.prefactor, a_r=a_r, a_t=a_t,
    )


@dataclass(frozen=True)
class PowerAllocation:
    """Feasible power/DOF decision: 0 <= E_S <= caps, sum E_R <= cap."""

    e_s: np.ndarray
    e_r: np.ndarray
    a_r: int
    a_t: int


def monomial_approx(gamma_hat: np.ndarray):
    """Best local monomial fit of 1 + gamma around gamma_hat.

    Returns (omega, theta) with theta * gamma^omega <= 1 + gamma for all
    gamma > 0 and equality at gamma_hat.
    """
    g = np.asarray(gamma_hat, dtype=float)
    if np.any(g <= 0):
        raise ConfigError("monomial approximation requires gamma_hat > 0")
    omega = g / (1.0 + g)
    theta = g ** (-omega) * (1.0 + g)
    return omega, theta


@dataclass
class PowerControlResult:
    allocation: PowerAllocation
    se: float
    gamma: np.ndarray
    iterations: int
    objective_history: list = field(default_factory=list)
    status: str = "optimal"
    gp_report: GPResult | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _program_vars(k: int):
    names = ([f"es{j}" for j in range(k)] + [f"er{j}" for j in range(k)]
             + [f"g{j}" for j in range(k)])
    return names


def _mono(prog: PosynomialProgram, coeff: float, pairs):
    """Monomial with exponents accumulated additively (repeated vars add)."""
    exps = np.zeros(prog.n_vars)
    for name, p in pairs:
        exps[prog.var_names.index(name)] += p
    return Monomial(coeff=float(coeff), exps=exps)


def _add_sinr_constraints(prog: PosynomialProgram, model: SinrModel,
                          e_s_max: np.ndarray, e_r_max: float):
    """C1/C2 (SINR definitions) and C3/C4 (power caps)."""
    k = model.k
    for i in range(k):
        terms = []
        for j in range(k):
            if model.a_r_mat[i, j] > 0:
                terms.append(_mono(prog, model.a_r_mat[i, j],
                                   [(f"es{j}", 1), (f"es{i}", -1), (f"g{i}", 1)]))
            if model.b_r_mat[i, j] > 0:
                terms.append(_mono(prog, model.b_r_mat[i, j],
                                   [(f"er{j}", 1), (f"es{i}", -1), (f"g{i}", 1)]))
        terms.append(_mono(prog, model.awgn_sr[i], [(f"es{i}", -1), (f"g{i}", 1)]))
        prog.add_le(*terms)

        terms = []
        for j in range(k):
            if model.b_d_mat[i, j] > 0:
                terms.append(_mono(prog, model.b_d_mat[i, j] / model.gain_rd[i],
                                   [(f"er{j}", 1), (f"er{i}", -1), (f"g{i}", 1)]))
        terms.append(_mono(prog, model.awgn_rd[i] / model.gain_rd[i],
                           [(f"er{i}", -1), (f"g{i}", 1)]))
        prog.add_le(*terms)

        prog.add_le(_mono(prog, 1.0 / e_s_max[i], [(f"es{i}", 1)]))
    prog.add_le(*[_mono(prog, 1.0 / e_r_max, [(f"er{j}", 1)]) for j in range(k)])


def _init_powers(model: SinrModel, e_s_max: np.ndarray, e_r_max: float, init):
    if init is not None:
        return np.asarray(init[0], dtype=float), np.asarray(init[1], dtype=float)
    return e_s_max.copy(), np.full(model.k, e_r_max / model.k)


def power_control_fixed_dof(model: SinrModel, e_s_max, e_r_max: float,
                            init=None, tol: float = POWER_TOL,
                            max_iter: int = GP_ROUNDS) -> PowerControlResult:
    """Successive-GP power control at fixed DOF.

    Starts from the cap allocation (sources at caps, relay power uniform),
    condenses the objective around the current SINRs and re-solves until the
    SINRs stop moving.  The product objective is non-decreasing across
    iterations.
    """
    e_s_max = np.asarray(e_s_max, dtype=float)
    if np.any(e_s_max <= 0) or e_r_max <= 0:
        raise ConfigError("power caps must be positive")
    k = model.k
    e_s, e_r = _init_powers(model, e_s_max, e_r_max, init)
    gamma_hat = model.gamma(e_s, e_r)
    history = [float(np.prod(1.0 + gamma_hat))]

    result_gamma = gamma_hat
    for it in range(max_iter):
        omega, theta = monomial_approx(gamma_hat)
        prog = PosynomialProgram(n_vars=3 * k, var_names=_program_vars(k))
        prog.minimize(_mono(prog, float(np.prod(theta ** -1.0)),
                            [(f"g{i}", -omega[i]) for i in range(k)]))
        _add_sinr_constraints(prog, model, e_s_max, e_r_max)
        res = solve_gp(prog)
        if not res.ok:
            return PowerControlResult(
                allocation=PowerAllocation(e_s=e_s, e_r=e_r, a_r=model.a_r, a_t=model.a_t),
                se=model.se(e_s, e_r), gamma=result_gamma, iterations=it,
                objective_history=history, status=res.status, gp_report=res)
        e_s = res.x[:k]
        e_r = res.x[k:2 * k]
        result_gamma = model.gamma(e_s, e_r)
        history.append(float(np.prod(1.0 + result_gamma)))
        move = float(np.max(np.abs(result_gamma - gamma_hat)))
        gamma_hat = result_gamma
        if move < tol:
            break
    # clip solver-precision cap overshoot
    e_s = np.minimum(e_s, e_s_max)
    if np.sum(e_r) > e_r_max:
        e_r = e_r * (e_r_max / np.sum(e_r))
    # prefer the cap allocation when it ties (breaks the degeneracy left by
    # hops that are indifferent to extra power)
    cand_er = e_r * (e_r_max / np.sum(e_r)) if np.sum(e_r) > 0 else e_r
    if model.se(e_s_max, cand_er) >= model.se(e_s, e_r) * (1 - 1e-12):
        e_s, e_r = e_s_max.copy(), cand_er
    gamma = model.gamma(e_s, e_r)
    return PowerControlResult(
        allocation=PowerAllocation(e_s=e_s, e_r=e_r, a_r=model.a_r, a_t=model.a_t),
        se=model.se(e_s, e_r), gamma=gamma, iterations=it + 1,
        objective_history=history)


def power_min_fixed_dof(model: SinrModel, e_s_max, e_r_max: float, target_se: float,
                        tol: float = POWER_TOL, max_iter: int = GP_ROUNDS) -> PowerControlResult:
    """Minimize total transmit power subject to a total-SE equality target."""
    e_s_max = np.asarray(e_s_max, dtype=float)
    k = model.k
    feas = power_control_fixed_dof(model, e_s_max, e_r_max, tol=tol, max_iter=max_iter)
    if not feas.ok or feas.se < target_se:
        return PowerControlResult(
            allocation=feas.allocation, se=feas.se, gamma=feas.gamma,
            iterations=feas.iterations, objective_history=feas.objective_history,
            status="infeasible", gp_report=feas.gp_report)

    g_target = 2.0 ** (target_se / model.prefactor)

    def project(gamma):
        # rescale so prod(1 + gamma) hits the target surface
        scale = (g_target / np.prod(1.0 + gamma)) ** (1.0 / k)
        return np.maximum(scale * (1.0 + gamma) - 1.0, 1e-9)

    e_s, e_r = feas.allocation.e_s, feas.allocation.e_r
    gamma_hat = project(model.gamma(e_s, e_r))
    history = [float(np.sum(e_s) + np.sum(e_r))]
    for it in range(max_iter):
        omega, theta = monomial_approx(gamma_hat)
        prog = PosynomialProgram(n_vars=3 * k, var_names=_program_vars(k))
        prog.minimize(*[_mono(prog, 1.0, [(f"es{j}", 1)]) for j in range(k)],
                      *[_mono(prog, 1.0, [(f"er{j}", 1)]) for j in range(k)])
        _add_sinr_constraints(prog, model, e_s_max, e_r_max)
        prog.add_eq(_mono(prog, float(np.prod(theta)) / g_target,
                          [(f"g{i}", omega[i]) for i in range(k)]))
        res = solve_gp(prog)
        if not res.ok:
            return PowerControlResult(
                allocation=PowerAllocation(e_s=e_s, e_r=e_r, a_r=model.a_r, a_t=model.a_t),
                se=model.se(e_s, e_r), gamma=gamma_hat, iterations=it,
                objective_history=history, status=res.status, gp_report=res)
        e_s = np.minimum(res.x[:k], e_s_max)
        e_r = res.x[k:2 * k]
        if np.sum(e_r) > e_r_max:
            e_r = e_r * (e_r_max / np.sum(e_r))
        history.append(float(np.sum(e_s) + np.sum(e_r)))
        new_hat = np.maximum(model.gamma(e_s, e_r), 1e-9)
        move = float(np.max(np.abs(new_hat - gamma_hat)))
        gamma_hat = new_hat
        # SE must sit on the target surface, not merely have stable SINRs
        if move < tol and abs(model.se(e_s, e_r) - target_se) < 1e-4:
            break
    return PowerControlResult(
        allocation=PowerAllocation(e_s=e_s, e_r=e_r, a_r=model.a_r, a_t=model.a_t),
        se=model.se(e_s, e_r), gamma=model.gamma(e_s, e_r), iterations=it + 1,
        objective_history=history)


def default_dof_subsets(cfg: SystemConfig):
    """Uniformly sampled DOF candidates: step max(10, N // K) starting at K."""
    step_r = max(10, cfg.n_r // cfg.k)
    step_t = max(10, cfg.n_t // cfg.k)
    a_r_set = sorted(set(list(range(cfg.k, cfg.n_r + 1, step_r)) + [cfg.n_r]))
    a_t_set = sorted(set(list(range(cfg.k, cfg.n_t + 1, step_t)) + [cfg.n_t]))
    return a_r_set, a_t_set


@dataclass
class JdpoResult:
    allocation: PowerAllocation
    se: float
    gamma: np.ndarray
    rounds: int
    skipped: int = 0        # infeasible/failed grid points
    ee: float | None = None
    total_power: float | None = None


def _jdpo_search(cfg: SystemConfig, corr, a_r_set, a_t_set, rounds, solve_at):
    """Alternating 1-D argmax over the DOF grids; ``solve_at`` maps
    (a_r, a_t) -> (score, PowerControlResult) with higher score better."""
    if corr is None:
        corr = correlation_set(cfg)
    a_r_set = sorted(a_r_set)
    a_t_set = sorted(a_t_set)
    for a in a_r_set:
        if not cfg.k <= a <= cfg.n_r:
            raise ConfigError(f"A_R candidate {a} outside [{cfg.k}, {cfg.n_r}]")
    for a in a_t_set:
        if not cfg.k <= a <= cfg.n_t:
            raise ConfigError(f"A_T candidate {a} outside [{cfg.k}, {cfg.n_t}]")

    cache: dict = {}
    skipped = 0

    def eval_point(a_r, a_t):
        nonlocal skipped
        if (a_r, a_t) not in cache:
            try:
                score, res = solve_at(corr, a_r, a_t)
            except (np.linalg.LinAlgError, ConfigError):
                score, res = None, None
            if score is None or res is None or not res.ok:
                skipped += 1
                cache[(a_r, a_t)] = (None, None)
            else:
                cache[(a_r, a_t)] = (score, res)
        return cache[(a_r, a_t)]

    def clamp(target, candidates):
        return min(candidates, key=lambda a: (abs(a - target), a))

    a_t_cur = clamp(max(cfg.k, (2 * cfg.n_t) // 3), a_t_set)
    a_r_cur = clamp(max(cfg.k, (2 * cfg.n_r) // 3), a_r_set)
    best_score, best_res = eval_point(a_r_cur, a_t_cur)
    done_rounds = 0
    for _ in range(rounds):
        moved = False
        for a_r in a_r_set:
            score, res = eval_point(a_r, a_t_cur)
            if score is not None and (best_score is None or score > best_score + 1e-12):
                best_score, best_res, a_r_cur = score, res, a_r
                moved = True
        for a_t in a_t_set:
            score, res = eval_point(a_r_cur, a_t)
            if score is not None and (best_score is None or score > best_score + 1e-12):
                best_score, best_res, a_t_cur = score, res, a_t
                moved = True
        done_rounds += 1
        if not moved:
            break
    return best_res, done_rounds, skipped


def jdpo(cfg: SystemConfig, corr: CorrelationSet | None = None,
         a_r_set=None, a_t_set=None, rounds: int = 3,
         tol: float = POWER_TOL, max_iter: int = GP_ROUNDS) -> JdpoResult:
    """Maximize spectral efficiency over powers and DOF parameters."""
    if a_r_set is None or a_t_set is None:
        d_r, d_t = default_dof_subsets(cfg)
        a_r_set = a_r_set if a_r_set is not None else d_r
        a_t_set = a_t_set if a_t_set is not None else d_t

    def solve_at(corr_, a_r, a_t):
        model = build_sinr_model(cfg, corr_, a_r, a_t)
        res = power_control_fixed_dof(model, cfg.e_s_max, cfg.e_r_max,
                                      tol=tol, max_iter=max_iter)
        return (res.se if res.ok else None), res

    best, done, skipped = _jdpo_search(cfg, corr, a_r_set, a_t_set, rounds, solve_at)
    if best is None:
        raise ConfigError("every DOF grid point was infeasible")
    return JdpoResult(allocation=best.allocation, se=best.se, gamma=best.gamma,
                      rounds=done, skipped=skipped)


def jdpo_ee(cfg: SystemConfig, target_se: float, corr: CorrelationSet | None = None,
            a_r_set=None, a_t_set=None, rounds: int = 3,
            tol: float = POWER_TOL, max_iter: int = GP_ROUNDS) -> JdpoResult:
    """Maximize energy efficiency (SE / total power) at a fixed SE target."""
    if target_se <= 0:
        raise ConfigError("target spectral efficiency must be positive")
    if a_r_set is None or a_t_set is None:
        d_r, d_t = default_dof_subsets(cfg)
        a_r_set = a_r_set if a_r_set is not None else d_r
        a_t_set = a_t_set if a_t_set is not None else d_t

    def solve_at(corr_, a_r, a_t):
        model = build_sinr_model(cfg, corr_, a_r, a_t)
        res = power_min_fixed_dof(model, cfg.e_s_max, cfg.e_r_max, target_se,
                                  tol=tol, max_iter=max_iter)
        if not res.ok:
            return None, res
        power = float(np.sum(res.allocation.e_s) + np.sum(res.allocation.e_r))
        return -power, res

    best, done, skipped = _jdpo_search(cfg, corr, a_r_set, a_t_set, rounds, solve_at)
    if best is None:
        raise ConfigError(f"SE target {target_se:g} infeasible at every DOF grid point")
    power = float(np.sum(best.allocation.e_s) + np.sum(best.allocation.e_r))
    return JdpoResult(allocation=best.allocation, se=best.se, gamma=best.gamma,
                      rounds=done, skipped=skipped,
                      ee=target_se / power, total_power=power)
