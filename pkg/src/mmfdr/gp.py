"""Geometric programming via a log-domain interior-point method.

A program holds a posynomial objective, posynomial <= 1 constraints, and
monomial = 1 constraints over positive variables.  The change of variables
y = log x turns posynomials into log-sum-exp functions (convex) and
monomial equalities into affine equalities; the solver then runs a standard
barrier method with feasible-start Newton steps and a backtracking line
search.  Accuracy targets: relative objective error <= 1e-6, constraint
violation <= 1e-8, KKT stationarity residual <= 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

GP_REL_TOL = 1e-6
GP_FEAS_TOL = 1e-8
_GAP_TOL = 1e-7
_NEWTON_TOL = 1e-30
_KKT_TOL = 1e-9
_MU = 20.0
_Y_BOUND = 200.0


@dataclass(frozen=True)
class Monomial:
    """c * prod_i x_i^a_i with c > 0."""

    coeff: float
    exps: np.ndarray

    def __post_init__(self):
        if self.coeff <= 0:
            raise ConfigError("monomial coefficients must be positive")
        object.__setattr__(self, "exps", np.asarray(self.exps, dtype=float))


@dataclass
class PosynomialProgram:
    """min posynomial  s.t.  posynomials <= 1, monomials = 1, x > 0."""

    n_vars: int
    var_names: list = None
    objective: list = field(default_factory=list)       # list[Monomial]
    constraints_le: list = field(default_factory=list)  # list[list[Monomial]]
    constraints_eq: list = field(default_factory=list)  # list[Monomial]

    def __post_init__(self):
        if self.var_names is None:
            self.var_names = [f"x{i}" for i in range(self.n_vars)]

    def term(self, coeff: float, **powers) -> Monomial:
        exps = np.zeros(self.n_vars)
        for name, p in powers.items():
            exps[self.var_names.index(name)] = p
        return Monomial(coeff=float(coeff), exps=exps)

    def minimize(self, *terms: Monomial):
        self.objective = list(terms)

    def add_le(self, *terms: Monomial):
        if not terms:
            raise ConfigError("constraint needs at least one monomial")
        self.constraints_le.append(list(terms))

    def add_eq(self, term: Monomial):
        self.constraints_eq.append(term)


@dataclass
class GPResult:
    """Solution report: assignment, objective and optimality certificates."""

    status: str                 # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    log_objective: float
    kkt_residual: float
    max_violation: float
    iterations: int
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _lse_pack(terms):
    a = np.stack([m.exps for m in terms])
    b = np.log(np.array([m.coeff for m in terms]))
    return a, b


def _lse(a, b, y):
    z = a @ y + b
    zmax = np.max(z)
    return zmax + np.log(np.sum(np.exp(z - zmax)))


def _lse_grad_hess(a, b, y):
    z = a @ y + b
    zmax = np.max(z)
    w = np.exp(z - zmax)
    w /= np.sum(w)
    val = zmax + np.log(np.sum(np.exp(z - zmax)))
    grad = a.T @ w
    hess = a.T @ (a * w[:, None]) - np.outer(grad, grad)
    return val, grad, hess


def _project_equalities(a_eq, b_eq, n):
    if a_eq is None or a_eq.shape[0] == 0:
        return np.zeros(n)
    y, *_ = np.linalg.lstsq(a_eq, -b_eq, rcond=None)
    if np.max(np.abs(a_eq @ y + b_eq)) > 1e-9:
        return None
    return y


def _newton_barrier(obj, cons, a_eq, b_eq, y0, t):
    """Minimize f0 - (1/t) sum log(-f_j) over {A_eq y + b_eq = 0} from feasible y0.

    The potential is normalized by t so its values stay O(1) and the line
    search keeps resolution at large t; the stationarity residual of the
    original KKT system is then the potential gradient directly.  Returns
    (y, dual nu, converged flag).
    """
    n = y0.shape[0]
    y = y0.copy()
    nu = np.zeros(0 if a_eq is None else a_eq.shape[0])
    best = None   # (residual, y, nu): guards the pure-Newton polish phase

    def potential(yv):
        val = _lse(obj[0], obj[1], yv) if obj is not None else 0.0
        for a, b in cons:
            fj = _lse(a, b, yv)
            if fj >= 0:
                return np.inf
            val -= np.log(-fj) / t
        return val

    for _ in range(200):
        if obj is not None:
            f0, g0, h0 = _lse_grad_hess(obj[0], obj[1], y)
        else:
            f0, g0, h0 = 0.0, np.zeros(n), np.zeros((n, n))
        grad = g0.copy()
        hess = h0.copy()
        pot0 = f0
        feasible = True
        for a, b in cons:
            fj, gj, hj = _lse_grad_hess(a, b, y)
            if fj >= 0:
                return y, nu, False
            pot0 -= np.log(-fj) / t
            grad += gj / (t * (-fj))
            hess += np.outer(gj, gj) / (t * fj ** 2) + hj / (t * (-fj))
        hess = hess + 1e-14 * np.eye(n)

        if a_eq is not None and a_eq.shape[0] > 0:
            m = a_eq.shape[0]
            kkt = np.block([[hess, a_eq.T], [a_eq, np.zeros((m, m))]])
            rhs = np.concatenate([-grad, np.zeros(m)])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            dy, nu = sol[:n], sol[n:]
            resid = float(np.max(np.abs(grad + a_eq.T @ nu)))
        else:
            try:
                dy = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                dy, *_ = np.linalg.lstsq(hess, -grad, rcond=None)
            nu = np.zeros(0)
            resid = float(np.max(np.abs(grad)))

        if best is None or resid < best[0]:
            best = (resid, y.copy(), nu.copy())
        decrement = float(-grad @ dy)
        if resid < _KKT_TOL or decrement / 2.0 < _NEWTON_TOL:
            return y, nu, True

        if decrement > 1e-12:
            step = 1.0
            while step > 1e-14 and potential(y + step * dy) > pot0 - 0.25 * step * decrement:
                step *= 0.5
            if step <= 1e-14:
                return best[1], best[2], True
        else:
            # predicted decrease below float resolution of the potential:
            # pure Newton polish, only backing off to stay strictly feasible
            step = 1.0
            while step > 1e-14 and not np.isfinite(potential(y + step * dy)):
                step *= 0.5
            if step <= 1e-14:
                return best[1], best[2], True
        y = y + step * dy
        if np.max(np.abs(y)) > _Y_BOUND:
            return y, nu, False
    return best[1], best[2], True


def _barrier_solve(obj, cons, a_eq, b_eq, y0):
    """Full barrier path; returns (y, nu, t_final, ok)."""
    y = y0
    nu = np.zeros(0)
    t = 1.0
    m = max(len(cons), 1)
    while True:
        y, nu, ok = _newton_barrier(obj, cons, a_eq, b_eq, y, t)
        if not ok:
            return y, nu, t, False
        if m / t < _GAP_TOL:
            return y, nu, t, True
        t *= _MU


def _phase_one(cons, a_eq, b_eq, n):
    """Find a strictly feasible y, or report the infeasibility margin.

    Minimizes the worst constraint value s over a large log-domain box
    (the box and the floor s >= -1 keep the subproblem bounded without
    excluding any practically representable point).
    """
    y0 = _project_equalities(a_eq, b_eq, n)
    if y0 is None:
        return None, np.inf
    worst = max((_lse(a, b, y0) for a, b in cons), default=-1.0)
    if worst < -1e-12:
        return y0, worst
    # augmented problem over (y, s): minimize s with f_j(y) <= s
    box = 0.5 * _Y_BOUND
    aug_cons = []
    for a, b in cons:
        aug_cons.append((np.hstack([a, -np.ones((a.shape[0], 1))]), b))
    for i in range(n):
        e_i = np.zeros((1, n + 1))
        e_i[0, i] = 1.0
        aug_cons.append((e_i, np.array([-box])))
        aug_cons.append((-e_i, np.array([-box])))
    s_floor = np.zeros((1, n + 1))
    s_floor[0, n] = -1.0
    aug_cons.append((s_floor, np.array([-1.0])))
    aug_obj = (np.hstack([np.zeros((1, n)), np.ones((1, 1))]), np.zeros(1))
    aug_eq = None if a_eq is None or a_eq.shape[0] == 0 else np.hstack(
        [a_eq, np.zeros((a_eq.shape[0], 1))])
    y_aug = np.concatenate([y0, [max(worst + 1.0, -0.5)]])
    y_aug, _, _, _ = _barrier_solve(aug_obj, aug_cons, aug_eq, b_eq, y_aug)
    y, s = y_aug[:n], float(y_aug[n])
    worst = max((_lse(a, b, y) for a, b in cons), default=-1.0)
    if worst < -1e-12:
        return y, worst
    return None, s


def solve_gp(prog: PosynomialProgram) -> GPResult:
    """Solve the program; never raises on infeasibility (reports status)."""
    n = prog.n_vars
    if not prog.objective:
        raise ConfigError("program has no objective")
    obj = _lse_pack(prog.objective)
    cons = [_lse_pack(terms) for terms in prog.constraints_le]
    if prog.constraints_eq:
        a_eq = np.stack([m.exps for m in prog.constraints_eq])
        b_eq = np.log(np.array([m.coeff for m in prog.constraints_eq]))
    else:
        a_eq, b_eq = np.zeros((0, n)), np.zeros(0)

    y0, margin = _phase_one(cons, a_eq, b_eq, n)
    if y0 is None:
        return GPResult(status="infeasible", x=None, objective=np.nan,
                        log_objective=np.nan, kkt_residual=np.nan,
                        max_violation=margin, iterations=0,
                        message=f"phase-one margin {margin:.3e} (needs < 0)")

    y, nu, t, ok = _barrier_solve(obj, cons, a_eq, b_eq, y0)
    if not ok:
        return GPResult(status="unbounded", x=np.exp(np.minimum(y, 300.0)), objective=np.nan,
                        log_objective=np.nan, kkt_residual=np.nan,
                        max_violation=np.nan, iterations=0,
                        message="barrier iterate diverged; objective unbounded below")

    # KKT certificates at the final central point
    _, g0, _ = _lse_grad_hess(obj[0], obj[1], y)
    r_stat = g0.copy()
    for a, b in cons:
        fj, gj, _ = _lse_grad_hess(a, b, y)
        r_stat += gj / (t * (-fj))
    if a_eq.shape[0] > 0 and nu.size == a_eq.shape[0]:
        r_stat += a_eq.T @ (nu / t)
    violations = [np.exp(_lse(a, b, y)) - 1.0 for a, b in cons]
    violations += list(np.abs(np.exp(a_eq @ y + b_eq) - 1.0))
    f0 = _lse(obj[0], obj[1], y)
    return GPResult(status="optimal", x=np.exp(y), objective=float(np.exp(f0)),
                    log_objective=float(f0),
                    kkt_residual=float(np.max(np.abs(r_stat))),
                    max_violation=float(max(violations, default=0.0)),
                    iterations=int(np.ceil(np.log(t) / np.log(_MU))) + 1)
