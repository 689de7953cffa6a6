"""Experiment specification, config-file parsing, presets and CSV output.

A config file is a sectioned key-value text file with sections
[topology] [powers] [impairments] [correlation] [training] [mc] [optimizer].
Power keys accept a ``_db`` suffix for decibel input.  Per-pair values are
space-separated lists (scalars broadcast).  Unknown keys are rejected with
the offending line.
"""

from __future__ import annotations

import configparser
import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SystemConfig, db_to_linear, draw_correlation_phases
from .errors import ConfigError
from .model import correlation_set
from .optimizer import jdpo, jdpo_ee
from .rates import evaluate_rates

CSV_COLUMNS = [
    "sweep_var", "sweep_value", "k",
    "rate_sr_mc", "rate_rd_mc", "rate_e2e_mc",
    "rate_sr_asym", "rate_rd_asym", "rate_e2e_asym",
    "se_total", "p_desired", "p_var", "p_ei", "p_mui", "p_dt", "p_dr",
    "a_r", "a_t", "e_s", "e_r",
]

MODES = ("mc", "asym", "both", "optimize-se", "optimize-ee")
COUPLINGS = ("none", "square", "square_scaled", "split200", "nu_all")

_SECTION_KEYS = {
    "topology": {"k", "n_s", "n_d", "n_r", "n_t", "a_r", "a_t"},
    "powers": {"e_s", "e_r", "e_s_max", "e_r_max", "e_t"},
    "impairments": {"nu_s", "nu_d", "nu_r", "mu_r", "mu_d"},
    "correlation": {"r0", "r_ei", "phase_seed", "beta_sr", "beta_rd", "beta_ei"},
    "training": {"t", "tau"},
    "mc": {"mode", "trials", "seed", "sweep", "values", "coupling", "out",
           "workers", "name", "notes"},
    "optimizer": {"objective", "target_se", "rounds", "max_gp_iter", "tol"},
}

_PER_PAIR = {"e_s", "e_r", "e_s_max", "nu_s", "nu_d", "mu_d", "beta_sr", "beta_rd"}
_DB_ALLOWED = {"e_s", "e_r", "e_s_max", "e_r_max", "e_t", "beta_sr", "beta_rd",
               "beta_ei", "values"}


@dataclass
class ExperimentSpec:
    """One experiment: a base scenario, an optional sweep, and a run mode."""

    name: str = "custom"
    mode: str = "asym"
    trials: int = 1000
    seed: int = 0
    out: str | None = None
    workers: int = 1
    notes: str = ""

    sweep_var: str | None = None
    sweep_values: tuple = ()
    coupling: str = "none"

    # topology / training
    k: int = 1
    n_s: int = 1
    n_d: int = 1
    n_r: int = 32
    n_t: int = 32
    a_r: int | str = "auto"
    a_t: int | str = "auto"
    t: int = 300
    tau: int = 2

    # powers (linear)
    e_s: tuple | None = None
    e_r: tuple | None = None
    e_s_max: tuple = (1.0,)
    e_r_max: float | None = None
    e_t: float = 10.0

    # impairments
    nu_s: tuple = (0.0,)
    nu_d: tuple = (0.0,)
    nu_r: float = 0.0
    mu_r: float = 0.0
    mu_d: tuple = (0.0,)

    # channel statistics
    beta_sr: tuple = (1.0,)
    beta_rd: tuple = (1.0,)
    beta_ei: float = 1.0
    r0: float = 0.0
    r_ei: float = 0.0
    phase_seed: int | None = None

    # optimizer settings
    objective: str = "se"
    target_se: float | None = None
    rounds: int = 3
    max_gp_iter: int = 30
    tol: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"unknown coupling {self.coupling!r}; expected one of {COUPLINGS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sweep_var is not None:
            valid = set(SystemConfig.__dataclass_fields__) | {"target_se"}
            if self.sweep_var not in valid:
                raise ConfigError(f"sweep variable {self.sweep_var!r} is not a scenario field")
            if not self.sweep_values:
                raise ConfigError("sweep requires a non-empty value list")
        for name in ("e_s", "e_r", "e_s_max", "nu_s", "nu_d", "mu_d", "beta_sr", "beta_rd"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, tuple(float(x) for x in np.atleast_1d(v)))
        # build one scenario eagerly so bad parameters fail at parse time
        self.scenario()

    def _base_params(self) -> dict:
        e_s_max = np.array(self._broadcast(self.e_s_max))
        e_r_max = float(self.e_r_max) if self.e_r_max is not None else float(np.sum(e_s_max))
        e_s = np.array(self._broadcast(self.e_s)) if self.e_s is not None else e_s_max.copy()
        e_r = (np.array(self._broadcast(self.e_r)) if self.e_r is not None
               else np.full(self.k, e_r_max / self.k))
        return dict(
            k=self.k, n_s=self.n_s, n_d=self.n_d, n_r=self.n_r, n_t=self.n_t,
            t=self.t, tau=self.tau,
            e_s=e_s, e_r=e_r, e_s_max=e_s_max, e_r_max=e_r_max, e_t=self.e_t,
            nu_s=np.array(self._broadcast(self.nu_s)),
            nu_d=np.array(self._broadcast(self.nu_d)),
            nu_r=self.nu_r, mu_r=self.mu_r,
            mu_d=np.array(self._broadcast(self.mu_d)),
            beta_sr=np.array(self._broadcast(self.beta_sr)),
            beta_rd=np.array(self._broadcast(self.beta_rd)),
            beta_ei=self.beta_ei,
        )

    def _broadcast(self, value) -> tuple:
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            return tuple(float(arr[0]) for _ in range(self.k))
        if arr.size != self.k:
            raise ConfigError(f"per-pair list has {arr.size} entries for K={self.k}")
        return tuple(float(x) for x in arr)

    def scenario(self, sweep_value=None) -> SystemConfig:
        """Build the scenario for one sweep point (None = the base point)."""
        params = self._base_params()
        target = self.target_se
        if sweep_value is not None and self.sweep_var is not None:
            var, val = self.sweep_var, sweep_value
            if var == "target_se":
                target = val
            elif var == "k":
                spec2 = replace(self, sweep_var=None, sweep_values=(), k=int(val))
                params = spec2._base_params()
            else:
                params[var] = (int(val) if var in ("n_s", "n_d", "n_r", "n_t", "t", "tau")
                               else val)
            if self.coupling == "square" and var == "n_r":
                params["n_t"] = params["n_r"]
            elif self.coupling == "square_scaled" and var == "n_r":
                params["n_t"] = params["n_r"]
                params["n_s"] = max(1, params["n_r"] // params["k"])
                params["n_d"] = max(1, params["n_t"] // params["k"])
            elif self.coupling == "split200" and var == "n_r":
                params["n_t"] = 200 - params["n_r"]
                params["n_s"] = max(1, params["n_r"] // params["k"])
                params["n_d"] = max(1, params["n_t"] // params["k"])
            elif self.coupling == "nu_all" and var == "nu_r":
                lvl = float(val)
                for nm in ("nu_s", "nu_d", "mu_d"):
                    params[nm] = np.full(params["k"], lvl)
                params["mu_r"] = lvl
        cfg = SystemConfig(**params)
        phase_seed = self.phase_seed if self.phase_seed is not None else self.seed
        cfg = draw_correlation_phases(cfg, self.r0, self.r_ei,
                                      np.random.default_rng(phase_seed))
        self._last_target = target
        return cfg

    def dof_for(self, cfg: SystemConfig):
        a_r = cfg.default_a_r() if self.a_r == "auto" else int(self.a_r)
        a_t = cfg.default_a_t() if self.a_t == "auto" else int(self.a_t)
        return a_r, a_t


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _point_rows(spec: ExperimentSpec, sweep_value) -> list:
    cfg = spec.scenario(sweep_value)
    a_r, a_t = spec.dof_for(cfg)
    corr = correlation_set(cfg)
    sweep_var = spec.sweep_var or ""
    sval = "" if sweep_value is None else sweep_value

    if spec.mode in ("mc", "asym", "both"):
        report = evaluate_rates(cfg, a_r, a_t, mode=spec.mode,
                                trials=spec.trials, seed=spec.seed, corr=corr)
        e_s, e_r = cfg.e_s, cfg.e_r
    else:
        if spec.mode == "optimize-se":
            res = jdpo(cfg, corr, rounds=spec.rounds, tol=spec.tol,
                       max_iter=spec.max_gp_iter)
        else:
            target = getattr(spec, "_last_target", None) or spec.target_se
            if target is None:
                raise ConfigError("optimize-ee mode requires target_se")
            res = jdpo_ee(cfg, float(target), corr, rounds=spec.rounds,
                          tol=spec.tol, max_iter=spec.max_gp_iter)
        a_r, a_t = res.allocation.a_r, res.allocation.a_t
        e_s, e_r = res.allocation.e_s, res.allocation.e_r
        cfg = cfg.replace(e_s=e_s, e_r=e_r)
        report = evaluate_rates(cfg, a_r, a_t, mode="asym", corr=corr)

    bd = report.breakdown
    rows = []
    for k in range(cfg.k):
        rows.append({
            "sweep_var": sweep_var, "sweep_value": sval, "k": k,
            "rate_sr_mc": report.rate_sr_mc[k], "rate_rd_mc": report.rate_rd_mc[k],
            "rate_e2e_mc": report.rate_e2e_mc[k],
            "rate_sr_asym": report.rate_sr_asym[k], "rate_rd_asym": report.rate_rd_asym[k],
            "rate_e2e_asym": report.rate_e2e_asym[k],
            "se_total": report.se_total,
            "p_desired": bd["desired"][k], "p_var": bd["var"][k],
            "p_ei": bd.get("ei", np.zeros(cfg.k))[k], "p_mui": bd["mui"][k],
            "p_dt": bd["dt"][k], "p_dr": bd["dr"][k],
            "a_r": a_r, "a_t": a_t, "e_s": e_s[k], "e_r": e_r[k],
        })
    return rows


def run_experiment(spec: ExperimentSpec):
    """Evaluate every sweep point; returns rows ordered by sweep index."""
    points = list(spec.sweep_values) if spec.sweep_var else [None]
    if spec.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_point_rows, [spec] * len(points), points))
    else:
        chunks = [_point_rows(spec, v) for v in points]
    rows = [row for chunk in chunks for row in chunk]
    return rows


def write_csv(rows, path_or_buf) -> None:
    close = False
    if isinstance(path_or_buf, (str, bytes)):
        buf = open(path_or_buf, "w", newline="")
        close = True
    else:
        buf = path_or_buf
    try:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    finally:
        if close:
            buf.close()


def rows_to_csv_text(rows) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# config-file parsing
# ---------------------------------------------------------------------------

def _find_line(text: str, needle: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line.split("=")[0] or needle in line:
            return i
    return 0


def _parse_value(raw: str):
    parts = raw.split()
    vals = []
    for p in parts:
        try:
            vals.append(float(p))
        except ValueError:
            return raw.strip()
    if len(vals) == 1:
        return vals[0]
    return tuple(vals)


def parse_config_text(text: str) -> ExperimentSpec:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    kwargs: dict = {}
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(
                f"unknown section [{section}] (line {_find_line(text, '[' + section + ']')})")
        for key, raw in parser.items(section):
            base, is_db = key, False
            if key.endswith("_db"):
                base, is_db = key[:-3], True
            if base not in _SECTION_KEYS[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}] (line {_find_line(text, key)})")
            if is_db and base not in _DB_ALLOWED:
                raise ConfigError(f"key {key!r}: dB input not supported for {base!r}")
            val = _parse_value(raw)
            if is_db:
                val = (tuple(float(db_to_linear(v)) for v in val)
                       if isinstance(val, tuple) else float(db_to_linear(val)))
            kwargs[base] = val

    rename = {"sweep": "sweep_var", "values": "sweep_values"}
    out = {}
    for key, val in kwargs.items():
        name = rename.get(key, key)
        out[name] = val
    for name in ("k", "n_s", "n_d", "n_r", "n_t", "t", "tau", "trials", "seed",
                 "workers", "phase_seed", "rounds", "max_gp_iter"):
        if name in out and not isinstance(out[name], str):
            out[name] = int(out[name])
    for name in ("a_r", "a_t"):
        if name in out and not isinstance(out[name], str):
            out[name] = int(out[name])
    if "sweep_values" in out and not isinstance(out["sweep_values"], tuple):
        out["sweep_values"] = (out["sweep_values"],)
    try:
        return ExperimentSpec(**out)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path: str) -> ExperimentSpec:
    """Load and validate an experiment spec from a config file."""
    with open(path) as fh:
        return parse_config_text(fh.read())


def serialize_config(spec: ExperimentSpec) -> str:
    """Write a spec back to config-file text; parse(serialize(s)) == s."""
    def fmt_scalar(v):
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v))   # shortest exact round-trip representation

    def fmt(v):
        if isinstance(v, tuple):
            return " ".join(fmt_scalar(x) for x in v)
        return fmt_scalar(v)

    lines = []
    sections = {
        "topology": ["k", "n_s", "n_d", "n_r", "n_t", "a_r", "a_t"],
        "powers": ["e_s", "e_r", "e_s_max", "e_r_max", "e_t"],
        "impairments": ["nu_s", "nu_d", "nu_r", "mu_r", "mu_d"],
        "correlation": ["r0", "r_ei", "phase_seed", "beta_sr", "beta_rd", "beta_ei"],
        "training": ["t", "tau"],
        "mc": ["mode", "trials", "seed", "sweep", "values", "coupling", "out",
               "workers", "name", "notes"],
        "optimizer": ["objective", "target_se", "rounds", "max_gp_iter", "tol"],
    }
    attr = {"sweep": "sweep_var", "values": "sweep_values"}
    for section, keys in sections.items():
        body = []
        for key in keys:
            val = getattr(spec, attr.get(key, key))
            if val is None or (key == "values" and not val) or val == "":
                continue
            body.append(f"{key} = {fmt(val)}")
        if body:
            lines.append(f"[{section}]")
            lines.extend(body)
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# reference scenario presets (desk-scale antenna grids, N <= 128)
# ---------------------------------------------------------------------------

_FIG7_BETA_SR = (0.818, 0.052, 1.01, 0.026, 0.016, 0.803, 0.051, 0.383, 2.85, 0.448)
_FIG7_BETA_RD = (1.187, 0.011, 0.724, 2.11, 0.580, 0.012, 0.147, 0.085, 0.434, 0.458)

_DESK_NOTE = "antenna grid truncated to desk scale (N <= 128)"


def preset(name: str, trials: int = 1000, seed: int = 0) -> ExperimentSpec:
    """Named reference scenarios; antenna grids are desk-scaled."""
    e8 = float(db_to_linear(8))
    e5 = float(db_to_linear(5))
    e10 = float(db_to_linear(10))
    b5 = float(db_to_linear(5))
    common = dict(trials=trials, seed=seed, phase_seed=7)
    if name == "fig1":
        # single-antenna nodes: rate ceiling vs relay array size
        return ExperimentSpec(
            name=name, mode="both", sweep_var="n_r", sweep_values=(32, 64, 128),
            coupling="square", k=10, n_s=1, n_d=1, n_r=32, n_t=32, t=300, tau=2,
            e_s=e8, e_r=e8, e_s_max=e8, e_r_max=10 * e8, e_t=e10,
            nu_s=0.04, nu_d=0.04, nu_r=0.04, mu_r=0.04, mu_d=0.04,
            beta_sr=1.0, beta_rd=1.0, beta_ei=1.0, r0=0.2, r_ei=0.8,
            notes=_DESK_NOTE + "; impairment level 0.2^2", **common)
    if name == "fig2":
        # relay-side impairments with scaled node arrays
        return ExperimentSpec(
            name=name, mode="both", sweep_var="n_r", sweep_values=(32, 64, 128),
            coupling="square_scaled", k=10, n_s=3, n_d=3, n_r=32, n_t=32,
            t=300, tau=2, e_s=e5, e_r=e5, e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=1e-4, nu_d=1e-4, nu_r=0.0025, mu_r=0.0025, mu_d=1e-4,
            beta_sr=1.0, beta_rd=1.0, beta_ei=b5, r0=0.2, r_ei=0.8,
            notes=_DESK_NOTE + "; node impairment 0.01^2, relay 0.05^2", **common)
    if name == "fig3":
        # spectral efficiency vs number of pairs
        return ExperimentSpec(
            name=name, mode="asym", sweep_var="k", sweep_values=(2, 4, 6, 8, 10),
            coupling="none", k=10, n_s=10, n_d=10, n_r=128, n_t=128, t=300, tau=1,
            e_s=e5, e_r=e5, e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=0.0025, nu_d=0.0025, nu_r=0.0025, mu_r=0.0025, mu_d=0.0025,
            beta_sr=1.0, beta_rd=1.0, beta_ei=b5, r0=0.4, r_ei=0.7,
            notes=_DESK_NOTE + "; N fixed at 128", **common)
    if name == "fig4":
        # hardware-quality sweep at target 3 bit/s/Hz per pair
        return ExperimentSpec(
            name=name, mode="asym", sweep_var="nu_r",
            sweep_values=(0.025, 0.05, 0.1, 0.15, 0.2), coupling="nu_all",
            k=10, n_s=12, n_d=12, n_r=128, n_t=128, t=300, tau=2,
            e_s=e5, e_r=e5, e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=0.025, nu_d=0.025, nu_r=0.025, mu_r=0.025, mu_d=0.025,
            beta_sr=1.0, beta_rd=1.0, beta_ei=b5, r0=0.4, r_ei=0.7,
            target_se=3.0, notes=_DESK_NOTE + "; target 3 bit/s/Hz per pair",
            **common)
    if name == "fig5":
        # asymmetric receive/transmit array split with N_R + N_T = 200
        return ExperimentSpec(
            name=name, mode="both", sweep_var="n_r", sweep_values=(72, 100, 128),
            coupling="split200", k=10, n_s=7, n_d=12, n_r=72, n_t=128, t=300, tau=2,
            e_s=e5, e_r=e5, e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=0.05, nu_d=0.05, nu_r=0.05, mu_r=0.05, mu_d=0.05,
            beta_sr=1.0, beta_rd=1.0, beta_ei=b5, r0=0.4, r_ei=0.7,
            notes=_DESK_NOTE + "; N_T = 200 - N_R, node arrays floor(N/K)",
            **common)
    if name == "fig6":
        # spectral efficiency vs loopback interference strength
        return ExperimentSpec(
            name=name, mode="asym", sweep_var="beta_ei",
            sweep_values=tuple(float(db_to_linear(x)) for x in (0, 5, 10, 15, 20, 25)),
            coupling="none", k=10, n_s=12, n_d=12, n_r=128, n_t=128, t=300, tau=2,
            e_s=e5, e_r=e5, e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=0.05, nu_d=0.05, nu_r=0.05, mu_r=0.05, mu_d=0.05,
            beta_sr=1.0, beta_rd=1.0, beta_ei=1.0, r0=0.4, r_ei=0.7,
            notes=_DESK_NOTE, **common)
    if name == "fig7":
        # energy/spectral efficiency tradeoff with measured-style fading lists
        return ExperimentSpec(
            name=name, mode="optimize-ee", sweep_var="target_se",
            sweep_values=(5.0, 10.0, 15.0, 20.0), coupling="none",
            k=10, n_s=12, n_d=12, n_r=128, n_t=128, t=300, tau=2,
            e_s_max=e5, e_r_max=10 * e5, e_t=e10,
            nu_s=0.05, nu_d=0.05, nu_r=0.05, mu_r=0.05, mu_d=0.05,
            beta_sr=_FIG7_BETA_SR, beta_rd=_FIG7_BETA_RD,
            beta_ei=float(db_to_linear(10)), r0=0.2, r_ei=0.8,
            target_se=5.0, notes=_DESK_NOTE, **common)
    raise ConfigError(f"unknown preset {name!r}; expected fig1..fig7")
