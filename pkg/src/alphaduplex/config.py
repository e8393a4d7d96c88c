"""Sweep configuration files: INI text with units in the key names.

A file has one ``[global]`` section, one ``[tier.NAME]`` section per tier
(in file order), an optional ``[mc]`` section and one ``[study.NAME]``
section per sweep. Values are converted to linear SI units here and nowhere
else. Validation collects every problem before raising :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError
from .model import (
    Direction,
    GlobalParams,
    Method,
    Network,
    SIKind,
    SIModel,
    TierParams,
    Topology,
    UserClass,
    db_to_linear,
    dbm_to_watt,
    linear_to_db,
)
from .spectral import PulseKind

__all__ = ["AXES", "METRICS", "OutputSlice", "Study", "SweepConfig", "parse_config", "load_config",
           "format_config", "defaults"]

AXES = ("alpha", "beta_d_db", "lambda_per_km2", "delta_o_deg", "theta_db", "serving_distance_m")
METRICS = ("rate", "outage", "critical_beta_d")

GLOBAL_KEYS = ("p_u_max_w", "beta_d_db", "n0_w", "eta_uu", "eta_dd", "eta_ud", "eta_du", "delta_o_deg",
               "si_model", "si_k_factor", "theta_db", "b_u_hd_hz", "b_d_hd_hz", "epsilon")
TIER_KEYS = ("lambda_per_km2", "p_d_w", "rho_dbm", "tau", "alpha", "pulse_ul", "pulse_dl", "beta_u_db",
             "topology")
MC_KEYS = ("n", "seed", "workers")
STUDY_KEYS = ("axis", "grid", "outputs", "metric", "method", "simulate")


@dataclass(frozen=True)
class OutputSlice:
    direction: Direction
    user_class: UserClass
    topology: Topology
    tier: int = 0

    @property
    def label(self):
        return f"{self.direction.value}_{self.user_class.value}_{self.topology.value}_t{self.tier}"

    @property
    def spec(self):
        return f"{self.direction.value}/{self.user_class.value}/{self.topology.value}/{self.tier}"


@dataclass(frozen=True)
class Study:
    name: str
    axis: str
    grid: tuple
    outputs: tuple
    metric: str = "rate"
    method: Method = Method.EXACT
    simulate: bool = True
    overrides: tuple = ()           # (key, raw value) pairs in configuration units
    base: Network | None = None     # base network with the overrides applied


@dataclass(frozen=True)
class SweepConfig:
    base: Network
    tier_names: tuple
    studies: tuple
    mc_n: int = 0
    mc_seed: int = 0
    workers: int = 1


def _fmt(x):
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, (int, float)):
        if math.isinf(x):
            return "inf"
        return f"{x:.12g}"
    return str(x)


def _parse_grid(text):
    """Comma list, or ``start:stop:step`` with an inclusive stop."""
    text = text.strip()
    if ":" in text and "," not in text:
        lo, hi, step = (float(t) for t in text.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError("range needs start <= stop and step > 0")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(round(lo + j * step, 12) for j in range(n))
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_slice(text, n_tiers):
    parts = [p.strip().lower() for p in text.split("/")]
    if not 2 <= len(parts) <= 4:
        raise ValueError(f"slice {text!r} must look like dir/class[/topology][/tier]")
    direction = Direction(parts[0])
    user_class = UserClass(parts[1])
    topology = Topology(parts[2]) if len(parts) > 2 else Topology.TWO_NODE
    tier = int(parts[3]) if len(parts) > 3 else 0
    if not 0 <= tier < n_tiers:
        raise ValueError(f"slice {text!r} names tier {tier}, config has {n_tiers}")
    return OutputSlice(direction, user_class, topology, tier)


class _Reader:
    def __init__(self, section, label, problems):
        self.section, self.label, self.problems = section, label, problems

    def get(self, key, conv, default=None):
        if key not in self.section:
            if default is None:
                self.problems.append((f"{self.label}.{key}", "missing"))
            return default
        raw = self.section[key]
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            self.problems.append((f"{self.label}.{key}", f"cannot parse {raw!r}: {exc}"))
            return default

    def unknown(self, allowed):
        for key in self.section:
            if key not in allowed:
                self.problems.append((f"{self.label}.{key}", "unknown key"))


def _bool(text):
    val = text.strip().lower()
    if val in ("yes", "true", "1", "on"):
        return True
    if val in ("no", "false", "0", "off"):
        return False
    raise ValueError("expected yes/no")


def _build_network(gsec, tsecs, problems, label=""):
    """Network from a global mapping and (name, mapping) tier pairs; None on failure."""
    n_before = len(problems)
    rg = _Reader(gsec, "global", problems)
    si_kind = rg.get("si_model", lambda s: SIKind(s.strip().lower()), SIKind.EXPONENTIAL)
    gvals = dict(
        p_u_max=rg.get("p_u_max_w", float),
        beta_d=rg.get("beta_d_db", lambda s: db_to_linear(float(s))),
        n0=rg.get("n0_w", float),
        eta_uu=rg.get("eta_uu", float), eta_dd=rg.get("eta_dd", float),
        eta_ud=rg.get("eta_ud", float), eta_du=rg.get("eta_du", float),
        delta_0=rg.get("delta_o_deg", lambda s: math.radians(float(s))),
        theta=rg.get("theta_db", lambda s: db_to_linear(float(s))),
        b_u_hd=rg.get("b_u_hd_hz", float), b_d_hd=rg.get("b_d_hd_hz", float),
        epsilon=rg.get("epsilon", float),
    )
    k_factor = rg.get("si_k_factor", float, 0.0)
    tvals = []
    for name, sec in tsecs:
        rt = _Reader(sec, f"tier.{name}", problems)
        tvals.append(dict(
            lam=rt.get("lambda_per_km2", lambda s: float(s) * 1e-6),
            p_d=rt.get("p_d_w", float),
            rho=rt.get("rho_dbm", lambda s: dbm_to_watt(float(s))),
            tau=rt.get("tau", float, 1.0),
            alpha=rt.get("alpha", float),
            pulse_ul=rt.get("pulse_ul", lambda s: PulseKind(s.strip().lower())),
            pulse_dl=rt.get("pulse_dl", lambda s: PulseKind(s.strip().lower())),
            beta_u=rt.get("beta_u_db", lambda s: db_to_linear(float(s))),
            topology=rt.get("topology", lambda s: Topology(s.strip().lower()), Topology.TWO_NODE),
        ))
    if len(problems) > n_before or not tvals:
        return None
    try:
        glob = GlobalParams(si_model=SIModel(si_kind, k_factor), **gvals)
        return Network(glob, tuple(TierParams(**tv) for tv in tvals))
    except DomainError as exc:
        problems.append((label or "parameters", str(exc)))
        return None


def parse_config(text: str) -> SweepConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([("file", str(exc).splitlines()[0])]) from None
    problems = []
    if "global" not in cp:
        raise ConfigError([("global", "section missing")])
    _Reader(cp["global"], "global", problems).unknown(GLOBAL_KEYS)
    tier_names = [s[len("tier."):] for s in cp.sections() if s.startswith("tier.")]
    if not tier_names:
        problems.append(("tier", "at least one [tier.NAME] section is required"))
    for name in tier_names:
        _Reader(cp[f"tier.{name}"], f"tier.{name}", problems).unknown(TIER_KEYS)
    gsec = dict(cp["global"])
    tsecs = [(n, dict(cp[f"tier.{n}"])) for n in tier_names]
    net = _build_network(gsec, tsecs, problems)

    mc_n, mc_seed, workers = 0, 0, 1
    if "mc" in cp:
        rm = _Reader(cp["mc"], "mc", problems)
        rm.unknown(MC_KEYS)
        mc_n = rm.get("n", int, 0)
        mc_seed = rm.get("seed", int, 0)
        workers = rm.get("workers", int, 1)
        if mc_n and mc_n < 100:
            problems.append(("mc.n", "use at least 100 realizations or 0 to disable"))

    studies = []
    n_tiers = max(len(tier_names), 1)
    for name in (s for s in cp.sections() if s.startswith("study.")):
        sec = cp[name]
        rs = _Reader(sec, name, problems)
        rs.unknown(STUDY_KEYS + GLOBAL_KEYS + TIER_KEYS)
        axis = rs.get("axis", str)
        if axis is not None and axis not in AXES:
            problems.append((f"{name}.axis", f"must be one of {', '.join(AXES)}"))
        grid = rs.get("grid", _parse_grid)
        if grid is not None:
            if not grid:
                problems.append((f"{name}.grid", "empty"))
            elif list(grid) != sorted(grid):
                problems.append((f"{name}.grid", "must be sorted"))
        metric = rs.get("metric", str, "rate")
        if metric not in METRICS:
            problems.append((f"{name}.metric", f"must be one of {', '.join(METRICS)}"))
        method = rs.get("method", lambda s: Method(s.strip().lower()), Method.EXACT)
        if method not in (Method.EXACT, Method.BOUNDED):
            problems.append((f"{name}.method", "must be exact or bounded"))
        outputs = rs.get("outputs", lambda s: tuple(_parse_slice(p, n_tiers) for p in s.split(",") if p.strip()),
                         ())
        if metric != "critical_beta_d" and not outputs:
            problems.append((f"{name}.outputs", "at least one slice is required"))
        if metric == "critical_beta_d" and axis not in ("serving_distance_m", "lambda_per_km2"):
            problems.append((f"{name}.axis", "critical_beta_d sweeps serving_distance_m or lambda_per_km2"))
        if metric != "critical_beta_d" and axis == "serving_distance_m":
            problems.append((f"{name}.axis", "serving_distance_m is only meaningful for critical_beta_d"))
        simulate = rs.get("simulate", _bool, True)
        overrides = tuple((k, sec[k]) for k in sec if k in GLOBAL_KEYS or k in TIER_KEYS)
        base = net
        if overrides and net is not None:
            g2 = dict(gsec)
            g2.update({k: v for k, v in overrides if k in GLOBAL_KEYS})
            t2 = [(n, {**t, **{k: v for k, v in overrides if k in TIER_KEYS}}) for n, t in tsecs]
            base = _build_network(g2, t2, problems, name)
        studies.append(Study(name[len("study."):], axis, grid, outputs, metric, method, simulate,
                             overrides, base))
    if not studies:
        problems.append(("study", "at least one [study.NAME] section is required"))
    if problems:
        raise ConfigError(problems)
    return SweepConfig(net, tuple(tier_names), tuple(studies), mc_n, mc_seed, workers)


def load_config(path) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: SweepConfig) -> str:
    """Inverse of :func:`parse_config`, in configuration units."""
    g = cfg.base.glob
    lines = ["[global]"]
    gv = dict(
        p_u_max_w=g.p_u_max, beta_d_db=linear_to_db(g.beta_d) if g.beta_d > 0 else -math.inf,
        n0_w=g.n0, eta_uu=g.eta_uu, eta_dd=g.eta_dd, eta_ud=g.eta_ud, eta_du=g.eta_du,
        delta_o_deg=math.degrees(g.delta_0), si_model=g.si_model.kind.value, si_k_factor=g.si_model.k_factor,
        theta_db=linear_to_db(g.theta), b_u_hd_hz=g.b_u_hd, b_d_hd_hz=g.b_d_hd, epsilon=g.epsilon,
    )
    lines += [f"{k} = {_fmt(gv[k])}" for k in GLOBAL_KEYS]
    for name, t in zip(cfg.tier_names, cfg.base.tiers):
        tv = dict(
            lambda_per_km2=t.lam * 1e6, p_d_w=t.p_d, rho_dbm=linear_to_db(t.rho) + 30.0, tau=t.tau, alpha=t.alpha,
            pulse_ul=t.pulse_ul.value, pulse_dl=t.pulse_dl.value,
            beta_u_db=linear_to_db(t.beta_u) if t.beta_u > 0 else -math.inf, topology=t.topology.value,
        )
        lines += ["", f"[tier.{name}]"] + [f"{k} = {_fmt(tv[k])}" for k in TIER_KEYS]
    lines += ["", "[mc]", f"n = {cfg.mc_n}", f"seed = {cfg.mc_seed}", f"workers = {cfg.workers}"]
    for s in cfg.studies:
        lines += ["", f"[study.{s.name}]", f"axis = {s.axis}", "grid = " + ", ".join(_fmt(v) for v in s.grid)]
        if s.outputs:
            lines.append("outputs = " + ", ".join(o.spec for o in s.outputs))
        lines += [f"metric = {s.metric}", f"method = {s.method.value}", f"simulate = {_fmt(s.simulate)}"]
        lines += [f"{k} = {v}" for k, v in s.overrides]
    return "\n".join(lines) + "\n"


_DEFAULTS = """\
[global]
p_u_max_w = 3
beta_d_db = -75
n0_w = 0
eta_uu = 4
eta_dd = 4
eta_ud = 4
eta_du = 3
delta_o_deg = 90
si_model = exponential
si_k_factor = 0
theta_db = 0
b_u_hd_hz = 1000000
b_d_hd_hz = 1000000
epsilon = 0.03134

[tier.macro]
lambda_per_km2 = 1
p_d_w = 5
rho_dbm = -60
tau = 1
alpha = 1
pulse_ul = sinc2
pulse_dl = sinc
beta_u_db = -110
topology = 2nt

[mc]
n = 0
seed = 0
workers = 1

[study.rate_vs_alpha]
axis = alpha
grid = 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1
outputs = ul/ccu/2nt/0, ul/ceu/2nt/0, dl/ccu/2nt/0, dl/ceu/2nt/0, dl/ccu/3nt/0, dl/ceu/3nt/0
metric = rate
method = exact
simulate = yes
"""


def defaults() -> str:
    """A complete single-tier configuration holding the reference parameter set."""
    return _DEFAULTS
