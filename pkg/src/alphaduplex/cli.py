"""Command line front end: ``run``, ``compare`` and ``defaults``.

``run CONFIG`` writes one CSV per (study, output slice) with the columns
``sweep, analytic, approx, sim_mean, sim_ci`` plus ``manifest.json`` with
the resolved linear-unit parameters. Failed cells become ``NaN`` and a
warning; the run continues.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

from . import analytics as an
from . import mcsim
from .config import SweepConfig, defaults, load_config
from .errors import ComputationError, ConfigError, DomainError
from .model import GlobalParams, Method, Network, SIKind, SIModel, TierParams, Topology
from .model import db_to_linear, linear_to_db
from .spectral import PulseKind

log = logging.getLogger("alphaduplex")

OUT_DIR_ENV = "ALPHADUPLEX_OUT_DIR"
COLUMNS = ("sweep", "analytic", "approx", "sim_mean", "sim_ci")
REUSE_AXES = ("alpha", "beta_d_db", "theta_db")   # geometry unchanged along these


def apply_axis(net: Network, axis: str, value: float) -> Network:
    if axis == "alpha":
        return net.with_tiers(alpha=value)
    if axis == "beta_d_db":
        return net.with_global(beta_d=db_to_linear(value))
    if axis == "lambda_per_km2":
        return net.with_tiers(lam=value * 1e-6)
    if axis == "delta_o_deg":
        return net.with_global(delta_0=math.radians(value))
    if axis == "theta_db":
        return net.with_global(theta=db_to_linear(value))
    if axis == "serving_distance_m":
        return net
    raise DomainError(f"unknown sweep axis {axis!r}")


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    return repr(x)


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _safe(label, fn):
    try:
        return float(fn())
    except (ComputationError, DomainError, ArithmeticError) as exc:
        log.warning("%s: %s; cell set to NaN", label, exc)
        return float("nan")


def _metric(net, sl, metric, method):
    fn = an.rate if metric == "rate" else an.outage
    return fn(net, sl.tier, sl.direction, sl.user_class, net.glob.theta, method, sl.topology)


def _study_base(cfg, study):
    return study.base if study.base is not None else cfg.base


def _run_curve_study(cfg, study, method, mc_n, seed, workers):
    base = _study_base(cfg, study)
    nets = [apply_axis(base, study.axis, v) for v in study.grid]
    sim = mc_n > 0 and study.simulate
    batch = None
    if sim and study.axis in REUSE_AXES:
        batch = mcsim.simulate(base, mc_n, seed, workers)
    tables = {sl: [] for sl in study.outputs}
    for v, net in zip(study.grid, nets):
        point_batch = batch
        if sim and batch is None:
            point_batch = _safe_batch(net, mc_n, seed, workers, f"{study.name} @ {v}")
        for sl in study.outputs:
            label = f"{study.name}/{sl.spec} @ {study.axis}={v}"
            analytic = _safe(label, lambda: _metric(net, sl, study.metric, method))
            approx = float("nan")
            if method is Method.EXACT:
                approx = _safe(label + " (bounded)", lambda: _metric(net, sl, study.metric, Method.BOUNDED))
            s_mean = s_ci = float("nan")
            if point_batch is not None:
                try:
                    est = mcsim.estimate_from_batch(point_batch, net, net.glob.theta, study.metric, sl.tier,
                                                    sl.direction, sl.user_class, sl.topology)
                    s_mean, s_ci = est.mean, est.ci_halfwidth
                except (ComputationError, DomainError) as exc:
                    log.warning("%s (simulated): %s; cell set to NaN", label, exc)
            tables[sl].append((v, analytic, approx, s_mean, s_ci))
    return {f"{study.name}_{sl.label}.csv": rows for sl, rows in tables.items()}


def _safe_batch(net, n, seed, workers, label):
    try:
        return mcsim.simulate(net, n, seed, workers)
    except (ComputationError, DomainError) as exc:
        log.warning("%s: simulation failed (%s)", label, exc)
        return None


def _db(x):
    return linear_to_db(x) if x > 0 and math.isfinite(x) else float("nan")


def _run_critical_study(cfg, study):
    rows = []
    for v in study.grid:
        net = apply_axis(_study_base(cfg, study), study.axis, v)
        lam = net.tiers[0].lam
        if study.axis == "serving_distance_m":
            r_o = v
            approx = _safe(f"{study.name} @ {v}", lambda: an.critical_beta_d(lam, r_o))
        else:
            r_o = 1.0 / (2.0 * math.sqrt(lam))
            approx = an.critical_beta_d(lam)
        numeric = _safe(f"{study.name} @ {v}", lambda: an.critical_beta_d_crossing(net, r_o))
        rows.append((v, _db(numeric), _db(approx), float("nan"), float("nan")))
    return {f"{study.name}_critical_beta_d_db.csv": rows}


def _jsonable(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _net_doc(cfg, net):
    return {"global": _jsonable(net.glob),
            "tiers": [dict(name=n, **_jsonable(t)) for n, t in zip(cfg.tier_names, net.tiers)]}


def manifest(cfg: SweepConfig, mc_n, seed, method_override):
    return {
        **_net_doc(cfg, cfg.base),
        "studies": [
            {"name": s.name, "axis": s.axis, "grid": list(s.grid), "metric": s.metric,
             "method": (method_override or s.method).value, "simulate": s.simulate,
             "outputs": [o.spec for o in s.outputs],
             "overrides": dict(s.overrides), "base": _net_doc(cfg, _study_base(cfg, s))}
            for s in cfg.studies
        ],
        "mc": {"n": mc_n, "seed": seed},
        "units": "linear SI (W, m, m^-2, Hz, rad)",
    }


def network_from_manifest(doc) -> Network:
    """Rebuild the base network recorded in a run manifest."""
    g = dict(doc["global"])
    si = g.pop("si_model")
    for k, v in g.items():
        if isinstance(v, str):
            g[k] = float(v)
    glob = GlobalParams(si_model=SIModel(SIKind(si["kind"]), si["k_factor"]), **g)
    tiers = []
    for t in doc["tiers"]:
        t = dict(t)
        t.pop("name")
        t["pulse_ul"] = PulseKind(t["pulse_ul"])
        t["pulse_dl"] = PulseKind(t["pulse_dl"])
        t["topology"] = Topology(t["topology"])
        tiers.append(TierParams(**t))
    return Network(glob, tuple(tiers))


def run(config_path, out_dir, mc_n=None, seed=None, method=None, workers=None):
    cfg = load_config(config_path)
    mc_n = cfg.mc_n if mc_n is None else mc_n
    seed = cfg.mc_seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for study in cfg.studies:
        m = method or study.method
        if study.metric == "critical_beta_d":
            tables = _run_critical_study(cfg, study)
        else:
            tables = _run_curve_study(cfg, study, m, mc_n, seed, workers)
        for name, rows in tables.items():
            path = os.path.join(out_dir, name)
            _write_csv(path, rows)
            written.append(path)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest(cfg, mc_n, seed, method), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


# ---------------------------------------------------------------------------
# comparison report
# ---------------------------------------------------------------------------


@dataclass
class CompareReport:
    n: int
    max_abs_dev: float
    fraction_within: float
    threshold: float
    failing_rows: list

    @property
    def passed(self):
        return self.fraction_within >= self.threshold

    def text(self):
        lines = [f"points: {self.n}",
                 f"max |deviation|: {self.max_abs_dev:.6g}",
                 f"within CI: {self.fraction_within:.1%} (threshold {self.threshold:.0%})",
                 "PASS" if self.passed else "FAIL"]
        for row, sweep, dev, ci in self.failing_rows:
            lines.append(f"  row {row}: sweep={sweep:g} |dev|={dev:.6g} ci={ci:.6g}")
        return "\n".join(lines)


def read_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or any(c not in rows[0] for c in COLUMNS):
        raise DomainError(f"{path}: expected columns {', '.join(COLUMNS)}")
    return [{k: float(r[k]) for k in COLUMNS} for r in rows]


def compare(path_a, path_b, threshold=0.9) -> CompareReport:
    """Analytic column of ``a`` against the simulated column (with CI) of ``b``.

    When ``b`` has no simulated values its analytic column is used with a
    zero-width interval.
    """
    a, b = read_table(path_a), read_table(path_b)
    if len(a) != len(b) or any(ra["sweep"] != rb["sweep"] for ra, rb in zip(a, b)):
        bad = [j for j in range(max(len(a), len(b)))
               if j >= len(a) or j >= len(b) or a[j]["sweep"] != b[j]["sweep"]]
        raise DomainError(f"sweep grids differ at rows {bad}")
    use_sim = any(math.isfinite(r["sim_mean"]) for r in b)
    devs, failing, within = [], [], 0
    for j, (ra, rb) in enumerate(zip(a, b)):
        ref = rb["sim_mean"] if use_sim else rb["analytic"]
        ci = rb["sim_ci"] if use_sim else 0.0
        dev = abs(ra["analytic"] - ref)
        ok = math.isfinite(dev) and dev <= (ci if math.isfinite(ci) else 0.0)
        devs.append(dev)
        within += ok
        if not ok:
            failing.append((j, ra["sweep"], dev, ci))
    finite = [d for d in devs if math.isfinite(d)]
    return CompareReport(len(a), max(finite) if finite else float("nan"), within / len(a), threshold, failing)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="alphaduplex", description="alpha-duplex network sweeps")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run the sweeps of a config file")
    r.add_argument("config")
    r.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, "results"))
    r.add_argument("--mc-n", type=int, default=None, help="realizations (0 disables simulation)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--method", choices=["exact", "bounded"], default=None)
    r.add_argument("--workers", type=int, default=None)
    c = sub.add_parser("compare", help="analytic column of A vs simulated column of B")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--threshold", type=float, default=0.9)
    sub.add_parser("defaults", help="print a reference configuration")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.verb == "defaults":
        sys.stdout.write(defaults())
        return 0
    if args.verb == "run":
        if args.mc_n is not None and 0 < args.mc_n < 100:
            print("error: --mc-n must be 0 or at least 100", file=sys.stderr)
            return 2
        try:
            paths = run(args.config, args.out_dir, args.mc_n, args.seed,
                        Method(args.method) if args.method else None, args.workers)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for path in paths:
            print(path)
        return 0
    try:
        report = compare(args.a, args.b, args.threshold)
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
