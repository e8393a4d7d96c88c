"""Monte Carlo simulation of multi-tier alpha-duplex PPP networks.

Every realization drops BSs per tier as a PPP on a square window, drops
UEs uniformly, associates each UE with the tier minimizing ``tau_k r_k``,
applies truncated channel inversion, and schedules one UL and one DL user
per cell. The measured link belongs to the UE nearest the window centre.

Received powers are stored per interferer tier before overlap factors and
SIC attenuation are applied, so sweeps over alpha, beta or theta reuse the
same realizations. SINR is assembled by :func:`compute_sinr` /
:func:`batch_sinr`.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
from scipy.spatial import cKDTree

from .errors import ComputationError, DomainError
from .model import Direction, Network, SIKind, Topology, UserClass

__all__ = [
    "DEFAULT_AREA",
    "NetworkRealization",
    "LinkComponents",
    "ComponentBatch",
    "SinrSample",
    "EstimateWithCI",
    "realize",
    "link_components",
    "compute_sinr",
    "simulate",
    "batch_sinr",
    "estimate",
    "estimate_from_batch",
    "write_samples",
]

log = logging.getLogger(__name__)

DEFAULT_AREA = 600e6        # m^2
UE_PER_BS = 20.0
_REFILL_BATCH = 64
_REFILL_ATTEMPTS = 1000


def _rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# Network realization
# ---------------------------------------------------------------------------


@dataclass
class NetworkRealization:
    bs_pos: np.ndarray          # (n_bs, 2)
    bs_tier: np.ndarray         # (n_bs,)
    ue_pos: np.ndarray          # (n_ue, 2)
    ue_serving: np.ndarray      # index into bs arrays
    ue_dist: np.ndarray         # serving distance
    ue_ccu: np.ndarray          # bool
    ue_power: np.ndarray        # UL transmit power, W
    ul_user: np.ndarray         # per BS: UE index of the UL (and 2NT full-duplex) user
    dl_user: np.ndarray         # per BS: UE index of the 3NT DL user
    target_ue: int
    target_partner: int         # UL user sharing the target's cell when it receives DL in 3NT
    acceptance: float           # mean fraction of feasible DL candidates given the UL pick
    refills: int
    seed: int
    index: int


class _Assoc:
    """Weighted-nearest association across tiers."""

    def __init__(self, bs_pos, bs_tier, taus):
        self.groups = []
        for k, tau in enumerate(taus):
            idx = np.flatnonzero(bs_tier == k)
            tree = cKDTree(bs_pos[idx]) if idx.size else None
            self.groups.append((idx, tree, tau))

    def __call__(self, pts):
        best = np.full(len(pts), np.inf)
        serving = np.full(len(pts), -1, dtype=np.int64)
        dist = np.zeros(len(pts))
        for idx, tree, tau in self.groups:
            if tree is None:
                continue
            d, j = tree.query(pts)
            w = tau * d
            better = w < best
            best[better] = w[better]
            serving[better] = idx[j[better]]
            dist[better] = d[better]
        return serving, dist


def _bearing_gap(a, b):
    """Absolute angle between two bearings, in [0, pi]."""
    return np.abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def realize(net: Network, seed: int, index: int = 0, area: float = DEFAULT_AREA,
            ue_per_bs: float = UE_PER_BS) -> NetworkRealization:
    """Sample one network; ``(seed, index)`` fully determine the result."""
    g = net.glob
    rng = _rng(seed, index)
    half = 0.5 * math.sqrt(area)
    counts = [rng.poisson(t.lam * area) for t in net.tiers]
    if sum(counts) == 0:
        raise ComputationError("realization has no base stations; enlarge the window")
    bs_pos = rng.uniform(-half, half, size=(sum(counts), 2))
    bs_tier = np.repeat(np.arange(len(net.tiers)), counts)
    n_bs = len(bs_pos)
    assoc = _Assoc(bs_pos, bs_tier, [t.tau for t in net.tiers])

    n_ue = rng.poisson(ue_per_bs * sum(t.lam for t in net.tiers) * area)
    ue_pos = rng.uniform(-half, half, size=(max(n_ue, 1), 2))
    serving, dist = assoc(ue_pos)
    target = int(np.argmin(np.einsum("ij,ij->i", ue_pos, ue_pos)))

    # UL user: uniform over each cell's UEs (the target in its own cell)
    order = np.argsort(serving, kind="stable")
    cnt = np.bincount(serving, minlength=n_bs)
    start = np.concatenate(([0], np.cumsum(cnt)[:-1]))
    pick = np.floor(rng.random(n_bs) * np.maximum(cnt, 1)).astype(np.int64)
    ul_user = np.where(cnt > 0, order[np.minimum(start + pick, len(order) - 1)], -1)
    t_cell = serving[target]
    ul_user[t_cell] = target

    # DL user: uniform over the UEs of the cell at angular gap >= delta_0
    rel = ue_pos - bs_pos[serving]
    bearing = np.arctan2(rel[:, 1], rel[:, 0])
    anchor = ul_user[serving]
    gap = _bearing_gap(bearing, bearing[np.maximum(anchor, 0)])
    candidate = np.arange(len(ue_pos)) != anchor
    feasible = candidate & (gap >= g.delta_0)
    n_cand = np.bincount(serving, weights=candidate, minlength=n_bs)
    n_feas = np.bincount(serving, weights=feasible, minlength=n_bs)
    has_cand = n_cand > 0
    acceptance = float(np.mean(n_feas[has_cand] / n_cand[has_cand])) if has_cand.any() else 1.0

    keys = np.where(feasible, rng.random(len(ue_pos)), 2.0)
    by_key = np.lexsort((keys, serving))
    first = np.concatenate(([0], np.cumsum(cnt)[:-1]))
    dl_user = np.full(n_bs, -1, dtype=np.int64)
    nonempty = cnt > 0
    heads = by_key[first[nonempty]]
    ok = keys[heads] < 2.0
    dl_user[np.flatnonzero(nonempty)[ok]] = heads[ok]

    # cells lacking a pair get extra UEs drawn around their BS
    bad = np.flatnonzero(dl_user < 0)
    refills = 0
    if bad.size:
        pos_list, serv_list, dist_list = [ue_pos], [serving], [dist]
        n_now = len(ue_pos)
        d_nn, _ = cKDTree(bs_pos).query(bs_pos[bad], k=min(2, n_bs))
        for c, dn in zip(bad, np.atleast_2d(d_nn)[:, -1] if n_bs > 1 else np.full(bad.size, half)):
            radius = 1.5 * max(dn, 1.0)
            for _ in range(_REFILL_ATTEMPTS):
                refills += 1
                rr = radius * np.sqrt(rng.random(_REFILL_BATCH))
                ph = rng.uniform(-math.pi, math.pi, _REFILL_BATCH)
                pts = bs_pos[c] + np.column_stack((rr * np.cos(ph), rr * np.sin(ph)))
                s_new, d_new = assoc(pts)
                keep = s_new == c
                if not keep.any():
                    continue
                pts, d_new = pts[keep], d_new[keep]
                new_idx = np.arange(n_now, n_now + len(pts))
                pos_list.append(pts)
                serv_list.append(np.full(len(pts), c))
                dist_list.append(d_new)
                n_now += len(pts)
                if ul_user[c] < 0:
                    ul_user[c] = new_idx[0]
                    new_idx, pts = new_idx[1:], pts[1:]
                    if not len(pts):
                        continue
                a = ul_user[c]
                a_pos = ue_pos[a] if a < len(ue_pos) else np.concatenate(pos_list)[a]
                b_rel = pts - bs_pos[c]
                a_rel = a_pos - bs_pos[c]
                gaps = _bearing_gap(np.arctan2(b_rel[:, 1], b_rel[:, 0]), math.atan2(a_rel[1], a_rel[0]))
                good = np.flatnonzero(gaps >= g.delta_0)
                if good.size:
                    dl_user[c] = new_idx[good[0]]
                    break
            else:
                raise ComputationError(f"could not schedule a pair in cell {c} after {_REFILL_ATTEMPTS} refills")
        ue_pos = np.concatenate(pos_list)
        serving = np.concatenate(serv_list)
        dist = np.concatenate(dist_list)
        log.debug("realization %d: %d refill draws", index, refills)

    rho = np.array([t.rho for t in net.tiers])[bs_tier[serving]]
    r_edge = (g.p_u_max / rho) ** (1.0 / g.eta_uu)
    ccu = dist <= r_edge
    power = np.where(ccu, rho * dist ** g.eta_uu, g.p_u_max)
    return NetworkRealization(bs_pos, bs_tier, ue_pos, serving, dist, ccu, power, ul_user, dl_user,
                              target, int(dl_user[t_cell]), acceptance, refills, seed, index)


# ---------------------------------------------------------------------------
# Link components and SINR
# ---------------------------------------------------------------------------


@dataclass
class LinkComponents:
    """Received powers of the target links before overlap factors and SIC."""

    tier: int
    user_class: UserClass
    r_o: float
    ue_power: float
    ul_signal: float
    ul_uu: np.ndarray       # per interferer tier
    ul_du: np.ndarray
    ul_si: float            # h_s * P_d of the serving BS
    dl_signal: float
    dl_dd: np.ndarray
    dl_ud: np.ndarray
    dl_intra: float         # 3NT cell partner's UL signal at the target UE
    dl_si: float            # h_s * own UL power (2NT)
    acceptance: float


def _si_draw(net, rng, size=None):
    m = net.glob.si_model
    if m.kind is SIKind.CONSTANT:
        return np.ones(size) if size else 1.0
    if m.kind is SIKind.EXPONENTIAL:
        return rng.exponential(size=size)
    k = m.k_factor
    los = math.sqrt(k / (k + 1.0))
    sd = math.sqrt(0.5 / (k + 1.0))
    re = los + sd * rng.standard_normal(size)
    im = sd * rng.standard_normal(size)
    return re * re + im * im


def link_components(rz: NetworkRealization, net: Network, rng) -> LinkComponents:
    """Draw fades and sum received powers per interferer tier for the target links."""
    g = net.glob
    n_tiers = len(net.tiers)
    t = rz.target_ue
    c = rz.ue_serving[t]
    i = int(rz.bs_tier[c])
    bs_p = np.array([tt.p_d for tt in net.tiers])[rz.bs_tier]
    others = np.arange(len(rz.bs_pos)) != c
    ul_tx = rz.ul_user.copy()
    ul_tiers = rz.bs_tier[others]

    # uplink at the serving BS
    x_bs = rz.bs_pos[c]
    a = ul_tx[others]
    d = np.linalg.norm(rz.ue_pos[a] - x_bs, axis=1)
    uu = rz.ue_power[a] * rng.exponential(size=a.size) * d ** -g.eta_uu
    d = np.linalg.norm(rz.bs_pos[others] - x_bs, axis=1)
    du = bs_p[others] * rng.exponential(size=d.size) * d ** -g.eta_du
    h = rng.exponential()
    ul_signal = rz.ue_power[t] * h * rz.ue_dist[t] ** -g.eta_uu
    ul_si = _si_draw(net, rng) * bs_p[c]

    # downlink at the target UE
    x_ue = rz.ue_pos[t]
    d = np.linalg.norm(rz.bs_pos[others] - x_ue, axis=1)
    dd = bs_p[others] * rng.exponential(size=d.size) * d ** -g.eta_dd
    d = np.linalg.norm(rz.ue_pos[a] - x_ue, axis=1)
    ud = rz.ue_power[a] * rng.exponential(size=a.size) * d ** -g.eta_ud
    h = rng.exponential()
    dl_signal = bs_p[c] * h * rz.ue_dist[t] ** -g.eta_dd
    p = rz.target_partner
    d = float(np.linalg.norm(rz.ue_pos[p] - x_ue))
    dl_intra = rz.ue_power[p] * rng.exponential() * d ** -g.eta_ud
    dl_si = _si_draw(net, rng) * rz.ue_power[t]

    def per_tier(v):
        return np.bincount(ul_tiers, weights=v, minlength=n_tiers)

    return LinkComponents(
        tier=i,
        user_class=UserClass.CCU if rz.ue_ccu[t] else UserClass.CEU,
        r_o=float(rz.ue_dist[t]),
        ue_power=float(rz.ue_power[t]),
        ul_signal=float(ul_signal), ul_uu=per_tier(uu), ul_du=per_tier(du), ul_si=float(ul_si),
        dl_signal=float(dl_signal), dl_dd=per_tier(dd), dl_ud=per_tier(ud), dl_intra=float(dl_intra),
        dl_si=float(dl_si), acceptance=rz.acceptance,
    )


@dataclass
class SinrSample:
    direction: Direction
    tier: int
    user_class: UserClass
    topology: Topology
    signal: float
    interference_dd: float
    interference_uu: float
    interference_ud: float
    interference_du: float
    residual_si: float
    noise: float
    sinr: float


def _factor_rows(net, tier, direction):
    k = range(len(net.tiers))
    intra = np.array([net.factors(tier, j, direction).intra for j in k])
    cross = np.array([net.factors(tier, j, direction).cross for j in k])
    return intra, cross


def _assemble(direction, topology, net, tier, signal, a, b, si_raw, intra_raw):
    """Weighted interference terms; identical arithmetic for scalars and batches."""
    g = net.glob
    intra, cross = _factor_rows(net, tier, direction)
    self_cross = net.factors(tier, tier, direction).cross
    same = a @ intra
    other = b @ cross
    if direction is Direction.UL:
        si = net.tiers[tier].beta_u * self_cross * si_raw
        terms = dict(interference_dd=0.0 * same, interference_uu=same, interference_ud=0.0 * same,
                     interference_du=other, residual_si=si)
    else:
        if topology is Topology.TWO_NODE:
            si = g.beta_d * self_cross * si_raw
        else:
            si = 0.0 * same
            other = other + self_cross * intra_raw
        terms = dict(interference_dd=same, interference_uu=0.0 * same, interference_ud=other,
                     interference_du=0.0 * same, residual_si=si)
    noise = g.n0 + 0.0 * same
    total = (terms["interference_dd"] + terms["interference_uu"] + terms["interference_ud"]
             + terms["interference_du"] + terms["residual_si"] + noise)
    with np.errstate(divide="ignore"):
        sinr = signal / total
    return terms, noise, sinr


def compute_sinr(comp: LinkComponents, net: Network, direction: Direction, topology: Topology) -> SinrSample:
    """SINR of one target link under the overlap factors and SIC levels of ``net``."""
    if direction is Direction.UL:
        args = (comp.ul_signal, comp.ul_uu, comp.ul_du, comp.ul_si, 0.0)
    else:
        args = (comp.dl_signal, comp.dl_dd, comp.dl_ud, comp.dl_si, comp.dl_intra)
    terms, noise, sinr = _assemble(direction, topology, net, comp.tier, *args)
    return SinrSample(direction, comp.tier, comp.user_class, topology, float(args[0]),
                      *(float(terms[k]) for k in ("interference_dd", "interference_uu",
                                                  "interference_ud", "interference_du",
                                                  "residual_si")),
                      float(noise), float(sinr))


# ---------------------------------------------------------------------------
# Batches of realizations
# ---------------------------------------------------------------------------


def _geometry_key(net: Network):
    g = net.glob
    tiers = tuple((t.lam, t.p_d, t.rho, t.tau) for t in net.tiers)
    return (tiers, g.p_u_max, g.eta_uu, g.eta_ud, g.eta_du, g.delta_0, g.si_model)


@dataclass
class ComponentBatch:
    key: tuple
    seed: int
    tier: np.ndarray
    ccu: np.ndarray
    r_o: np.ndarray
    ue_power: np.ndarray
    ul_signal: np.ndarray
    ul_uu: np.ndarray
    ul_du: np.ndarray
    ul_si: np.ndarray
    dl_signal: np.ndarray
    dl_dd: np.ndarray
    dl_ud: np.ndarray
    dl_intra: np.ndarray
    dl_si: np.ndarray
    acceptance: np.ndarray

    def __len__(self):
        return len(self.tier)

    def component(self, j) -> LinkComponents:
        return LinkComponents(int(self.tier[j]), UserClass.CCU if self.ccu[j] else UserClass.CEU,
                              float(self.r_o[j]), float(self.ue_power[j]),
                              float(self.ul_signal[j]), self.ul_uu[j], self.ul_du[j], float(self.ul_si[j]),
                              float(self.dl_signal[j]), self.dl_dd[j], self.dl_ud[j],
                              float(self.dl_intra[j]), float(self.dl_si[j]), float(self.acceptance[j]))


def _run_chunk(args):
    net, seed, lo, hi, area = args
    out = []
    for j in range(lo, hi):
        rz = realize(net, seed, j, area)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(j, 1)))
        out.append(link_components(rz, net, rng))
    return out


def simulate(net: Network, n: int, seed: int = 0, workers: int = 1, area: float = DEFAULT_AREA,
             chunk: int = 200) -> ComponentBatch:
    """Run ``n`` realizations; the result does not depend on ``workers``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    jobs = [(net, seed, lo, min(lo + chunk, n), area) for lo in range(0, n, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    comps = [c for part in parts for c in part]

    def col(name):
        return np.array([getattr(c, name) for c in comps])

    return ComponentBatch(
        key=_geometry_key(net), seed=seed, tier=col("tier"),
        ccu=np.array([c.user_class is UserClass.CCU for c in comps]),
        r_o=col("r_o"), ue_power=col("ue_power"),
        ul_signal=col("ul_signal"), ul_uu=np.vstack([c.ul_uu for c in comps]),
        ul_du=np.vstack([c.ul_du for c in comps]), ul_si=col("ul_si"),
        dl_signal=col("dl_signal"), dl_dd=np.vstack([c.dl_dd for c in comps]),
        dl_ud=np.vstack([c.dl_ud for c in comps]), dl_intra=col("dl_intra"), dl_si=col("dl_si"),
        acceptance=col("acceptance"),
    )


def _check_key(batch, net):
    if batch.key != _geometry_key(net):
        raise DomainError("batch was simulated for a different geometry; only alpha, pulses, "
                          "SIC levels, noise and theta may change between reuse")


def batch_sinr(batch: ComponentBatch, net: Network, direction: Direction, topology: Topology, tier: int = 0):
    """SINR of every realization whose target is in ``tier``, and the selection mask."""
    _check_key(batch, net)
    mask = batch.tier == tier
    if direction is Direction.UL:
        args = (batch.ul_signal[mask], batch.ul_uu[mask], batch.ul_du[mask], batch.ul_si[mask],
                np.zeros(mask.sum()))
    else:
        args = (batch.dl_signal[mask], batch.dl_dd[mask], batch.dl_ud[mask], batch.dl_si[mask],
                batch.dl_intra[mask])
    _, _, sinr = _assemble(direction, topology, net, tier, *args)
    return sinr, mask


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    ci_halfwidth: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("an estimate needs at least one sample")


def _mean_ci(values):
    n = len(values)
    if n == 0:
        return EstimateWithCI(float("nan"), float("nan"), 1)
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return EstimateWithCI(float(np.mean(values)), 1.96 * sd / math.sqrt(n), n)


def estimate_from_batch(batch: ComponentBatch, net: Network, theta: float, what: str,
                        tier: int, direction: Direction, user_class: UserClass,
                        topology: Topology) -> EstimateWithCI:
    """Outage or rate of one slice, using the class of each realization's target UE."""
    if what not in ("outage", "rate"):
        raise DomainError("what must be 'outage' or 'rate'")
    sinr, mask = batch_sinr(batch, net, direction, topology, tier)
    if user_class is not UserClass.AVERAGE:
        cls = batch.ccu[mask] if user_class is UserClass.CCU else ~batch.ccu[mask]
        sinr = sinr[cls]
    fail = (sinr < theta).astype(float)
    if what == "outage":
        return _mean_ci(fail)
    scale = net.bandwidth(tier, direction) * math.log2(1.0 + theta)
    return _mean_ci(scale * (1.0 - fail))


def estimate(net: Network, theta: float, n: int, what: str, tier: int, direction: Direction,
             user_class: UserClass, topology: Topology, seed: int = 0, workers: int = 1) -> EstimateWithCI:
    if n < 100:
        raise DomainError("use at least 100 realizations")
    batch = simulate(net, n, seed, workers)
    return estimate_from_batch(batch, net, theta, what, tier, direction, user_class, topology)


def write_samples(path, batch: ComponentBatch, net: Network, direction: Direction, topology: Topology):
    """Dump one SinrSample row per realization (all tiers) as CSV."""
    names = [f.name for f in fields(SinrSample)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["realization", *names])
        for j in range(len(batch)):
            s = compute_sinr(batch.component(j), net, direction, topology)
            row = [getattr(s, k) for k in names]
            row = [v.value if hasattr(v, "value") else (repr(v) if isinstance(v, float) else v) for v in row]
            w.writerow([j, *row])
