import math

import numpy as np
import pytest

from alphaduplex import analytics as an
from alphaduplex import mcsim
from alphaduplex.errors import DomainError
from alphaduplex.model import Direction, Network, TierParams, Topology, UserClass

SMALL = 25e6   # 25 km^2 window for fast geometry checks


def test_realize_is_deterministic(net):
    a = mcsim.realize(net, 11, 3, SMALL)
    b = mcsim.realize(net, 11, 3, SMALL)
    for name in ("bs_pos", "ue_pos", "ue_serving", "ul_user", "dl_user", "ue_power"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = mcsim.realize(net, 11, 4, SMALL)
    assert len(c.bs_pos) != len(a.bs_pos) or not np.array_equal(c.bs_pos, a.bs_pos)


def test_simulate_independent_of_workers_and_chunking(net):
    one = mcsim.simulate(net, 24, seed=5, workers=1, area=SMALL, chunk=24)
    many = mcsim.simulate(net, 24, seed=5, workers=2, area=SMALL, chunk=5)
    for name in ("r_o", "ul_signal", "ul_uu", "dl_dd", "dl_intra", "dl_si"):
        np.testing.assert_array_equal(getattr(one, name), getattr(many, name))


def test_association_is_weighted_nearest():
    tiers = (TierParams(lam=2e-6, p_d=5.0, rho=1e-9, tau=1.0), TierParams(lam=6e-6, p_d=1.0, rho=1e-9, tau=2.0))
    from alphaduplex.model import GlobalParams
    net = Network(GlobalParams(), tiers)
    rz = mcsim.realize(net, 3, 0, SMALL)
    taus = np.array([1.0, 2.0])[rz.bs_tier]
    d = np.linalg.norm(rz.ue_pos[:, None, :] - rz.bs_pos[None, :, :], axis=2)
    np.testing.assert_array_equal(rz.ue_serving, np.argmin(d * taus, axis=1))
    np.testing.assert_allclose(rz.ue_dist, d[np.arange(len(d)), rz.ue_serving])


def test_bs_count_is_poisson(net):
    n = 1000
    counts = np.array([len(mcsim.realize(net, s, 0, SMALL).bs_pos) for s in range(n)])
    mean = net.tiers[0].lam * SMALL
    assert abs(counts.mean() - mean) < 2 * math.sqrt(mean / n)
    assert counts.var(ddof=1) == pytest.approx(mean, rel=0.15)


def test_power_control(net):
    rz = mcsim.realize(net, 9, 0, SMALL)
    rx = rz.ue_power * rz.ue_dist ** -net.glob.eta_uu
    np.testing.assert_allclose(rx[rz.ue_ccu], net.tiers[0].rho, rtol=1e-10)
    assert np.all(rz.ue_power[~rz.ue_ccu] == net.glob.p_u_max)
    assert np.all(rz.ue_power <= net.glob.p_u_max * (1 + 1e-12))


def test_every_cell_schedules_a_pair_with_the_angular_gap(net):
    rz = mcsim.realize(net, 21, 0, SMALL)
    assert np.all(rz.ul_user >= 0) and np.all(rz.dl_user >= 0)
    assert np.all(rz.ue_serving[rz.ul_user] == np.arange(len(rz.bs_pos)))
    assert np.all(rz.ue_serving[rz.dl_user] == np.arange(len(rz.bs_pos)))
    rel = rz.ue_pos - rz.bs_pos[rz.ue_serving]
    bearing = np.arctan2(rel[:, 1], rel[:, 0])
    gap = mcsim._bearing_gap(bearing[rz.ul_user], bearing[rz.dl_user])
    assert np.all(gap >= net.glob.delta_0)
    c = rz.ue_serving[rz.target_ue]
    assert rz.ul_user[c] == rz.target_ue and rz.target_partner == rz.dl_user[c]


def test_acceptance_falls_with_angular_gap(net):
    acc = []
    for deg in (0, 45, 90, 135):
        trial = net.with_global(delta_0=math.radians(deg))
        acc.append(np.mean([mcsim.realize(trial, s, 0, SMALL).acceptance for s in range(20)]))
    assert acc[0] == 1.0
    assert np.all(np.diff(acc) < 0)


def test_bearing_gap_range():
    a = np.linspace(-10, 10, 101)
    g = mcsim._bearing_gap(a, 0.3)
    assert np.all((g >= 0) & (g <= math.pi + 1e-12))
    assert mcsim._bearing_gap(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(0.2)


def test_sinr_energy_accounting(net):
    comp = mcsim.simulate(net, 3, seed=1, area=SMALL).component(0)
    for direction in Direction:
        for topo in Topology:
            s = mcsim.compute_sinr(comp, net, direction, topo)
            total = (s.interference_dd + s.interference_uu + s.interference_ud + s.interference_du
                     + s.residual_si + s.noise)
            assert s.sinr == pytest.approx(s.signal / total, rel=1e-14)
    s2 = mcsim.compute_sinr(comp, net, Direction.DL, Topology.TWO_NODE)
    s3 = mcsim.compute_sinr(comp, net, Direction.DL, Topology.THREE_NODE)
    c = net.factors(0, 0, Direction.DL).cross
    assert s2.residual_si == pytest.approx(net.glob.beta_d * c * comp.dl_si)
    assert s3.residual_si == 0.0
    assert s3.interference_ud - s2.interference_ud == pytest.approx(c * comp.dl_intra)


def test_batch_sinr_matches_single_link_path(net):
    batch = mcsim.simulate(net, 6, seed=2, area=SMALL)
    for direction in Direction:
        vec, _ = mcsim.batch_sinr(batch, net, direction, Topology.THREE_NODE)
        one = [mcsim.compute_sinr(batch.component(j), net, direction, Topology.THREE_NODE).sinr
               for j in range(len(batch))]
        np.testing.assert_allclose(vec, one, rtol=1e-14)


def test_batch_rejects_other_geometry(net):
    batch = mcsim.simulate(net, 2, seed=2, area=SMALL)
    mcsim.batch_sinr(batch, net.with_tiers(alpha=0.3).with_global(beta_d=1e-9), Direction.DL, Topology.TWO_NODE)
    with pytest.raises(DomainError):
        mcsim.batch_sinr(batch, net.with_tiers(lam=2e-6), Direction.DL, Topology.TWO_NODE)


def test_dd_transform_matches_analytic(net, reference_batch):
    b = reference_batch
    p_d = net.tiers[0].p_d
    for scale in (0.3, 1.0, 3.0):
        s = scale * b.r_o ** 4 / p_d
        emp = np.exp(-s * b.dl_dd[:, 0]).mean()
        ana = np.mean([an.lt_interference(net, an.Interference.DD, UserClass.CCU, 0, 0, si, r)
                       for si, r in zip(s, b.r_o)])
        assert emp == pytest.approx(ana, rel=0.02)


def test_du_transform_dominates_no_exclusion_form(net, reference_batch):
    # other BSs avoid the disk that makes the serving BS the nearest one, so the
    # simulated DU interference is stochastically smaller than the unexcluded PPP
    du = reference_batch.ul_du[:, 0]
    for scale in (0.3, 1.0, 3.0):
        s = scale / np.median(du)
        emp = np.exp(-s * du)
        ana = an.lt_interference(net, an.Interference.DU, UserClass.CCU, 0, 0, s)
        assert emp.mean() - 3 * emp.std() / math.sqrt(len(du)) > ana


def test_ci_shrinks_like_root_n(net, reference_batch):
    est = mcsim.estimate_from_batch(reference_batch, net, 1.0, "outage", 0, Direction.DL,
                                    UserClass.AVERAGE, Topology.TWO_NODE)
    p = est.mean
    assert est.n == len(reference_batch)
    assert est.ci_halfwidth == pytest.approx(1.96 * math.sqrt(p * (1 - p) / est.n), rel=1e-3)


def test_estimate_checks(net):
    with pytest.raises(DomainError):
        mcsim.estimate(net, 1.0, 50, "rate", 0, Direction.DL, UserClass.CCU, Topology.TWO_NODE)
    batch = mcsim.simulate(net, 2, seed=2, area=SMALL)
    with pytest.raises(DomainError):
        mcsim.estimate_from_batch(batch, net, 1.0, "sinr", 0, Direction.DL, UserClass.CCU, Topology.TWO_NODE)


def test_write_samples(tmp_path, net):
    batch = mcsim.simulate(net, 4, seed=2, area=SMALL)
    path = tmp_path / "s.csv"
    mcsim.write_samples(path, batch, net, Direction.DL, Topology.THREE_NODE)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("realization,direction,tier")
    assert len(lines) == 5


def test_half_duplex_without_leakage_keeps_only_dd(net):
    from alphaduplex.spectral import OverlapFactors
    hd = net.with_tiers(alpha=0.0).with_factors({(Direction.DL, 0, 0): OverlapFactors(1.0, 0.0, Direction.DL, 0, 0)})
    comp = mcsim.simulate(hd, 2, seed=4, area=SMALL).component(1)
    for topo in Topology:
        s = mcsim.compute_sinr(comp, hd, Direction.DL, topo)
        assert s.interference_ud == 0 and s.residual_si == 0 and s.interference_uu == 0
        assert s.sinr == pytest.approx(comp.dl_signal / comp.dl_dd.sum(), rel=1e-14)


def test_no_residual_si_without_sic_leakage(net):
    comp = mcsim.simulate(net, 2, seed=4, area=SMALL).component(0)
    trial = net.with_global(beta_d=0.0).with_tiers(beta_u=0.0)
    assert mcsim.compute_sinr(comp, trial, Direction.DL, Topology.TWO_NODE).residual_si == 0.0
    assert mcsim.compute_sinr(comp, trial, Direction.UL, Topology.TWO_NODE).residual_si == 0.0


def test_outage_vanishes_for_tiny_threshold(net, reference_batch):
    est = mcsim.estimate_from_batch(reference_batch, net, 1e-9, "outage", 0, Direction.DL,
                                    UserClass.AVERAGE, Topology.TWO_NODE)
    assert est.mean < 1e-3


def test_full_duplex_uplink_matches_analytic(net, reference_batch):
    # at alpha = 1 both sides sit at outage ~ 1; the Wald interval collapses to zero
    # width when every sample fails, so the rule-of-three bound 3/n stands in for it
    for cls in UserClass:
        est = mcsim.estimate_from_batch(reference_batch, net, 1.0, "outage", 0, Direction.UL, cls,
                                        Topology.TWO_NODE)
        ana = an.outage(net, 0, Direction.UL, cls)
        assert abs(est.mean - ana) <= 0.02
        assert abs(est.mean - ana) <= max(est.ci_halfwidth, 3.0 / est.n)


def test_ci_shrinks_by_root_two_when_n_doubles(net, reference_batch):
    import dataclasses
    b = reference_batch
    half = dataclasses.replace(b, **{f.name: getattr(b, f.name)[: len(b) // 2]
                                     for f in dataclasses.fields(b) if f.name not in ("key", "seed")})
    args = (net, 1.0, "outage", 0, Direction.DL, UserClass.AVERAGE, Topology.TWO_NODE)
    ratio = mcsim.estimate_from_batch(half, *args).ci_halfwidth / mcsim.estimate_from_batch(b, *args).ci_halfwidth
    assert ratio == pytest.approx(math.sqrt(2), rel=0.15)
