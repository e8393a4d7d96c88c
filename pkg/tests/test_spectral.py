import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from alphaduplex.errors import DomainError
from alphaduplex.model import TierParams
from alphaduplex.spectral import (
    Direction,
    PulseKind,
    in_band_energy,
    make_band_plan,
    pulse_spectrum,
    raw_cross_energy,
)
from alphaduplex.specfun import integrate

EPS = 0.03134
B = 1e6


def test_band_plan_half_duplex_layout():
    p = make_band_plan(0.0, B, B, EPS)
    assert p.b_u_alpha == B and p.b_d_alpha == B
    # channels sit either side of the guard band
    assert p.f_u == pytest.approx(-(EPS * B + B) / 2)
    assert p.f_d == pytest.approx((EPS * B + B) / 2)
    assert p.delta_f == pytest.approx(-(1 + EPS) * B)


def test_band_plan_full_duplex_collapses_centres():
    p = make_band_plan(1.0, B, B, EPS)
    assert p.f_u == pytest.approx(0.0, abs=1e-6)
    assert p.f_d == pytest.approx(0.0, abs=1e-6)
    assert p.b_u_alpha == pytest.approx((2 + EPS) * B)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.0, 1.0))
def test_band_plan_growth_is_linear(alpha):
    p = make_band_plan(alpha, B, B, EPS)
    assert p.b_u_alpha == pytest.approx(B + alpha * (1 + EPS) * B)
    assert p.delta_f == pytest.approx(-(1 + EPS) * B * (1 - alpha), abs=1e-6)


def test_band_plan_domain():
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            make_band_plan(bad, B, B, EPS)
    with pytest.raises(DomainError):
        make_band_plan(0.5, 0.0, B, EPS)
    with pytest.raises(DomainError):
        make_band_plan(0.5, B, B, -1.0)


@pytest.mark.parametrize("kind", list(PulseKind))
def test_pulses_have_unit_energy(kind):
    # lobe by lobe out to 100 B; the sinc^2 tail beyond that carries about 5e-4
    half = 100 * B
    nulls = tuple(np.arange(-half, half + 1, B / 2)[1:-1])
    e = integrate(lambda f: pulse_spectrum(kind, B, f) ** 2, -half, half, points=nulls)
    assert e == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("kind", list(PulseKind))
def test_in_band_energy_below_one(kind):
    assert 0.5 < in_band_energy(kind, B) < 1.0


def test_self_intra_factor_is_one(net):
    for d in Direction:
        assert net.factors(0, 0, d).intra == pytest.approx(1.0, rel=1e-12)


def _cross(net, alpha, d):
    return net.with_tiers(alpha=alpha).factors(0, 0, d).cross


def test_cross_factors_small_in_half_duplex(net):
    assert _cross(net, 0.0, Direction.UL) < 1e-9
    assert _cross(net, 0.0, Direction.DL) < 1e-3


def test_dl_cross_factor_grows_with_alpha(net):
    vals = [_cross(net, a, Direction.DL) for a in np.linspace(0, 1, 11)]
    assert np.all(np.diff(vals) > 0)


def test_ul_cross_factor_vanishes_at_orthogonality(net):
    r = minimize_scalar(lambda a: _cross(net, a, Direction.UL), bounds=(0.15, 0.45),
                        method="bounded", options={"xatol": 1e-6})
    assert r.x == pytest.approx(0.28859, abs=1e-4)
    assert r.fun < 1e-10


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.0, 1.0), ul=st.sampled_from(list(PulseKind)), dl=st.sampled_from(list(PulseKind)))
def test_raw_cross_energy_bounded_by_cauchy_schwarz(alpha, ul, dl):
    t = TierParams(lam=1e-6, p_d=5.0, rho=1e-9, alpha=alpha, pulse_ul=ul, pulse_dl=dl)
    plan = make_band_plan(alpha, B, B, EPS)
    for d in Direction:
        v = raw_cross_energy(t, t, d, (plan, plan))
        assert 0.0 <= v <= 1.0 + 1e-12


def test_normalised_dl_factor_can_exceed_one(net):
    # normalising by the in-window self energy lets the sinc receiver see more than 1
    assert _cross(net, 1.0, Direction.DL) == pytest.approx(1.0555, abs=1e-3)


def test_band_plan_zero_guard_midpoint():
    p = make_band_plan(0.5, B, B, 0.0)
    assert abs(p.delta_f) == pytest.approx(0.5 * B)
    assert p.b_u_alpha == pytest.approx(1.5 * B) and p.b_d_alpha == pytest.approx(1.5 * B)


def test_pulse_shape_points():
    assert pulse_spectrum(PulseKind.SINC, B, 0.0) == pytest.approx(1 / math.sqrt(B / 2))
    assert pulse_spectrum(PulseKind.SINC_SQUARED, B, B / 2) == pytest.approx(0.0, abs=1e-20)
    assert pulse_spectrum(PulseKind.SINC_SQUARED, B, -B / 2) == pytest.approx(0.0, abs=1e-20)


def test_intra_factor_between_different_widths():
    from alphaduplex.spectral import intra_mode_factor
    t = TierParams(lam=1e-6, p_d=5.0, rho=1e-9, pulse_dl=PulseKind.SINC)
    narrow, wide = make_band_plan(0.0, B, B, EPS), make_band_plan(1.0, B, B, EPS)
    a = intra_mode_factor(t, t, Direction.DL, (narrow, wide))
    b = intra_mode_factor(t, t, Direction.DL, (wide, narrow))
    assert 0 < a < 1 and 0 < b < 1
    assert abs(a - b) > 1e-3


def test_full_overlap_same_pulse_is_co_channel():
    from alphaduplex.spectral import cross_mode_factor
    for kind in PulseKind:
        t = TierParams(lam=1e-6, p_d=5.0, rho=1e-9, pulse_ul=kind, pulse_dl=kind)
        plan = make_band_plan(1.0, B, B, EPS)
        for d in Direction:
            assert cross_mode_factor(t, t, d, (plan, plan)) == pytest.approx(1.0, rel=1e-9)


def test_half_duplex_mixed_pulses_leak_a_little():
    from alphaduplex.spectral import cross_mode_factor
    t = TierParams(lam=1e-6, p_d=5.0, rho=1e-9)
    plan = make_band_plan(0.0, B, B, EPS)
    for d in Direction:
        assert 0 < cross_mode_factor(t, t, d, (plan, plan)) < 1e-3
