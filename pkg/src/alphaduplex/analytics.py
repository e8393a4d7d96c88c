"""Outage and rate of alpha-duplex multi-tier networks via interference Laplace transforms.

The typical receiver sits at the origin: a BS for the uplink, a UE for the
downlink. Conditioned on the serving distance ``r_o``, exponential fading of
the useful link turns the success probability into a product of Laplace
transforms of the aggregate interference, one per (tier, interference type),
times a self-interference factor. Averaging that product over the serving
distance law of the user class gives the outage.

Many arguments broadcast: the Laplace transforms accept numpy arrays for
``s`` and ``r_o`` so outage integrands can be written in vector form.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError
from .model import Direction, Method, Network, PerformancePoint, SIKind, Topology, UserClass
from .specfun import (
    QuadratureSpec,
    erf,
    gauss_legendre,
    hyp2f1,
    integrate,
    lower_incomplete_gamma,
)

__all__ = [
    "Interference",
    "ConstantPower",
    "DiscretePower",
    "InversionPower",
    "class_probabilities",
    "serving_distance_pdf",
    "serving_distance_cdf",
    "mean_serving_distance",
    "ul_power_moment",
    "lt_ppp_general",
    "lt_ppp_bound",
    "lt_interference",
    "intracell_lt",
    "si_factor",
    "outage",
    "rate",
    "performance",
    "closed_form_single_tier",
    "critical_beta_d",
    "critical_beta_d_crossing",
]

OUTAGE_QUAD = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8)
_N_DELTA = 48
_N_RADIAL = 96
_N_LAGUERRE = 80


class Interference(enum.Enum):
    UU = "uu"   # UL users into a BS receiving UL
    DU = "du"   # BSs transmitting DL into a BS receiving UL
    DD = "dd"   # BSs transmitting DL into a UE receiving DL
    UD = "ud"   # UL users into a UE receiving DL


# ---------------------------------------------------------------------------
# Serving distance and user classes
# ---------------------------------------------------------------------------


def _pi_lam_r2(net, i):
    """pi * lambda_bar_i * R_ccu^2, the CCU boundary in exponential scale."""
    return math.pi * net.lambda_bar(i) * net.r_ccu(i) ** 2


def class_probabilities(net: Network, i: int):
    """``(P{CCU}, P{CEU})`` for a user associated with tier ``i``."""
    u = _pi_lam_r2(net, i)
    p_ceu = math.exp(-u)
    return -math.expm1(-u), p_ceu


def serving_distance_pdf(net: Network, i: int, user_class: UserClass, r):
    lb = net.lambda_bar(i)
    big_r = net.r_ccu(i)
    r = np.asarray(r, dtype=float)
    u = math.pi * lb * r * r
    if user_class is UserClass.AVERAGE:
        return 2 * math.pi * lb * r * np.exp(-u)
    p_ccu, _ = class_probabilities(net, i)
    if user_class is UserClass.CCU:
        return np.where(r <= big_r, 2 * math.pi * lb * r * np.exp(-u) / p_ccu, 0.0)
    u_edge = math.pi * lb * big_r ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        tail = 2 * math.pi * lb * r * np.exp(-(u - u_edge))
    return np.where(r > big_r, tail, 0.0)


def serving_distance_cdf(net: Network, i: int, user_class: UserClass, r):
    lb = net.lambda_bar(i)
    big_r = net.r_ccu(i)
    r = np.asarray(r, dtype=float)
    u = math.pi * lb * r * r
    if user_class is UserClass.AVERAGE:
        return -np.expm1(-u)
    p_ccu, _ = class_probabilities(net, i)
    if user_class is UserClass.CCU:
        return np.where(r <= big_r, -np.expm1(-u) / p_ccu, 1.0)
    u_edge = math.pi * lb * big_r ** 2
    return np.where(r > big_r, -np.expm1(-(u - u_edge)), 0.0)


def _erfcx(x):
    if x < 25.0:
        return math.exp(x * x) * math.erfc(x)
    inv = 1.0 / (x * x)
    return (1.0 - 0.5 * inv + 0.75 * inv ** 2 - 1.875 * inv ** 3) / (x * math.sqrt(math.pi))


def mean_serving_distance(net: Network, i: int, user_class: UserClass):
    """Mean serving distance of a CCU, CEU or unconditioned user in tier ``i``."""
    lb = net.lambda_bar(i)
    big_r = net.r_ccu(i)
    root = math.sqrt(lb)
    if user_class is UserClass.AVERAGE or math.isinf(big_r):
        if user_class is UserClass.CEU:
            raise DomainError("no cell-edge users when the UE power is unbounded")
        return 1.0 / (2 * root)
    x = math.sqrt(math.pi * lb) * big_r
    if user_class is UserClass.CCU:
        p_ccu, _ = class_probabilities(net, i)
        return (erf(x) - 2 * root * big_r * math.exp(-x * x)) / (2 * root * p_ccu)
    # E[r | r > R] = R + exp(pi lb R^2) erfc(sqrt(pi lb) R) / (2 sqrt(lb))
    return big_r + _erfcx(x) / (2 * root)


# ---------------------------------------------------------------------------
# Transmit-power distributions of interferers
# ---------------------------------------------------------------------------


class ConstantPower:
    def __init__(self, p):
        self.p = float(p)

    def mean(self):
        return self.p

    def expect(self, g):
        return g(np.array([self.p]))[..., 0]


class DiscretePower:
    def __init__(self, values, probs):
        self.values = np.asarray(values, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if not math.isclose(self.probs.sum(), 1.0, rel_tol=1e-12):
            raise DomainError("power probabilities must sum to 1")

    def mean(self):
        return float(np.dot(self.values, self.probs))

    def expect(self, g):
        return np.sum(g(self.values) * self.probs, axis=-1)


def _exp_weight_rule(upper, n):
    """Nodes and weights for int_0^upper e^-u phi(u) du."""
    if upper <= 40.0:
        x, w = np.polynomial.legendre.leggauss(n)
        u = 0.5 * upper * (x + 1.0)
        return u, 0.5 * upper * w * np.exp(-u)
    return np.polynomial.laguerre.laggauss(_N_LAGUERRE)


class InversionPower:
    """UL transmit power of a random UE under truncated channel inversion.

    ``P = rho * r^eta`` for ``r <= R`` (``r`` Rayleigh with intensity
    ``lam_bar``) and ``P = p_max`` otherwise.
    """

    def __init__(self, rho, p_max, lam_bar, eta, n=_N_RADIAL):
        self.rho = rho
        self.p_max = p_max
        self.lam_bar = lam_bar
        self.eta = eta
        self.edge = math.pi * lam_bar * (p_max / rho) ** (2.0 / eta)
        self._u, self._w = _exp_weight_rule(self.edge, n)

    @classmethod
    def of_tier(cls, net: Network, k: int):
        return cls(net.tiers[k].rho, net.glob.p_u_max, net.lambda_bar(k), net.glob.eta_dd)

    def power_at(self, u):
        return self.rho * (u / (math.pi * self.lam_bar)) ** (self.eta / 2.0)

    def mean(self):
        return self.moment(1.0)

    def moment(self, zeta):
        a = zeta * self.eta / 2.0
        head = math.exp(zeta * math.log(self.rho) - a * math.log(math.pi * self.lam_bar))
        head *= lower_incomplete_gamma(a + 1.0, self.edge)
        if math.isinf(self.p_max):
            return head
        return head + self.p_max ** zeta * math.exp(-self.edge)

    def expect(self, g):
        total = np.sum(g(self.power_at(self._u)) * self._w, axis=-1)
        if math.isinf(self.p_max):
            return total
        return total + math.exp(-self.edge) * g(np.array([self.p_max]))[..., 0]


def ul_power_moment(net: Network, k: int, zeta: float) -> float:
    """``E[P_u^zeta]`` of a tier-k UE: channel-inversion part plus cell-edge mass."""
    if not zeta > 0:
        raise DomainError("zeta must be > 0")
    return InversionPower.of_tier(net, k).moment(zeta)


# ---------------------------------------------------------------------------
# Laplace transforms of PPP interference
# ---------------------------------------------------------------------------


def _hyp_term(s, p, a, eta):
    """a^(2-eta) s p 2F1(1, 1-2/eta; 2-2/eta; -a^-eta p s) / (eta - 2)."""
    b = 1.0 - 2.0 / eta
    y = s * p * a ** (-eta)
    return a * a * y * hyp2f1(1.0, b, b + 1.0, -y) / (eta - 2.0)


def lt_ppp_general(s, lam, eta, exclusion, power=None):
    """LT of PPP interference with Rayleigh fading and a protection ball.

    ``exclusion`` is either a radius or a callable ``a(P)`` giving a
    per-interferer radius from its transmit power; ``power`` is one of the
    power distributions above (default: constant 1 W).
    """
    if not eta > 2:
        raise DomainError("eta must exceed 2")
    power = ConstantPower(1.0) if power is None else power
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("Laplace argument must be >= 0")
    sb = s[..., None]
    if callable(exclusion):
        mean_term = power.expect(lambda p: _hyp_term(sb, p, exclusion(p), eta))
        return np.exp(-2 * math.pi * lam * mean_term)
    a = np.asarray(exclusion, dtype=float)
    if np.any(a < 0):
        raise DomainError("exclusion radius must be >= 0")
    if np.all(a == 0):
        delta = 2.0 / eta
        moment = power.expect(lambda p: (sb * p) ** delta)
        return np.exp(-(2 * math.pi ** 2 * lam / eta) * moment / math.sin(math.pi * delta))
    ab = a[..., None]
    mean_term = power.expect(lambda p: _hyp_term(sb, p, ab, eta))
    return np.exp(-2 * math.pi * lam * mean_term)


def lt_ppp_bound(s, lam, eta, a, mean_power):
    """Jensen lower bound on :func:`lt_ppp_general`: the power expectation moves inside."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise DomainError("the bound needs a strictly positive, power-independent exclusion radius")
    s = np.asarray(s, dtype=float)
    return np.exp(-2 * math.pi * lam * _hyp_term(s, mean_power, a, eta))


def _lt_inversion_ccu(net, k, s, eta):
    """Interference from power-controlled UEs, each excluded to its own rho-radius."""
    rho = net.tiers[k].rho
    moment = ul_power_moment(net, k, 2.0 / eta)
    b = 1.0 - 2.0 / eta
    s = np.asarray(s, dtype=float)
    expo = (2 * math.pi * net.tiers[k].lam * rho ** (1 - 2 / eta) / (eta - 2)) * moment
    return np.exp(-expo * s * hyp2f1(1.0, b, b + 1.0, -rho * s))


def _lt_inversion_edge(net, k, s, r_o, eta, method):
    lam = net.tiers[k].lam
    if method is Method.EXACT:
        return lt_ppp_general(s, lam, eta, r_o, InversionPower.of_tier(net, k))
    return lt_ppp_bound(s, lam, eta, r_o, ul_power_moment(net, k, 1.0))


def lt_interference(net: Network, kind: Interference, user_class: UserClass, i: int, k: int, s,
                    r_o=None, method: Method = Method.EXACT, topology: Topology | None = None):
    """LT of the tier-k aggregate interference of type ``kind`` at a tier-i receiver.

    ``user_class`` is the class of the tagged user (CCU or CEU). ``r_o`` is
    the tagged serving distance; required for DD and for the CEU variants of
    UU and UD. For UD in a three-node cell (``k == i``) the intra-cell term is
    included, exact or by the mean-geometry approximation depending on ``method``.
    """
    g = net.glob
    if user_class is UserClass.AVERAGE:
        raise DomainError("Laplace transforms are defined per user class")
    needs_r = kind is Interference.DD or (user_class is UserClass.CEU and kind in (Interference.UU, Interference.UD))
    if needs_r and r_o is None:
        raise DomainError(f"{kind.name} interference for a {user_class.name} needs r_o")
    s = np.asarray(s, dtype=float)
    if kind is Interference.DU:
        return lt_ppp_general(s, net.tiers[k].lam, g.eta_du, 0.0, ConstantPower(net.tiers[k].p_d))
    if kind is Interference.DD:
        a = np.asarray(r_o, dtype=float) * net.tiers[i].tau / net.tiers[k].tau
        return lt_ppp_general(s, net.tiers[k].lam, g.eta_dd, a, ConstantPower(net.tiers[k].p_d))
    eta = g.eta_uu if kind is Interference.UU else g.eta_ud
    if user_class is UserClass.CCU:
        value = _lt_inversion_ccu(net, k, s, eta)
    else:
        value = _lt_inversion_edge(net, k, s, r_o, eta, method)
    if kind is Interference.UD:
        topo = net.tiers[i].topology if topology is None else topology
        if topo is Topology.THREE_NODE and k == i:
            if r_o is None:
                raise DomainError("intra-cell interference needs r_o")
            value = value * intracell_lt(net, i, r_o, s, exact=method is Method.EXACT)
    return value


# ---------------------------------------------------------------------------
# Intra-cell interference (three-node topology)
# ---------------------------------------------------------------------------


def _partner_distance_sq(r, r_o, delta):
    return r * r + r_o * r_o - 2.0 * r * r_o * np.cos(delta)


def intracell_lt(net: Network, i: int, r_o, s, exact: bool = True):
    """LT of the UL signal of the cell partner as seen by the DL user.

    The partner's distance to the BS follows the unconditioned serving law,
    its bearing relative to the DL user is uniform on ``[delta_0, pi]`` and
    its power follows truncated channel inversion.
    """
    g = net.glob
    rho = net.tiers[i].rho
    lb = net.lambda_bar(i)
    edge = _pi_lam_r2(net, i)
    r_o = np.asarray(r_o, dtype=float)
    s = np.asarray(s, dtype=float)
    r_o, s = np.broadcast_arrays(r_o, s)
    if np.any(r_o < 0) or np.any(s < 0):
        raise DomainError("r_o and s must be >= 0")
    p_ccu, p_ceu = class_probabilities(net, i)
    half = g.eta_ud / 2.0

    if not exact:
        spread = 2.0 * math.sin(g.delta_0) / (math.pi - g.delta_0)
        rc = mean_serving_distance(net, i, UserClass.CCU)
        p_c = rho * rc ** g.eta_uu
        d2 = rc * rc + r_o * r_o + spread * r_o * rc
        out = p_ccu / (1.0 + s * p_c * d2 ** (-half))
        if p_ceu > 0:
            re = mean_serving_distance(net, i, UserClass.CEU)
            d2 = re * re + r_o * r_o + spread * r_o * re
            out = out + p_ceu / (1.0 + s * g.p_u_max * d2 ** (-half))
        return out

    ro = r_o[..., None, None]
    sb = s[..., None, None]

    def bearing_mean(r, power):
        def inner(delta):
            d2 = _partner_distance_sq(r[..., None], ro, delta)
            with np.errstate(divide="ignore"):
                rx = sb * power[..., None] * d2 ** (-half)
            return 1.0 / (1.0 + rx)
        return gauss_legendre(inner, g.delta_0, math.pi, _N_DELTA) / (math.pi - g.delta_0)

    u, w = _exp_weight_rule(edge, _N_RADIAL)
    r = np.sqrt(u / (math.pi * lb))
    total = np.sum(bearing_mean(r, rho * r ** g.eta_uu) * w, axis=-1)
    if p_ceu > 0:
        v, wv = np.polynomial.laguerre.laggauss(_N_LAGUERRE)
        r = np.sqrt((edge + v) / (math.pi * lb))
        tail = np.sum(bearing_mean(r, np.full_like(r, g.p_u_max)) * wv, axis=-1)
        total = total + p_ceu * tail
    return total


# ---------------------------------------------------------------------------
# Self interference
# ---------------------------------------------------------------------------


def _rician_mgf_quad(y, k_factor):
    from scipy.special import i0e

    kp = k_factor + 1.0

    def density(h):
        z = 2.0 * np.sqrt(k_factor * kp * h)
        return kp * i0e(z) * np.exp(z - k_factor - kp * h)

    out = []
    for yy in np.atleast_1d(y).ravel():
        out.append(integrate(lambda h: np.exp(-yy * h) * density(h), 0.0, math.inf,
                             scale=1.0, points=(k_factor / kp,) if k_factor else ()))
    return np.array(out).reshape(np.shape(y))


def si_factor(net: Network, direction: Direction, i: int, x, p_source=None,
              topology: Topology | None = None):
    """``E_h[exp(-x beta h |C~(a_i, a_i)|^2 P_source)]`` under the configured SI model.

    For the uplink the SI source is the BS's own DL power; for the downlink it
    is the tagged UE's own UL power (two-node topology only) and must be
    passed as ``p_source``.
    """
    g = net.glob
    tier = net.tiers[i]
    x = np.asarray(x, dtype=float)
    if direction is Direction.UL:
        beta, power = tier.beta_u, (tier.p_d if p_source is None else p_source)
    else:
        topo = tier.topology if topology is None else topology
        if topo is Topology.THREE_NODE:
            return np.ones_like(x)[()]
        if p_source is None:
            raise DomainError("DL self-interference needs the UE transmit power")
        beta, power = g.beta_d, p_source
    y = x * beta * net.factors(i, i, direction).cross * np.asarray(power, dtype=float)
    kind = g.si_model.kind
    if kind is SIKind.CONSTANT:
        return np.exp(-y)
    if kind is SIKind.EXPONENTIAL:
        return 1.0 / (1.0 + y)
    return _rician_mgf_quad(y, g.si_model.k_factor)


# ---------------------------------------------------------------------------
# Outage and rate
# ---------------------------------------------------------------------------


def _success_given_distance(net, i, direction, user_class, theta, r_o, method, topology):
    """P{SINR >= theta | r_o} for an array of serving distances."""
    g = net.glob
    tier = net.tiers[i]
    r_o = np.asarray(r_o, dtype=float)
    if direction is Direction.UL:
        eta = g.eta_uu
        if user_class is UserClass.CCU:
            power = np.full_like(r_o, tier.rho * 1.0)
            gain = np.ones_like(r_o)          # r_o^eta / P cancels for a CCU
        else:
            power = np.full_like(r_o, g.p_u_max)
            gain = r_o ** eta
        base = theta * gain / power
        out = np.exp(-g.n0 * base) * si_factor(net, Direction.UL, i, base)
        for k in range(len(net.tiers)):
            f = net.factors(i, k, Direction.UL)
            out = out * lt_interference(net, Interference.UU, user_class, i, k, base * f.intra, r_o, method)
            out = out * lt_interference(net, Interference.DU, user_class, i, k, base * f.cross, r_o, method)
        return out
    eta = g.eta_dd
    base = theta * r_o ** eta / tier.p_d
    if user_class is UserClass.CCU:
        ue_power = tier.rho * r_o ** g.eta_uu
    else:
        ue_power = np.full_like(r_o, g.p_u_max)
    out = np.exp(-g.n0 * base) * si_factor(net, Direction.DL, i, base, ue_power, topology)
    for k in range(len(net.tiers)):
        f = net.factors(i, k, Direction.DL)
        out = out * lt_interference(net, Interference.DD, user_class, i, k, base * f.intra, r_o, method)
        out = out * lt_interference(net, Interference.UD, user_class, i, k, base * f.cross, r_o, method,
                                    topology)
    return out


def outage(net: Network, i: int, direction: Direction, user_class: UserClass, theta=None,
           method: Method = Method.EXACT, topology: Topology | None = None) -> float:
    """Outage probability of a tier-i user of the given class.

    ``method`` selects exact Laplace transforms (Exact) or the Jensen bound
    and the closed-form intra-cell approximation (Bounded).
    """
    theta = net.glob.theta if theta is None else theta
    if not theta > 0:
        raise DomainError("theta must be > 0")
    topology = net.tiers[i].topology if topology is None else topology
    p_ccu, p_ceu = class_probabilities(net, i)
    if user_class is UserClass.AVERAGE:
        o_c = outage(net, i, direction, UserClass.CCU, theta, method, topology) if p_ccu > 0 else 0.0
        o_e = outage(net, i, direction, UserClass.CEU, theta, method, topology) if p_ceu > 0 else 0.0
        return p_ccu * o_c + p_ceu * o_e
    if user_class is UserClass.CEU and p_ceu == 0:
        raise DomainError("no cell-edge users when the UE power is unbounded")
    if user_class is UserClass.CCU and p_ccu == 0:
        raise DomainError("no cell-centre users for this power budget")

    lb = net.lambda_bar(i)
    edge = _pi_lam_r2(net, i)

    def r_of(u):
        return np.sqrt(u / (math.pi * lb))

    if direction is Direction.UL and user_class is UserClass.CCU:
        # received power is pinned at rho, nothing to average
        success = _success_given_distance(net, i, direction, user_class, theta,
                                          np.array([net.r_ccu(i) if math.isfinite(edge) else 1.0]),
                                          method, topology)[0]
        return float(min(1.0, max(0.0, 1.0 - success)))

    if user_class is UserClass.CCU:
        def integrand(u):
            return np.exp(-u) * _success_given_distance(net, i, direction, user_class, theta, r_of(u),
                                                        method, topology)
        hi = edge if math.isfinite(edge) else math.inf
        success = integrate(integrand, 0.0, hi, OUTAGE_QUAD) / p_ccu
    else:
        def integrand(v):
            return np.exp(-v) * _success_given_distance(net, i, direction, user_class, theta,
                                                        r_of(edge + v), method, topology)
        success = integrate(integrand, 0.0, math.inf, OUTAGE_QUAD)
    return float(min(1.0, max(0.0, 1.0 - success)))


def rate(net: Network, i: int, direction: Direction, user_class: UserClass, theta=None,
         method: Method = Method.EXACT, topology: Topology | None = None) -> float:
    """Fixed-rate throughput ``BW(alpha_i) log2(1 + theta) (1 - outage)`` in bit/s."""
    theta = net.glob.theta if theta is None else theta
    o = outage(net, i, direction, user_class, theta, method, topology)
    return net.bandwidth(i, direction) * math.log2(1.0 + theta) * (1.0 - o)


def performance(net: Network, i: int, direction: Direction, user_class: UserClass, theta=None,
                method: Method = Method.EXACT, topology: Topology | None = None) -> PerformancePoint:
    theta = net.glob.theta if theta is None else theta
    topology = net.tiers[i].topology if topology is None else topology
    o = outage(net, i, direction, user_class, theta, method, topology)
    return PerformancePoint(i, direction, user_class, topology, theta, net.bandwidth(i, direction), o, method)


# ---------------------------------------------------------------------------
# Dense single-tier special case
# ---------------------------------------------------------------------------


def _check_single_tier(net: Network):
    g = net.glob
    checks = [
        (len(net.tiers) == 1, "single tier"),
        (g.eta_dd == 4 and g.eta_uu == 4 and g.eta_ud == 4, "eta_dd = eta_uu = eta_ud = 4"),
        (g.eta_du == 3, "eta_du = 3"),
        (math.isclose(g.delta_0, math.pi / 2), "delta_0 = 90 degrees"),
        (g.si_model.kind is SIKind.EXPONENTIAL, "exponential SI gain"),
        (g.n0 == 0, "interference-limited (n0 = 0)"),
        (math.isinf(g.p_u_max), "unbounded UE power"),
    ]
    for ok, what in checks:
        if not ok:
            raise DomainError(f"closed form requires {what}")


def _arctan_term(x):
    x = np.asarray(x, dtype=float)
    root = np.sqrt(x)
    return root * np.arctan(root)


def node_topology_factor(net: Network, topology: Topology, theta, r_o, exact=True):
    """Self- or intra-cell-interference factor of the dense single-tier DL.

    Two-node: residual SI of the tagged UE. Three-node: interference from the
    scheduled UL partner, by double quadrature or at mean distance and angle.
    """
    tier = net.tiers[0]
    g = net.glob
    c_d = net.factors(0, 0, Direction.DL).cross
    r_o = np.asarray(r_o, dtype=float)
    if topology is Topology.TWO_NODE:
        return tier.p_d / (tier.p_d + g.beta_d * c_d * tier.rho * r_o ** 8 * theta)
    lam = tier.lam
    load = r_o ** 4 * theta * c_d * tier.rho
    if not exact:
        k = 1.0 + 4.0 * lam * r_o ** 2 + (8.0 / math.pi) * math.sqrt(lam) * r_o
        return tier.p_d / (tier.p_d + load * k ** -2)
    # partner distance r: 2 pi lam r exp(-pi lam r^2), u = pi lam r^2
    u, w = np.polynomial.laguerre.laggauss(_N_LAGUERRE)
    r = np.sqrt(u / (math.pi * lam))
    ro = r_o[..., None, None]
    ld = load[..., None, None]

    def inner(delta):
        q = ro / r[..., None]
        d = 1.0 + q * q - 2.0 * q * np.cos(delta)
        return tier.p_d / (tier.p_d + ld * d ** -2)

    mean_bearing = gauss_legendre(inner, g.delta_0, math.pi, _N_DELTA) / (math.pi - g.delta_0)
    return np.sum(mean_bearing * w, axis=-1)


def _dl_common(net, theta, r_o):
    tier = net.tiers[0]
    lam = tier.lam
    c_d = net.factors(0, 0, Direction.DL).cross
    x = tier.rho * r_o ** 4 * theta * c_d / tier.p_d
    return np.exp(-math.pi * lam * r_o ** 2 * (1.0 + _arctan_term(theta)) - _arctan_term(x))


def closed_form_single_tier(net: Network, direction: Direction, topology: Topology, theta=None,
                            exact: bool = True):
    """``(outage, rate)`` of the dense interference-limited single-tier network.

    Valid for unbounded UE power, exponents 4/4/4/3, ``delta_0 = 90 deg``,
    exponential SI and zero noise; anything else raises :class:`DomainError`.
    ``exact`` picks the double-integral intra-cell term over its closed
    approximation.
    """
    _check_single_tier(net)
    theta = net.glob.theta if theta is None else theta
    tier = net.tiers[0]
    g = net.glob
    lam = tier.lam
    if direction is Direction.UL:
        c_u = net.factors(0, 0, Direction.UL).cross
        num = math.exp(-float(_arctan_term(theta))
                       - (4 * math.pi ** 2 * lam / (3 * math.sqrt(3))) * (theta * c_u * tier.p_d / tier.rho) ** (2 / 3))
        success = num / (1.0 + tier.beta_u * tier.p_d * c_u * theta / tier.rho)
    else:
        def integrand(r):
            return (2 * math.pi * lam * r * _dl_common(net, theta, r)
                    * node_topology_factor(net, topology, theta, r, exact))
        success = integrate(integrand, 0.0, math.inf, OUTAGE_QUAD, scale=1.0 / math.sqrt(lam))
    o = min(1.0, max(0.0, 1.0 - success))
    bw = net.bandwidth(0, direction)
    return o, bw * math.log2(1.0 + theta) * (1.0 - o)


def conditional_dl_rate_single_tier(net: Network, topology: Topology, r_o, theta=None, exact=True):
    """DL rate of the dense single tier conditioned on the serving distance ``r_o``."""
    _check_single_tier(net)
    theta = net.glob.theta if theta is None else theta
    bw = net.bandwidth(0, Direction.DL)
    return (bw * math.log2(1.0 + theta) * _dl_common(net, theta, r_o)
            * node_topology_factor(net, topology, theta, r_o, exact))


def critical_beta_d(lam, r_o=None):
    """Smallest-useful DL SIC attenuation for two-node to beat three-node operation.

    With ``r_o`` the distance-dependent closed form; without it the
    mean-distance simplification ``16 lam^2 / 9``.
    """
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    if r_o is None:
        return 16.0 * lam ** 2 / 9.0
    r_o = np.asarray(r_o, dtype=float)
    val = (4 * lam * r_o ** 4 + (8 / math.pi) * math.sqrt(lam) * r_o ** 3 + r_o ** 2) ** -2
    return val[()] if val.ndim == 0 else val


def critical_beta_d_crossing(net: Network, r_o, theta=None, exact=True, lo_db=-250.0, hi_db=50.0,
                             tol_db=1e-6):
    """Bisection in dB on ``beta_d`` for equal two- and three-node DL rates at ``r_o``.

    ``net`` must satisfy the dense single-tier assumptions. Returns the
    crossing in linear units, or NaN when the rate difference does not change
    sign on the bracket.
    """
    theta = net.glob.theta if theta is None else theta
    three = float(conditional_dl_rate_single_tier(net, Topology.THREE_NODE, r_o, theta, exact))

    def gap(beta_db):
        trial = net.with_global(beta_d=10 ** (beta_db / 10))
        return float(conditional_dl_rate_single_tier(trial, Topology.TWO_NODE, r_o, theta)) - three

    lo, hi = lo_db, hi_db
    f_lo, f_hi = gap(lo), gap(hi)
    if f_lo * f_hi > 0:
        return float("nan")
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        f_mid = gap(mid)
        if f_mid * f_lo > 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 10 ** (0.5 * (lo + hi) / 10)
