"""Network parameter containers shared by the analytical engine and the simulator.

All quantities are linear SI units: W, m, m^-2, Hz, rad. Unit conversion
from the dB / dBm / km^-2 values used in configuration files happens once,
in :mod:`alphaduplex.config`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

from .errors import DomainError
from .spectral import BandPlan, Direction, OverlapFactors, PulseKind, make_band_plan, overlap_factors

__all__ = [
    "Direction",
    "UserClass",
    "Topology",
    "Method",
    "SIKind",
    "SIModel",
    "TierParams",
    "GlobalParams",
    "Network",
    "PerformancePoint",
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watt",
]


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def dbm_to_watt(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


class UserClass(enum.Enum):
    CCU = "ccu"
    CEU = "ceu"
    AVERAGE = "avg"


class Topology(enum.Enum):
    TWO_NODE = "2nt"
    THREE_NODE = "3nt"


class Method(enum.Enum):
    EXACT = "exact"
    BOUNDED = "bounded"
    CLOSED_FORM = "closed_form"
    SIMULATED = "simulated"


class SIKind(enum.Enum):
    CONSTANT = "constant"
    EXPONENTIAL = "exponential"
    RICIAN = "rician"


@dataclass(frozen=True)
class SIModel:
    """Distribution of the unit-mean residual self-interference gain ``h_s``."""

    kind: SIKind = SIKind.EXPONENTIAL
    k_factor: float = 0.0

    def __post_init__(self):
        if self.kind is SIKind.RICIAN and not self.k_factor >= 0:
            raise DomainError("Rician K-factor must be >= 0")


@dataclass(frozen=True)
class TierParams:
    lam: float                      # BS intensity, m^-2
    p_d: float                      # BS transmit power, W
    rho: float                      # UL receive-power target, W
    tau: float = 1.0                # association distance weight
    alpha: float = 1.0
    pulse_ul: PulseKind = PulseKind.SINC_SQUARED
    pulse_dl: PulseKind = PulseKind.SINC
    beta_u: float = 1e-11           # BS-side mean SIC attenuation, linear
    topology: Topology = Topology.TWO_NODE

    def __post_init__(self):
        for name in ("lam", "p_d", "rho", "tau"):
            if not getattr(self, name) > 0:
                raise DomainError(f"tier parameter {name} must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta_u < 0:
            raise DomainError("beta_u must be >= 0")


@dataclass(frozen=True)
class GlobalParams:
    p_u_max: float = 3.0
    beta_d: float = 10 ** -7.5
    n0: float = 0.0
    eta_uu: float = 4.0
    eta_dd: float = 4.0
    eta_ud: float = 4.0
    eta_du: float = 3.0
    delta_0: float = math.pi / 2
    si_model: SIModel = field(default_factory=SIModel)
    theta: float = 1.0
    b_u_hd: float = 1e6
    b_d_hd: float = 1e6
    epsilon: float = 0.03134

    def __post_init__(self):
        for name in ("eta_uu", "eta_dd", "eta_ud", "eta_du"):
            if not getattr(self, name) > 2:
                raise DomainError(f"path-loss exponent {name} must exceed 2")
        if self.eta_dd != self.eta_uu:
            raise DomainError("eta_dd and eta_uu describe the same BS-UE link and must match")
        if not 0.0 <= self.delta_0 < math.pi:
            raise DomainError("delta_0 must lie in [0, pi)")
        if not self.p_u_max > 0:
            raise DomainError("p_u_max must be > 0")
        if self.beta_d < 0 or self.n0 < 0:
            raise DomainError("beta_d and n0 must be >= 0")
        if not self.theta > 0:
            raise DomainError("theta must be > 0")


@dataclass(frozen=True)
class Network:
    """A full parameter set: global values plus one entry per tier."""

    glob: GlobalParams
    tiers: tuple

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.tiers:
            raise DomainError("at least one tier is required")

    # -- derived per-tier quantities ------------------------------------

    def lambda_bar(self, i):
        """Effective intensity seen by a tier-i user: sum_j (tau_i/tau_j)^2 lambda_j."""
        ti = self.tiers[i].tau
        return sum((ti / t.tau) ** 2 * t.lam for t in self.tiers)

    def r_ccu(self, i):
        """Largest serving distance at which power control still reaches rho."""
        return (self.glob.p_u_max / self.tiers[i].rho) ** (1.0 / self.glob.eta_dd)

    def band_plan(self, i) -> BandPlan:
        g = self.glob
        return make_band_plan(self.tiers[i].alpha, g.b_u_hd, g.b_d_hd, g.epsilon)

    def bandwidth(self, i, direction: Direction) -> float:
        return self.band_plan(i).bandwidth(direction)

    def factors(self, i, k, direction: Direction) -> OverlapFactors:
        """Overlap factors for a tier-i receiver hit by tier-k transmitters."""
        return self._factor_table[(direction, i, k)]

    @cached_property
    def _factor_table(self):
        table = {}
        for d in Direction:
            for i, rx in enumerate(self.tiers):
                for k, tx in enumerate(self.tiers):
                    plans = (self.band_plan(i), self.band_plan(k))
                    table[(d, i, k)] = overlap_factors(rx, tx, d, plans, i, k)
        return table

    # -- helpers for sweeps -----------------------------------------------

    def with_global(self, **changes) -> "Network":
        return Network(replace(self.glob, **changes), self.tiers)

    def with_tiers(self, **changes) -> "Network":
        return Network(self.glob, tuple(replace(t, **changes) for t in self.tiers))

    def with_factors(self, table) -> "Network":
        """Copy of this network with overlap factors overridden by ``table``.

        ``table`` maps ``(direction, rx, tx)`` to :class:`OverlapFactors`;
        missing keys keep their computed values.
        """
        net = Network(self.glob, self.tiers)
        merged = dict(self._factor_table)
        merged.update(table)
        net.__dict__["_factor_table"] = merged
        return net


@dataclass(frozen=True)
class PerformancePoint:
    tier: int
    direction: Direction
    user_class: UserClass
    topology: Topology
    theta: float
    bandwidth: float
    outage: float
    method: Method
    ci_halfwidth: float = float("nan")

    @property
    def rate(self):
        return self.bandwidth * math.log2(1.0 + self.theta) * (1.0 - self.outage)
