"""Band layout of the alpha-duplex scheme and pulse-overlap energy factors.

Frequencies are in Hz and measured from the centre of the half-duplex guard
band, so in half duplex the uplink band sits below zero and the downlink band
above it. Each band grows toward the other by ``alpha * (eps + 1) * B`` with
``B = min(B_u^HD, B_d^HD)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .specfun import QuadratureSpec, integrate

__all__ = [
    "PulseKind",
    "Direction",
    "BandPlan",
    "OverlapFactors",
    "make_band_plan",
    "pulse_spectrum",
    "in_band_energy",
    "intra_mode_factor",
    "cross_mode_factor",
    "overlap_factors",
]

FACTOR_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)


class PulseKind(enum.Enum):
    SINC = "sinc"
    SINC_SQUARED = "sinc2"


class Direction(enum.Enum):
    UL = "ul"
    DL = "dl"

    @property
    def other(self):
        return Direction.DL if self is Direction.UL else Direction.UL


@dataclass(frozen=True)
class BandPlan:
    alpha: float
    b_u_hd: float
    b_d_hd: float
    epsilon: float
    b_u_alpha: float
    b_d_alpha: float
    f_u: float
    f_d: float

    @property
    def delta_f(self):
        """Uplink minus downlink centre frequency (<= 0 for this layout)."""
        return self.f_u - self.f_d

    def bandwidth(self, direction: Direction) -> float:
        return self.b_u_alpha if direction is Direction.UL else self.b_d_alpha

    def center(self, direction: Direction) -> float:
        return self.f_u if direction is Direction.UL else self.f_d


@dataclass(frozen=True)
class OverlapFactors:
    """Normalised received-energy factors for one (receiver, interferer) pair."""

    intra: float
    cross: float
    direction: Direction
    rx_tier: int
    tx_tier: int


def make_band_plan(alpha, b_u_hd, b_d_hd, epsilon) -> BandPlan:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if not (b_u_hd > 0 and b_d_hd > 0):
        raise DomainError("half-duplex bandwidths must be positive")
    if epsilon < 0:
        raise DomainError("guard-band fraction epsilon must be >= 0")
    b = min(b_u_hd, b_d_hd)
    growth = alpha * (epsilon + 1.0) * b
    f_u = -epsilon * b / 2 - b_u_hd / 2 + growth / 2
    f_d = epsilon * b / 2 + b_d_hd / 2 - growth / 2
    return BandPlan(alpha, b_u_hd, b_d_hd, epsilon, b_u_hd + growth, b_d_hd + growth, f_u, f_d)


def pulse_spectrum(kind: PulseKind, bw, f):
    """Unit-energy spectrum of a Sinc or Sinc^2 pulse with null-to-null width ``bw``.

    ``int Sinc^2(2f/bw) df = bw/2`` and ``int Sinc^4(2f/bw) df = bw/3``.
    """
    if not bw > 0:
        raise DomainError("pulse bandwidth must be positive")
    x = np.sinc(2.0 * np.asarray(f, dtype=float) / bw)
    if kind is PulseKind.SINC:
        return x / math.sqrt(bw / 2.0)
    return x * x / math.sqrt(bw / 3.0)


@lru_cache(maxsize=4096)
def _window_product(rx_kind, rx_bw, tx_kind, tx_bw, shift):
    # receiver low-pass window is [-rx_bw/2, rx_bw/2]; spectra are real so S* = S
    def integrand(f):
        return pulse_spectrum(rx_kind, rx_bw, f) * pulse_spectrum(tx_kind, tx_bw, f - shift)

    # split at the interferer's main-lobe nulls when they fall inside the window
    pts = [p for p in (shift - tx_bw / 2, shift, shift + tx_bw / 2) if -rx_bw / 2 < p < rx_bw / 2]
    return integrate(integrand, -rx_bw / 2, rx_bw / 2, FACTOR_QUAD, points=pts)


def in_band_energy(kind: PulseKind, bw) -> float:
    """Energy a pulse keeps after its own matched low-pass filter, ``I_v(a, a)``."""
    return _window_product(kind, float(bw), kind, float(bw), 0.0)


def _pulse(tier, direction):
    return tier.pulse_ul if direction is Direction.UL else tier.pulse_dl


def intra_mode_factor(rx, tx, direction: Direction, plans) -> float:
    """``|I~_v(a_i, a_k)|^2``: same-direction interferer through the receiver's filter.

    ``rx``/``tx`` are anything with ``pulse_ul``/``pulse_dl`` attributes
    (normally :class:`~alphaduplex.model.TierParams`); ``plans`` is the
    ``(receiver, interferer)`` pair of band plans.
    """
    prx, ptx = plans
    kind = _pulse(rx, direction)
    bw = prx.bandwidth(direction)
    raw = _window_product(kind, bw, _pulse(tx, direction), ptx.bandwidth(direction),
                          ptx.center(direction) - prx.center(direction))
    return raw ** 2 / in_band_energy(kind, bw) ** 2


def cross_mode_factor(rx, tx, direction: Direction, plans) -> float:
    """``|C~_v(a_i, a_k)|^2``: opposite-direction interferer through the receiver's filter."""
    prx, ptx = plans
    other = direction.other
    kind = _pulse(rx, direction)
    bw = prx.bandwidth(direction)
    raw = _window_product(kind, bw, _pulse(tx, other), ptx.bandwidth(other),
                          ptx.center(other) - prx.center(direction))
    return raw ** 2 / in_band_energy(kind, bw) ** 2


def raw_cross_energy(rx, tx, direction: Direction, plans) -> float:
    """Un-normalised ``|C_v|^2``; bounded by 1 through Cauchy-Schwarz."""
    prx, ptx = plans
    other = direction.other
    return _window_product(_pulse(rx, direction), prx.bandwidth(direction), _pulse(tx, other),
                           ptx.bandwidth(other), ptx.center(other) - prx.center(direction)) ** 2


def overlap_factors(rx, tx, direction: Direction, plans, rx_tier=0, tx_tier=0) -> OverlapFactors:
    return OverlapFactors(
        intra=intra_mode_factor(rx, tx, direction, plans),
        cross=cross_mode_factor(rx, tx, direction, plans),
        direction=direction,
        rx_tier=rx_tier,
        tx_tier=tx_tier,
    )
