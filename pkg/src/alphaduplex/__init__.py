"""Alpha-duplex multi-tier cellular networks: analytic outage/rate and Monte Carlo validation."""

from .model import (
    Direction,
    GlobalParams,
    Method,
    Network,
    PerformancePoint,
    SIKind,
    SIModel,
    TierParams,
    Topology,
    UserClass,
)
from .spectral import PulseKind

__version__ = "0.1.0"

__all__ = [
    "Direction",
    "GlobalParams",
    "Method",
    "Network",
    "PerformancePoint",
    "PulseKind",
    "SIKind",
    "SIModel",
    "TierParams",
    "Topology",
    "UserClass",
]
