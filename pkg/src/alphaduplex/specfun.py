"""Special functions and adaptive quadrature.

Everything here works in double precision and accepts numpy arrays where it
makes sense, because the analytical expressions call these inside integrands
that are evaluated on whole vectors of quadrature nodes at once.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ComputationError, DomainError, QuadratureError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "hyp2f1",
    "lower_incomplete_gamma",
    "erf",
    "erfc",
    "integrate",
    "gauss_legendre",
]

_EPS = np.finfo(float).eps
_MAX_TERMS = 20000


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 40

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if self.max_depth < 1:
            raise DomainError("max_depth must be at least 1")


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------------------
# Gauss hypergeometric function on the negative real axis
# ---------------------------------------------------------------------------


def _series(a, b, c, x, max_terms=_MAX_TERMS):
    """Plain power series of 2F1 for |x| < 1, vectorised over x."""
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    term = np.ones_like(x)
    for n in range(max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * x
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            return total
    raise ComputationError(f"2F1 series did not converge after {max_terms} terms")


def _reflected(b, y):
    """2F1(1, b; b+1; -y) for y > 1 through the 1/x expansion, 0 < b < 1.

    From b * int_0^1 t^(b-1) / (1 + t y) dt, written as the full Mellin
    integral minus the tail over [1, inf), whose expansion is geometric in 1/y.
    """
    y = np.asarray(y, dtype=float)
    lead = b * math.pi / math.sin(math.pi * b) * y ** (-b)
    inv = 1.0 / y
    total = np.zeros_like(y)
    power = inv.copy()
    for n in range(_MAX_TERMS):
        term = (-1.0) ** n * power / (n + 1.0 - b)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(lead - b * total)):
            return lead - b * total
        power = power * inv
    raise ComputationError(f"2F1 1/x expansion did not converge after {_MAX_TERMS} terms")


def hyp2f1(a, b, c, x):
    """Gauss hypergeometric function ``2F1(a, b; c; x)`` for real ``x <= 0``.

    Only ``c > b > 0`` is supported. The pattern used throughout the package,
    ``(1, b, b+1)`` with ``0 < b < 1``, gets a fast route: the power series
    near the origin, the Pfaff transformation ``x -> x/(x-1)`` for moderate
    arguments and a 1/x expansion in the far tail. Other parameters fall back
    to series plus Pfaff, which is best effort for very negative ``x``.
    """
    if not (c > b > 0):
        raise DomainError(f"hyp2f1 needs c > b > 0, got a={a}, b={b}, c={c}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa > 0) or np.any(np.isnan(xa)):
        raise DomainError("hyp2f1 is only defined here for x <= 0")
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    out = np.empty_like(xa)

    fast = a == 1 and abs(c - b - 1.0) < 1e-15 and 0 < b < 1
    near = xa >= -0.5
    if fast:
        far = xa < -2.0
        mid = ~near & ~far
        if np.any(far):
            out[far] = _reflected(b, -xa[far])
    else:
        mid = ~near
    if np.any(near):
        out[near] = _series(a, b, c, xa[near])
    if np.any(mid):
        xm = xa[mid]
        z = xm / (xm - 1.0)
        out[mid] = (1.0 - xm) ** (-a) * _series(a, c - b, c, z)
    if not np.all(np.isfinite(out)):
        raise ComputationError("2F1 evaluation produced a non-finite value")
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Incomplete gamma and error functions
# ---------------------------------------------------------------------------


def _lower_gamma_scalar(a, x):
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.gamma(a)
    log_pref = a * math.log(x) - x
    if x < a + 1.0:
        # series: gamma(a, x) = x^a e^-x sum x^n / (a (a+1) ... (a+n))
        term = 1.0 / a
        total = term
        for n in range(1, _MAX_TERMS):
            term *= x / (a + n)
            total += term
            if abs(term) < abs(total) * 1e-17:
                return math.exp(log_pref) * total
        raise ComputationError(f"incomplete gamma series stalled at a={a}, x={x}")
    # modified Lentz continued fraction for the upper function
    tiny = 1e-300
    bn = x + 1.0 - a
    cn = 1.0 / tiny
    dn = 1.0 / bn
    h = dn
    for n in range(1, _MAX_TERMS):
        an = -n * (n - a)
        bn += 2.0
        dn = an * dn + bn
        dn = tiny if abs(dn) < tiny else dn
        cn = bn + an / cn
        cn = tiny if abs(cn) < tiny else cn
        dn = 1.0 / dn
        delta = dn * cn
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return math.gamma(a) - math.exp(log_pref) * h
    raise ComputationError(f"incomplete gamma fraction stalled at a={a}, x={x}")


def lower_incomplete_gamma(a, x):
    """Lower incomplete gamma ``gamma(a, x) = int_0^x t^(a-1) e^-t dt``.

    Not regularised. ``x = inf`` returns ``Gamma(a)``.
    """
    if not a > 0:
        raise DomainError(f"lower_incomplete_gamma needs a > 0, got {a}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("lower_incomplete_gamma needs x >= 0")
    if xa.ndim == 0:
        return _lower_gamma_scalar(float(a), float(xa))
    return np.array([_lower_gamma_scalar(float(a), float(v)) for v in xa.ravel()]).reshape(xa.shape)


_erf_vec = np.vectorize(math.erf, otypes=[float])
_erfc_vec = np.vectorize(math.erfc, otypes=[float])


def erf(x):
    """Error function (the C library implementation behind ``math.erf``)."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return _erf_vec(x)


def erfc(x):
    """Complementary error function, accurate in the far tail."""
    if np.ndim(x) == 0:
        return math.erfc(float(x))
    return _erfc_vec(x)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# 15 nodes ordered -x..0..+x, with matching Kronrod and embedded Gauss weights
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[:3][::-1]
_MAX_INTERVALS = 5000


def _gk15(g, a, b):
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.asarray(g(center + half * _NODES), dtype=float)
    if fx.shape != _NODES.shape:
        fx = np.broadcast_to(fx, _NODES.shape)
    if not np.all(np.isfinite(fx)):
        raise ComputationError(f"non-finite integrand on [{a}, {b}]")
    kron = half * np.dot(_KW, fx)
    gauss = half * np.dot(_GW, fx)
    resabs = abs(half) * np.dot(_KW, np.abs(fx))
    mean = kron / (2.0 * half) if half != 0 else 0.0
    resasc = abs(half) * np.dot(_KW, np.abs(fx - mean))
    err = abs(kron - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(50 * _EPS * resabs, err)
    return kron, err


def _adaptive(g, a, b, spec, breakpoints=()):
    edges = [a, *sorted(p for p in breakpoints if a < p < b), b]
    heap = []
    frozen = []       # (val, err) of intervals that hit max_depth
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _gk15(g, lo, hi)
        heapq.heappush(heap, (-err, lo, hi, 0, val))

    def resum():
        # running updates cancel badly after a huge interval is split, so re-add exactly
        vals = [v for *_, v in heap] + [v for v, _ in frozen]
        errs = [-e for e, *_ in heap] + [e for _, e in frozen]
        return math.fsum(vals), math.fsum(errs)

    def converged(tot, err):
        return err <= max(spec.abs_tol, spec.rel_tol * abs(tot))

    total, total_err = resum()
    while heap:
        if converged(total, total_err):
            total, total_err = resum()
            if converged(total, total_err):
                return total, total_err
        if len(heap) > _MAX_INTERVALS:
            break
        neg_err, lo, hi, depth, val = heapq.heappop(heap)
        if depth >= spec.max_depth:
            frozen.append((val, -neg_err))
            continue
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(g, lo, mid)
        v2, e2 = _gk15(g, mid, hi)
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, depth + 1, v1))
        heapq.heappush(heap, (-e2, mid, hi, depth + 1, v2))
    total, total_err = resum()
    if converged(total, total_err):
        return total, total_err
    raise QuadratureError("adaptive quadrature exhausted its subdivision budget", total, total_err)


def integrate(f, lo, hi, spec: QuadratureSpec = DEFAULT_QUAD, *, scale=1.0, points=(),
              full_output=False):
    """Adaptive Gauss-Kronrod (7/15) integral of ``f`` over ``[lo, hi]``.

    ``f`` must accept a numpy array of abscissae and return an array of the
    same shape. An infinite upper (or lower) limit is mapped onto a finite
    interval with ``x = lo + scale * t / (1 - t)``; ``scale`` should be the
    length scale over which the integrand decays. ``points`` are interior
    break points (e.g. kinks) at which the interval is split up front.

    Raises :class:`QuadratureError` when the tolerance cannot be met.
    """
    if lo == hi:
        return (0.0, 0.0) if full_output else 0.0
    if lo > hi:
        val, err = integrate(f, hi, lo, spec, scale=scale, points=points, full_output=True)
        return (-val, err) if full_output else -val
    if math.isinf(lo) and math.isinf(hi):
        v1, e1 = integrate(f, -math.inf, 0.0, spec, scale=scale, full_output=True)
        v2, e2 = integrate(f, 0.0, math.inf, spec, scale=scale, full_output=True)
        return (v1 + v2, e1 + e2) if full_output else v1 + v2
    if math.isinf(hi):
        def g(t):
            return f(lo + scale * t / (1.0 - t)) * (scale / (1.0 - t) ** 2)
        tpts = [(p - lo) / (scale + p - lo) for p in points if p > lo]
        val, err = _adaptive(g, 0.0, 1.0, spec, tpts)
    elif math.isinf(lo):
        def g(t):
            return f(hi - scale * t / (1.0 - t)) * (scale / (1.0 - t) ** 2)
        tpts = [(hi - p) / (scale + hi - p) for p in points if p < hi]
        val, err = _adaptive(g, 0.0, 1.0, spec, tpts)
    else:
        val, err = _adaptive(f, float(lo), float(hi), spec, points)
    return (val, err) if full_output else val


@lru_cache(maxsize=32)
def _gl_rule(n):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(f, lo, hi, n=64):
    """Fixed ``n``-point Gauss-Legendre rule on ``[lo, hi]``.

    ``f`` receives the node array with a trailing axis of length ``n`` added
    to whatever the caller broadcasts against, so several inner integrals can
    be done in one call; the trailing axis is summed out.
    """
    x, w = _gl_rule(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    return np.sum(f(nodes) * w * half, axis=-1)
