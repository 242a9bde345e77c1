"""Scalar numerics: bisection, adaptive quadrature, integer-shape incomplete gamma.

Everything here works in natural logarithms; conversion to bits happens in
the rate modules.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, ConvergenceError, DomainError


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_iterations: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")


DEFAULT_TOL = Tolerance()


# --------------------------------------------------------------------------- #
# Root finding
# --------------------------------------------------------------------------- #

def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = DEFAULT_TOL) -> float:
    """Bisection on a sign-changing bracket.

    Stops when ``f`` hits exactly zero, when the bracket is narrower than
    ``tol.abs_tol``, or when the midpoint can no longer be represented between
    the bracket ends. The bracket kept at every step contains a sign change.

    Raises:
        BracketError: ``f(lo)`` and ``f(hi)`` share a strict sign.
        ConvergenceError: ``tol.max_iterations`` bisections were not enough.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.isnan(flo) or math.isnan(fhi):
        raise DomainError(f"f is NaN at a bracket end: f({lo})={flo}, f({hi})={fhi}")
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")

    for _ in range(tol.max_iterations):
        if hi - lo <= tol.abs_tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    if hi - lo <= tol.abs_tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection did not reach width {tol.abs_tol} in {tol.max_iterations} steps "
        f"(bracket [{lo}, {hi}])")


# --------------------------------------------------------------------------- #
# Quadrature
# --------------------------------------------------------------------------- #

# Gauss-Kronrod 7/15 nodes on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


def _evaluate(f, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            raise ValueError
    except (TypeError, ValueError):
        y = np.array([float(f(float(t))) for t in x])
    return y


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _XK
    y = _evaluate(f, x)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise DomainError(f"integrand is not finite at interior point {bad!r}")
    kronrod = half * float(_WK @ y)
    gauss = half * float(_WG @ y)
    return kronrod, abs(kronrod - gauss)


def integrate(f: Callable, lo: float, hi: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over [lo, hi].

    The integrand is never evaluated at ``lo`` or ``hi``, so integrable
    endpoint singularities (``-log(u)`` at 0, ``G(u)`` at 1) are admissible.
    The sub-interval with the largest error estimate is bisected each step;
    near a singular endpoint this produces a geometrically shrinking margin
    interval whose contribution is taken from its own Kronrod estimate.

    ``f`` is called with a numpy array of nodes; scalar-only callables are
    detected and evaluated pointwise.

    Raises:
        DomainError: non-finite integrand value at an interior node.
        ConvergenceError: tolerance not met after ``tol.max_iterations`` splits.
    """
    lo, hi = float(lo), float(hi)
    if lo == hi:
        return 0.0
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0

    value, err = _gk15(f, lo, hi)
    heap = [(-err, lo, hi, value)]
    settled = []
    total, total_err = value, err
    for _ in range(tol.max_iterations):
        if total_err <= max(tol.abs_tol, tol.rel_tol * abs(total)):
            return sign * total
        neg_err, a, b, v = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            # interval below float resolution; its estimate is final
            total_err += neg_err
            settled.append(v)
            continue
        v1, e1 = _gk15(f, a, mid)
        v2, e2 = _gk15(f, mid, b)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, a, mid, v1))
        heapq.heappush(heap, (-e2, mid, b, v2))
    # recompute from pieces to shed accumulated rounding
    total = math.fsum([item[3] for item in heap] + settled)
    total_err = math.fsum(-item[0] for item in heap)
    if total_err <= max(tol.abs_tol, tol.rel_tol * abs(total)):
        return sign * total
    raise ConvergenceError(
        f"quadrature on [{lo}, {hi}] reached error {total_err:.3g} after "
        f"{tol.max_iterations} subdivisions")


# --------------------------------------------------------------------------- #
# Regularized lower incomplete gamma, integer shape
# --------------------------------------------------------------------------- #

def _check_shape(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"shape must be a positive integer, got {n!r}")
    return int(n)


def reg_lower_gamma(n: int, x: float) -> float:
    """P(n, x) for integer ``n >= 1``.

    Uses ``1 - exp(-x) * sum_{k<n} x^k / k!`` when ``x`` is past the mode and
    the convergent tail series ``exp(-x) sum_{k>=n} x^k / k!`` otherwise, so
    small probabilities keep their relative accuracy.
    """
    n = _check_shape(n)
    x = float(x)
    if x < 0 or math.isnan(x):
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < n + 1:
        log_lead = n * math.log(x) - x - math.lgamma(n + 1)
        term, acc, k = 1.0, 1.0, n
        while term > 1e-17 * acc:
            k += 1
            term *= x / k
            acc += term
        return min(1.0, math.exp(log_lead) * acc)
    term, acc = 1.0, 1.0
    for k in range(1, n):
        term *= x / k
        acc += term
    return max(0.0, 1.0 - math.exp(-x + math.log(acc)))


def inv_reg_lower_gamma(n: int, p: float) -> float:
    """Inverse of :func:`reg_lower_gamma` in its second argument."""
    n = _check_shape(n)
    p = float(p)
    if not 0.0 <= p < 1.0:
        raise DomainError(f"p must lie in [0, 1), got {p}")
    if p == 0.0:
        return 0.0
    if n == 1:
        return -math.log1p(-p)
    hi = float(n)
    while reg_lower_gamma(n, hi) < p:
        hi *= 2.0
    lo = 0.0
    # bisect to float resolution; P is monotone so this is safe
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if reg_lower_gamma(n, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
