"""Dependence-uncertainty bounds on the distribution of a sum of gains.

For ``n`` gains sharing one marginal with monotone density, the smallest
possible ``P(X_1 + ... + X_n < s)`` over all couplings is ``phi^{-1}(s)``,
where ``phi`` is built from the tail/middle split parameter ``c_n(a)`` and the
function ``H_a``. The heterogeneous relaxation replaces ``phi`` by ``Phi``,
the sum of upper conditional tail means. The ``_minus`` variants are the same
objects evaluated for the negated gains and drive the worst case.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DivergenceError, DomainError, UnsupportedDistributionError
from .marginals import (
    ExponentialMarginal,
    Marginal,
    Monotonicity,
    NegatedMarginal,
    cond_expect_above,
    cond_expect_below,
    integrated_quantile,
)

#: Below this the split parameter is reported as the zero branch.
C_ZERO_TOL = 1e-10
#: The zero-branch test evaluates the defining inequality here instead of at 0.
C_PROBE = 1e-12

_GAP_TOL = numerics.Tolerance(abs_tol=1e-13, rel_tol=1e-12, max_iterations=400)


class CBranch(str, enum.Enum):
    ZERO = "zero"
    POSITIVE = "positive"


class PhiBranch(str, enum.Enum):
    H_AT_CMIN = "H-at-cmin"
    H_AT_ZERO = "H-at-zero"
    CONDITIONAL_EXPECTATION = "conditional-expectation"


@dataclass(frozen=True)
class CminSolution:
    c: float
    branch: CBranch
    #: signed gap of the defining inequality at ``c`` (>= 0 means satisfied)
    residual: float


@dataclass(frozen=True)
class PhiValue:
    value: float
    c_used: CminSolution
    formula_branch: PhiBranch

    def __float__(self):
        return self.value


# --------------------------------------------------------------------------- #
# helpers
# --------------------------------------------------------------------------- #

def _single(m) -> Marginal:
    """Reduce a homogeneous list to its marginal; refuse mixed lists."""
    if isinstance(m, Marginal):
        return m
    ms = list(m)
    if not ms:
        raise DomainError("empty marginal list")
    if any(other != ms[0] for other in ms[1:]):
        raise DomainError("phi needs identical marginals; use big_phi for heterogeneous links")
    return ms[0]


def _as_list(ms) -> list[Marginal]:
    out = [ms] if isinstance(ms, Marginal) else list(ms)
    if not out:
        raise DomainError("empty marginal list")
    return out


def _check_n(n) -> int:
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def _check_monotone(m: Marginal):
    if getattr(m, "monotonicity", None) not in (Monotonicity.DECREASING, Monotonicity.INCREASING):
        raise UnsupportedDistributionError(f"{m!r} has no monotone-density tag")


def _exp_rate(m: Marginal) -> float | None:
    """Rate of an exponential marginal or of a negated exponential, else None."""
    if isinstance(m, ExponentialMarginal):
        return m.rate
    if isinstance(m, NegatedMarginal) and isinstance(m.base, ExponentialMarginal):
        return m.base.rate
    return None


def _h(m: Marginal, n: int, a: float, x):
    x = np.asarray(x, dtype=float)
    G = m.quantile
    if m.monotonicity is Monotonicity.DECREASING:
        return (n - 1) * np.asarray(G(a + (n - 1) * x)) + np.asarray(G(1.0 - x))
    return np.asarray(G(a + x)) + (n - 1) * np.asarray(G(1.0 - (n - 1) * x))


def h_a(m: Marginal, n: int, a: float, x):
    """``H_a(x)`` for the branch selected by the marginal's monotonicity.

    Decreasing density: ``(n-1) G(a + (n-1)x) + G(1-x)``.
    Increasing density: ``G(a + x) + (n-1) G(1 - (n-1)x)``; for a negated
    marginal this equals ``-(G(1-a-x) + (n-1) G((n-1)x))`` in terms of the
    original quantile function.
    """
    m = _single(m)
    n = _check_n(n)
    _check_monotone(m)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    b = (1.0 - a) / n
    xa = np.asarray(x, dtype=float)
    slack = 1e-14 * max(1.0, b)
    if np.any(xa < -slack) or np.any(xa > b + slack):
        raise DomainError(f"x must lie in [0, {b}], got {x}")
    xa = np.clip(xa, 0.0, b)
    out = _h(m, n, a, xa)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- #
# c_n(a)
# --------------------------------------------------------------------------- #

def _gap_closed_form(rate: float, increasing: bool, n: int, a: float, c: float) -> float:
    # Exponential specialisations of the defining inequality, divided through so
    # they equal the quadrature gap exactly.
    if not increasing:
        u = 1.0 - a - (n - 1) * c
        return (n * (u - c) - (1.0 - a) * math.log(u / c)) / (n * rate)
    p = a + c
    q = 1.0 - (n - 1) * c
    return ((1.0 + (n - 1) * a) / n * math.log(p / q) + (q - p)) / rate


def _gap_quadrature(m: Marginal, n: int, a: float, c: float) -> float:
    b = (1.0 - a) / n
    hc = float(_h(m, n, a, c))
    integral = numerics.integrate(lambda t: _h(m, n, a, t), c, b, _GAP_TOL)
    diff = integral - (b - c) * hc
    return diff if m.monotonicity is Monotonicity.DECREASING else -diff


def _gap_integrated_quantile(m: Marginal, n: int, a: float, c: float) -> float:
    # int_c^b H_a collapses to one integrated-quantile term on either branch
    b = (1.0 - a) / n
    hc = float(_h(m, n, a, c))
    if m.monotonicity is Monotonicity.DECREASING:
        p, q = a + (n - 1) * c, 1.0 - c
    else:
        p, q = a + c, 1.0 - (n - 1) * c
    diff = integrated_quantile(m, p, max(p, q)) - (b - c) * hc
    return diff if m.monotonicity is Monotonicity.DECREASING else -diff


def _gap_fn(m: Marginal, n: int, a: float, method: str):
    rate = _exp_rate(m)
    if method == "auto":
        method = "closed-form" if rate is not None else "integrated-quantile"
    if method == "integrated-quantile":
        return lambda c: _gap_integrated_quantile(m, n, a, c)
    if method == "closed-form":
        if rate is None:
            raise DomainError("closed-form c_min is only available for exponential marginals")
        inc = m.monotonicity is Monotonicity.INCREASING
        return lambda c: _gap_closed_form(rate, inc, n, a, c)
    if method == "quadrature":
        return lambda c: _gap_quadrature(m, n, a, c)
    raise DomainError(f"unknown method {method!r}")


def c_min(m: Marginal, n: int, a: float, method: str = "auto") -> CminSolution:
    """Smallest ``c`` in ``[0, (1-a)/n]`` satisfying the defining integral inequality.

    With ``b = (1-a)/n`` the gap is ``int_c^b H_a - (b-c) H_a(c)`` for decreasing
    densities and its negative for increasing ones; the inequality holds where
    the gap is non-negative, and it always vanishes at ``c = b``. The gap is
    probed at ``c = 1e-12`` (zero branch if satisfied), then scanned upward on a
    mixed geometric/linear grid for its first positive value, which is refined
    by bisection. If it never turns positive the answer is ``b`` itself.

    ``method`` selects the exponential closed form (``"closed-form"``), the
    integrated-quantile identity ``int_c^b H_a = Psi(a+(n-1)c, 1-c)`` (or
    ``Psi(a+c, 1-(n-1)c)`` for increasing densities, ``"integrated-quantile"``),
    direct numerical integration of ``H_a`` (``"quadrature"``), or picks
    automatically (closed form for exponentials, the identity otherwise).
    """
    m = _single(m)
    n = _check_n(n)
    _check_monotone(m)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    b = (1.0 - a) / n
    if b <= C_PROBE:
        return CminSolution(0.0, CBranch.ZERO, 0.0)

    gap = _gap_fn(m, n, a, method)
    with np.errstate(all="ignore"):
        h_probe = float(_h(m, n, a, C_PROBE))
    scale = b * abs(h_probe) if math.isfinite(h_probe) and h_probe != 0 else b
    tol = 1e-12 * scale

    g0 = gap(C_PROBE)
    if g0 >= -tol:
        return CminSolution(0.0, CBranch.ZERO, g0)

    grid = np.unique(np.concatenate([
        np.geomspace(C_PROBE, b, 160),
        np.linspace(0.0, b, 81)[1:],
    ]))
    grid = grid[(grid > C_PROBE) & (grid < b * (1.0 - 1e-6))]
    prev = C_PROBE
    for c in grid:
        gc = gap(float(c))
        if gc > tol:
            bisect_tol = numerics.Tolerance(abs_tol=min(C_ZERO_TOL, 1e-9 * c), max_iterations=200)
            try:
                root = numerics.find_root(gap, prev, float(c), bisect_tol)
            except numerics.BracketError:
                root = prev
            # report the satisfied side of the bracket
            root_gap = gap(root)
            if root_gap < -tol:
                root = min(float(c), root + bisect_tol.abs_tol)
                root_gap = gap(root)
            branch = CBranch.ZERO if root <= C_ZERO_TOL else CBranch.POSITIVE
            return CminSolution(root, branch, root_gap)
        prev = float(c)
    return CminSolution(b, CBranch.POSITIVE, 0.0)


def zero_branch_threshold(m: Marginal, n: int, method: str = "auto", abs_tol: float = 1e-10) -> float:
    """Smallest ``a`` with ``c_n(a) = 0``, by bisection on the branch indicator.

    Assumes the zero branch, once reached, persists for all larger ``a``.
    Pass ``m.negate()`` to get the threshold of ``c^-_n``.
    """
    def is_zero(a: float) -> bool:
        return c_min(m, n, a, method).branch is CBranch.ZERO

    if is_zero(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > abs_tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if is_zero(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------- #
# phi, phi_-, Phi, Phi_-
# --------------------------------------------------------------------------- #

def phi(m: Marginal, n: int, a: float, method: str = "auto") -> PhiValue:
    """The homogeneous extremal-quantile function ``phi(a)``, ``a`` in [0, 1).

    ``phi^{-1}(s)`` is the smallest ``P(sum < s)`` any coupling can achieve.
    """
    m = _single(m)
    n = _check_n(n)
    if not 0.0 <= a < 1.0:
        raise DomainError(f"a must lie in [0, 1), got {a}")
    sol = c_min(m, n, a, method)
    if sol.branch is CBranch.ZERO:
        return PhiValue(n * cond_expect_above(m, a), sol, PhiBranch.CONDITIONAL_EXPECTATION)
    if m.monotonicity is Monotonicity.DECREASING:
        return PhiValue(float(_h(m, n, a, sol.c)), sol, PhiBranch.H_AT_CMIN)
    return PhiValue(float(_h(m, n, a, 0.0)), sol, PhiBranch.H_AT_ZERO)


def phi_minus(m: Marginal, n: int, a: float, method: str = "auto") -> PhiValue:
    """``phi`` evaluated for the negated gain ``-X``; always <= 0.

    Equals ``-(G(1-a) + (n-1) G(0))`` when ``c^-_n(a) > 0`` and
    ``-n E[X | X < G(1-a)]`` otherwise. Requires a decreasing density with
    ``G(0) = 0``.
    """
    m = _single(m)
    n = _check_n(n)
    if m.monotonicity is not Monotonicity.DECREASING:
        raise UnsupportedDistributionError("phi_minus needs a decreasing-density marginal")
    if float(m.quantile(0.0)) != 0.0:
        raise UnsupportedDistributionError("phi_minus assumes G(0) = 0 (support starting at 0)")
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in (0, 1], got {a}")
    if a == 1.0:
        return PhiValue(0.0, CminSolution(0.0, CBranch.ZERO, 0.0), PhiBranch.CONDITIONAL_EXPECTATION)
    if a == 0.0 and math.isinf(m.support[1]):
        raise DivergenceError("phi_minus(0) needs G(1), which is infinite for unbounded support")

    neg = m.negate()
    sol = c_min(neg, n, a, method)
    if sol.branch is CBranch.ZERO:
        value = -n * cond_expect_below(m, 1.0 - a)
        return PhiValue(value, sol, PhiBranch.CONDITIONAL_EXPECTATION)
    value = -(float(m.quantile(1.0 - a)) + (n - 1) * float(m.quantile(0.0)))
    return PhiValue(value, sol, PhiBranch.H_AT_ZERO)


def big_phi(ms: Sequence[Marginal] | Marginal, a: float) -> float:
    """``Phi(a) = sum_i E[X_i | X_i >= G_i(a)]``."""
    ms = _as_list(ms)
    if not 0.0 <= a < 1.0:
        raise DomainError(f"a must lie in [0, 1), got {a}")
    for m in ms:
        _check_monotone(m)
    return math.fsum(cond_expect_above(m, a) for m in ms)


def big_phi_minus(ms: Sequence[Marginal] | Marginal, a: float) -> float:
    """``Phi`` for the negated gains: ``-sum_i E[X_i | X_i < G_i(1-a)]`` for ``a`` in (0, 1]."""
    ms = _as_list(ms)
    if not 0.0 < a <= 1.0:
        raise DomainError(f"a must lie in (0, 1], got {a}")
    for m in ms:
        _check_monotone(m)
    if a == 1.0:
        # limit of the lower-tail mean as the tail mass vanishes
        return -math.fsum(float(m.quantile(0.0)) for m in ms)
    return -math.fsum(cond_expect_below(m, 1.0 - a) for m in ms)


def worst_case_tail(m: Marginal, n: int, s: float) -> float:
    """``m(s) = inf over couplings of P(sum < s)``, obtained as ``phi^{-1}(s)``.

    Zero for ``s <= phi(0)``; one once ``s`` reaches the supremum of ``phi``
    (bounded supports only).
    """
    m = _single(m)
    n = _check_n(n)
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    phi0 = phi(m, n, 0.0).value
    if s <= phi0:
        return 0.0

    def f(a):
        return phi(m, n, a).value - s

    lo = 0.0
    for k in range(1, 16):
        hi = 1.0 - 10.0 ** (-k)
        if f(hi) > 0:
            break
        lo = hi
    else:
        return 1.0
    return numerics.find_root(f, lo, hi, numerics.Tolerance(abs_tol=1e-13, max_iterations=200))
