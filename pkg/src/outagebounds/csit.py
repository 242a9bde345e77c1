"""Zero-outage capacity with perfect transmitter CSI and a long-term power constraint.

Channel inversion gives ``R0 = log2(1 + rho / E[1 / S])`` with ``S`` the gain
sum, so the best coupling minimises ``E[1/S]`` and the worst maximises it.
The maximiser is the comonotonic coupling; the minimiser is the extremal
coupling behind ``phi``, whose value comes from :func:`min_expected_convex`.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import depbounds, numerics
from .capacity import common_exponential_rate, zero_outage_best
from .errors import DomainError, UnsupportedDistributionError
from .marginals import Marginal, Monotonicity

Marginals = Union[Marginal, Sequence[Marginal]]

_QUAD_TOL = numerics.Tolerance(abs_tol=1e-12, rel_tol=1e-10, max_iterations=500)


@dataclass(frozen=True)
class CsitReport:
    best: float
    worst: float
    iid: Optional[float]
    #: min over couplings of E[1/S]; ``math.inf`` when it diverges
    min_inverse_sum_expectation: float


def _decreasing(m: Marginal) -> Marginal:
    if m.monotonicity is not Monotonicity.DECREASING:
        raise UnsupportedDistributionError("CSIT bounds assume a decreasing density")
    return m


def _rate(rho: float, inv_sum_mean: float) -> float:
    if math.isinf(inv_sum_mean):
        return 0.0
    return math.log2(1.0 + rho / inv_sum_mean)


def min_expected_convex(m: Marginal, n: int, g: Callable) -> float:
    """Minimum of ``E[g(X_1 + ... + X_n)]`` over all couplings of a decreasing-density marginal.

    With ``c = c_n(0)`` and ``H = H_0`` the minimum is
    ``n * int_0^c g(H(t)) dt + (1 - n c) g(H(c))``; on the zero branch the whole
    mass sits on the complete mix and the value is ``g(n E[X])``.
    ``g`` must accept numpy arrays.
    """
    m = _decreasing(depbounds._single(m))
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if n == 1:
        return numerics.integrate(lambda u: g(np.asarray(m.quantile(u))), 0.0, 1.0, _QUAD_TOL)
    sol = depbounds.c_min(m, n, 0.0)
    if sol.branch is depbounds.CBranch.ZERO:
        return float(g(n * m.mean))
    c = sol.c
    h_c = depbounds.h_a(m, n, 0.0, c)
    tail = numerics.integrate(lambda t: g(depbounds._h(m, n, 0.0, t)), 0.0, c, _QUAD_TOL)
    return n * tail + max(0.0, 1.0 - n * c) * float(g(h_c))


def _inverse(x):
    return 1.0 / np.asarray(x, dtype=float)


def min_inverse_sum_expectation(m: Marginal, n: int) -> float:
    m = _decreasing(depbounds._single(m))
    if n == 1 and m.divergent_inverse_moment_at_zero:
        return math.inf
    return float(min_expected_convex(m, n, _inverse))


def zero_outage_csit_best(m: Marginal, n: int, rho: float) -> float:
    """Best-case CSIT zero-outage rate (bits per channel use)."""
    return _rate(rho, min_inverse_sum_expectation(m, n))


def max_inverse_sum_expectation(marginals: Marginals, n: int) -> float:
    """``E[1/S]`` under the comonotonic coupling: ``int_0^1 du / sum_i G_i(u)``."""
    ms = [marginals] * n if isinstance(marginals, Marginal) else list(marginals)
    if len(ms) != n:
        raise DomainError(f"got {len(ms)} marginals for n={n} links")
    for m in ms:
        _decreasing(m)
    # 1/sum G_i <= 1/G_j, so one convergent link is enough
    if all(m.divergent_inverse_moment_at_zero for m in ms):
        return math.inf

    def integrand(u):
        return 1.0 / sum(np.asarray(m.quantile(u), dtype=float) for m in ms)

    with np.errstate(divide="ignore"):
        return numerics.integrate(integrand, 0.0, 1.0, _QUAD_TOL)


def zero_outage_csit_worst(marginals: Marginals, n: int, rho: float) -> float:
    """Worst-case (comonotonic) CSIT zero-outage rate; 0 when ``E[1/S]`` diverges."""
    return _rate(rho, max_inverse_sum_expectation(marginals, n))


def zero_outage_csit_iid_exponential(n: int, rho: float, lam: float = 1.0) -> float:
    """iid ``Exp(lam)`` links: ``E[1/S] = lam / (n-1)`` (inverse gamma mean)."""
    if int(n) != n or n < 2:
        raise DomainError("E[1/S] is infinite for a single exponential link; need n >= 2")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    return math.log2(1.0 + rho * (n - 1) / lam)


def csit_report(m: Marginal, n: int, rho: float) -> CsitReport:
    lam = common_exponential_rate(m)
    iid = zero_outage_csit_iid_exponential(n, rho, lam) if lam is not None and n >= 2 else None
    e_min = min_inverse_sum_expectation(m, n)
    return CsitReport(
        best=_rate(rho, e_min),
        worst=zero_outage_csit_worst(m, n, rho),
        iid=iid,
        min_inverse_sum_expectation=e_min,
    )


def no_csit_gap(m: Marginal, n: int, rho: float) -> float:
    """Best-case zero-outage gain from CSIT: ``R0_CSIT_best - R0_best``."""
    return zero_outage_csit_best(m, n, rho) - zero_outage_best(m, rho, n)
