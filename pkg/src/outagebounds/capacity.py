"""epsilon-outage and zero-outage capacities without transmitter CSI.

A rate ``R`` is in outage when ``sum |h_i|^2 < (2^R - 1) / rho``; the
epsilon-outage capacity is therefore ``log2(1 + rho * s*)`` where ``s*`` is the
epsilon-quantile of the gain sum. Best and worst cases take the extremal
quantile over all couplings with the given marginals.

Rates are in bits per channel use; ``rho`` is linear SNR.

A single :class:`Marginal` means ``cfg.n`` identical links (tight bounds); a
sequence of marginals means heterogeneous links and always routes through the
looser ``Phi`` bounds.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional, Union

from . import depbounds, numerics
from .errors import DomainError
from .marginals import ExponentialMarginal, Marginal

Marginals = Union[Marginal, Sequence[Marginal]]


@dataclass(frozen=True)
class SystemConfig:
    n: int
    rho: float
    epsilon: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not self.rho > 0 or not math.isfinite(self.rho):
            raise DomainError(f"rho must be positive and finite, got {self.rho}")
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in [0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class BoundReport:
    worst: float
    best: float
    iid: Optional[float]
    comonotonic: float
    phi_best: float
    phi_worst: float


def rate_from_gain(rho: float, gain: float) -> float:
    """``log2(1 + rho * gain)``; the gain-sum threshold to bits."""
    return math.log2(1.0 + rho * gain)


def _links(marginals: Marginals, n: int) -> tuple[bool, list[Marginal]]:
    if isinstance(marginals, Marginal):
        return True, [marginals] * n
    ms = list(marginals)
    if len(ms) != n:
        raise DomainError(f"got {len(ms)} marginals for n={n} links")
    return False, ms


def best_gain(marginals: Marginals, cfg: SystemConfig) -> float:
    """Largest achievable epsilon-quantile of the gain sum (``phi`` or ``Phi``)."""
    homogeneous, ms = _links(marginals, cfg.n)
    if not homogeneous:
        return depbounds.big_phi(ms, cfg.epsilon)
    if cfg.n == 1:
        return float(ms[0].quantile(cfg.epsilon))
    return depbounds.phi(ms[0], cfg.n, cfg.epsilon).value


def worst_gain(marginals: Marginals, cfg: SystemConfig) -> float:
    """Smallest achievable epsilon-quantile of the gain sum (``-phi_-(1-eps)`` or ``-Phi_-``)."""
    homogeneous, ms = _links(marginals, cfg.n)
    a = 1.0 - cfg.epsilon
    if not homogeneous:
        return -depbounds.big_phi_minus(ms, a)
    if cfg.n == 1:
        return float(ms[0].quantile(cfg.epsilon))
    return -depbounds.phi_minus(ms[0], cfg.n, a).value


def eps_capacity_best(marginals: Marginals, cfg: SystemConfig) -> float:
    return rate_from_gain(cfg.rho, best_gain(marginals, cfg))


def eps_capacity_worst(marginals: Marginals, cfg: SystemConfig) -> float:
    """Worst-case epsilon-capacity; exactly 0 at ``epsilon = 0`` when ``G(0) = 0``."""
    return rate_from_gain(cfg.rho, worst_gain(marginals, cfg))


def eps_capacity_iid_exponential(cfg: SystemConfig, lam: float = 1.0) -> float:
    """iid ``Exp(lam)`` links: the gain sum is Gamma(n, 1/lam)."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if cfg.epsilon == 0.0:
        return 0.0
    return rate_from_gain(cfg.rho, numerics.inv_reg_lower_gamma(cfg.n, cfg.epsilon) / lam)


def eps_capacity_comonotonic(marginals: Marginals, cfg: SystemConfig) -> float:
    """All gains driven by one uniform: the sum's epsilon-quantile is ``sum_i G_i(eps)``."""
    _, ms = _links(marginals, cfg.n)
    return rate_from_gain(cfg.rho, math.fsum(float(m.quantile(cfg.epsilon)) for m in ms))


def zero_outage_best(marginals: Marginals, rho: float, n: int) -> float:
    """Best-case rate achievable in every channel state (epsilon = 0)."""
    return eps_capacity_best(marginals, SystemConfig(n, rho, 0.0))


def zero_outage_worst(marginals: Marginals, rho: float, n: int) -> float:
    return eps_capacity_worst(marginals, SystemConfig(n, rho, 0.0))


def common_exponential_rate(marginals: Marginals) -> Optional[float]:
    """The shared rate when every link is ``Exp(lam)`` with one ``lam``, else None."""
    ms = [marginals] if isinstance(marginals, Marginal) else list(marginals)
    if not ms or not all(isinstance(m, ExponentialMarginal) for m in ms):
        return None
    rates = {m.rate for m in ms}
    return rates.pop() if len(rates) == 1 else None


def bound_report(marginals: Marginals, cfg: SystemConfig) -> BoundReport:
    best = best_gain(marginals, cfg)
    worst = worst_gain(marginals, cfg)
    lam = common_exponential_rate(marginals)
    iid = eps_capacity_iid_exponential(cfg, lam) if lam is not None else None
    return BoundReport(
        worst=rate_from_gain(cfg.rho, worst),
        best=rate_from_gain(cfg.rho, best),
        iid=iid,
        comonotonic=eps_capacity_comonotonic(marginals, cfg),
        phi_best=best,
        phi_worst=-worst,
    )
