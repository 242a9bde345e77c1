"""Univariate channel-gain laws described primarily through their quantile function.

A marginal exposes the CDF ``F``, quantile ``G = F^{-1}``, density ``f``, the
integrated quantile ``Psi(p, q) = int_p^q G(u) du`` and the two conditional
tail means that the dependence bounds consume. Closed forms are used where a
distribution has them; everything else falls back to quadrature of ``G``.
"""

from __future__ import annotations

import enum
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import numerics
from .errors import DomainError

# Ψ and mean are compared at 1e-8, so quadrature of G runs tighter than default.
_QUAD_TOL = numerics.Tolerance(abs_tol=1e-12, rel_tol=1e-12, max_iterations=400)


class Monotonicity(str, enum.Enum):
    DECREASING = "decreasing-density"
    INCREASING = "increasing-density"

    def flipped(self) -> "Monotonicity":
        if self is Monotonicity.DECREASING:
            return Monotonicity.INCREASING
        return Monotonicity.DECREASING


def _scalar_or_array(x):
    arr = np.asarray(x, dtype=float)
    return arr if arr.ndim else float(arr)


class Marginal(ABC):
    """Base class for a channel-gain distribution.

    Subclasses implement :meth:`quantile`, :meth:`cdf` and :meth:`pdf` (all
    numpy-vectorised) and set :attr:`monotonicity` and :attr:`support`.
    Overriding :meth:`_psi` with a closed form is optional.
    """

    monotonicity: Monotonicity
    #: True when the density is strictly positive at gain 0, so that
    #: ``int_0^1 du / G(u)`` diverges.
    divergent_inverse_moment_at_zero: bool = False

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    @abstractmethod
    def quantile(self, u): ...

    @abstractmethod
    def cdf(self, x): ...

    @abstractmethod
    def pdf(self, x): ...

    @property
    def probability_range(self) -> tuple[float, float]:
        """Probabilities at which :meth:`quantile` may be evaluated."""
        return (0.0, 1.0)

    def _psi(self, p: float, q: float) -> float:
        return numerics.integrate(self.quantile, p, q, _QUAD_TOL)

    @property
    def mean(self) -> float:
        return integrated_quantile(self, 0.0, 1.0)

    def negate(self) -> "Marginal":
        return NegatedMarginal(self)


@dataclass(frozen=True)
class ExponentialMarginal(Marginal):
    """Squared Rayleigh amplitude: ``|h|^2 ~ Exp(rate)`` with mean ``1/rate``."""

    rate: float = 1.0
    monotonicity: Monotonicity = field(default=Monotonicity.DECREASING, init=False)
    divergent_inverse_moment_at_zero: bool = field(default=True, init=False)

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"rate must be positive, got {self.rate}")

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return _scalar_or_array(-np.log1p(-u) / self.rate)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0)), 0.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0))

    def _antiderivative(self, u: float) -> float:
        # d/du of -(1-u)(1 - log(1-u)) / rate is G(u)
        v = 1.0 - u
        if v == 0.0:
            return 0.0
        return -v * (1.0 - math.log(v)) / self.rate

    def _psi(self, p, q):
        return self._antiderivative(q) - self._antiderivative(p)

    def cond_expect_above(self, a: float) -> float:
        # lack of memory
        return 1.0 / self.rate + self.quantile(a)

    def cond_expect_below(self, b: float) -> float:
        if b == 1.0:
            return 1.0 / self.rate
        if b < 0.1:
            # b + (1-b) log(1-b) = sum_{k>=2} b^k / (k (k-1)); the direct form cancels badly
            total, term, k = 0.0, 1.0, 2
            while True:
                step = term / (k * (k - 1))
                total += step
                if step < 1e-17 * total:
                    break
                term *= b
                k += 1
            return b * total / self.rate
        return (b + (1.0 - b) * math.log1p(-b)) / (b * self.rate)


@dataclass(frozen=True)
class UniformMarginal(Marginal):
    """Uniform gain on ``[low, high]``; constant density counts as decreasing."""

    low: float = 0.0
    high: float = 1.0
    monotonicity: Monotonicity = field(default=Monotonicity.DECREASING, init=False)

    def __post_init__(self):
        if not (0 <= self.low < self.high and math.isfinite(self.high)):
            raise DomainError(f"need 0 <= low < high < inf, got [{self.low}, {self.high}]")

    @property
    def divergent_inverse_moment_at_zero(self) -> bool:
        return self.low == 0.0

    @property
    def support(self):
        return (self.low, self.high)

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def quantile(self, u):
        return _scalar_or_array(self.low + (self.high - self.low) * np.asarray(u, dtype=float))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.low) & (x <= self.high)
        return _scalar_or_array(np.where(inside, 1.0 / (self.high - self.low), 0.0))

    def _psi(self, p, q):
        return self.low * (q - p) + 0.5 * (self.high - self.low) * (q * q - p * p)


@dataclass(frozen=True)
class ShiftedMarginal(Marginal):
    """``offset + X`` for a base gain ``X``; keeps the base's density shape."""

    base: Marginal
    offset: float

    def __post_init__(self):
        if self.offset < 0:
            raise DomainError("offset must be non-negative for a channel gain")

    @property
    def monotonicity(self):
        return self.base.monotonicity

    @property
    def divergent_inverse_moment_at_zero(self) -> bool:
        return self.offset == 0.0 and self.base.divergent_inverse_moment_at_zero

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo + self.offset, hi + self.offset)

    def quantile(self, u):
        return _scalar_or_array(self.offset + np.asarray(self.base.quantile(u)))

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) - self.offset)

    def pdf(self, x):
        return self.base.pdf(np.asarray(x, dtype=float) - self.offset)

    def _psi(self, p, q):
        return self.offset * (q - p) + integrated_quantile(self.base, p, q)


class QuantileTableMarginal(Marginal):
    """Piecewise-linear quantile function through user-supplied (probability, gain) points.

    Evaluation outside the tabulated probability range raises rather than
    extrapolating. The monotonicity tag is the user's claim; it is compared
    with the slopes of the table at construction and a warning is issued on
    mismatch (a decreasing density means a convex quantile function).
    """

    def __init__(self, probabilities, gains, monotonicity=Monotonicity.DECREASING):
        p = np.asarray(probabilities, dtype=float)
        g = np.asarray(gains, dtype=float)
        if p.ndim != 1 or p.shape != g.shape or p.size < 2:
            raise DomainError("need two equal-length 1-D columns with at least 2 rows")
        if p[0] < 0 or p[-1] > 1:
            raise DomainError("probabilities must lie in [0, 1]")
        if np.any(np.diff(p) <= 0) or np.any(np.diff(g) <= 0):
            raise DomainError("both columns must be strictly increasing")
        if not np.all(np.isfinite(g)):
            raise DomainError("gains must be finite")
        self.probabilities = p
        self.gains = g
        self.monotonicity = Monotonicity(monotonicity)
        self._slopes = np.diff(g) / np.diff(p)
        if not self.density_matches_tag():
            warnings.warn(
                f"quantile table slopes do not match the claimed {self.monotonicity.value}; "
                "bounds assume a monotone density", stacklevel=2)

    def __repr__(self):
        return (f"QuantileTableMarginal(rows={self.probabilities.size}, "
                f"support=[{self.gains[0]:g}, {self.gains[-1]:g}], {self.monotonicity.value})")

    def __eq__(self, other):
        return (isinstance(other, QuantileTableMarginal)
                and self.monotonicity == other.monotonicity
                and np.array_equal(self.probabilities, other.probabilities)
                and np.array_equal(self.gains, other.gains))

    def __hash__(self):
        return hash((self.probabilities.tobytes(), self.gains.tobytes(), self.monotonicity))

    @classmethod
    def from_text(cls, text: str, monotonicity=Monotonicity.DECREASING):
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DomainError(f"line {lineno}: expected 'probability gain', got {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise DomainError(f"line {lineno}: {exc}") from None
        if not rows:
            raise DomainError("quantile table is empty")
        p, g = zip(*rows)
        return cls(p, g, monotonicity)

    @classmethod
    def from_file(cls, path, monotonicity=Monotonicity.DECREASING):
        return cls.from_text(Path(path).read_text(), monotonicity)

    def density_matches_tag(self) -> bool:
        d = np.diff(self._slopes)
        scale = np.max(np.abs(self._slopes))
        tol = 1e-9 * scale
        if self.monotonicity is Monotonicity.DECREASING:
            return bool(np.all(d >= -tol))
        return bool(np.all(d <= tol))

    @property
    def divergent_inverse_moment_at_zero(self) -> bool:
        return bool(self.probabilities[0] == 0.0 and self.gains[0] == 0.0)

    @property
    def probability_range(self):
        return (float(self.probabilities[0]), float(self.probabilities[-1]))

    @property
    def support(self):
        return (float(self.gains[0]), float(self.gains[-1]))

    def _check_u(self, u):
        u = np.asarray(u, dtype=float)
        tol = 1e-15
        if np.any(u < self.probabilities[0] - tol) or np.any(u > self.probabilities[-1] + tol):
            raise DomainError(
                f"probability outside the table range [{self.probabilities[0]}, {self.probabilities[-1]}]")
        return u

    def quantile(self, u):
        u = self._check_u(u)
        return _scalar_or_array(np.interp(u, self.probabilities, self.gains))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        below = x < self.gains[0]
        above = x > self.gains[-1]
        if (np.any(below) and self.probabilities[0] > 0) or (np.any(above) and self.probabilities[-1] < 1):
            raise DomainError("gain outside the tabulated range")
        return _scalar_or_array(np.interp(x, self.gains, self.probabilities, left=0.0, right=1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.gains, x, side="right") - 1, 0, self._slopes.size - 1)
        inside = (x >= self.gains[0]) & (x <= self.gains[-1])
        return _scalar_or_array(np.where(inside, 1.0 / self._slopes[idx], 0.0))

    def _psi(self, p, q):
        # exact for a piecewise-linear quantile: trapezoids on the knots inside [p, q]
        self._check_u([p, q])
        knots = self.probabilities[(self.probabilities > p) & (self.probabilities < q)]
        xs = np.concatenate(([p], knots, [q]))
        ys = np.interp(xs, self.probabilities, self.gains)
        return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))


@dataclass(frozen=True)
class NegatedMarginal(Marginal):
    """Law of ``-X``: ``F_-(x) = 1 - F(-x)``, ``G_-(u) = -G(1-u)``, ``f_-(x) = f(-x)``."""

    base: Marginal

    @property
    def monotonicity(self):
        return self.base.monotonicity.flipped()

    @property
    def support(self):
        lo, hi = self.base.support
        return (-hi, -lo)

    @property
    def mean(self) -> float:
        return -self.base.mean

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return _scalar_or_array(-np.asarray(self.base.quantile(1.0 - u)))

    def cdf(self, x):
        return _scalar_or_array(1.0 - np.asarray(self.base.cdf(-np.asarray(x, dtype=float))))

    def pdf(self, x):
        return self.base.pdf(-np.asarray(x, dtype=float))

    def _psi(self, p, q):
        return -integrated_quantile(self.base, 1.0 - q, 1.0 - p)

    def negate(self) -> Marginal:
        return self.base


# --------------------------------------------------------------------------- #
# Module-level operations
# --------------------------------------------------------------------------- #

def integrated_quantile(m: Marginal, p: float, q: float) -> float:
    """``Psi(p, q) = int_p^q G(u) du`` for ``0 <= p <= q <= 1``."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise DomainError(f"probabilities must lie in [0, 1], got ({p}, {q})")
    if p > q:
        raise DomainError(f"need p <= q, got ({p}, {q})")
    if p == q:
        return 0.0
    return float(m._psi(float(p), float(q)))


def cond_expect_above(m: Marginal, a: float) -> float:
    """E[X | X >= G(a)] for ``0 <= a < 1``."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"a must lie in [0, 1), got {a}")
    closed = getattr(m, "cond_expect_above", None)
    if closed is not None:
        return float(closed(a))
    return integrated_quantile(m, a, 1.0) / (1.0 - a)


def cond_expect_below(m: Marginal, b: float) -> float:
    """E[X | X < G(b)] for ``0 < b <= 1``."""
    if not 0.0 < b <= 1.0:
        raise DomainError(f"b must lie in (0, 1], got {b}")
    closed = getattr(m, "cond_expect_below", None)
    if closed is not None:
        return float(closed(b))
    return integrated_quantile(m, 0.0, b) / b


def negate(m: Marginal) -> Marginal:
    """Law of ``-X``; applying it twice returns the original marginal."""
    return m.negate()


def density_is_monotone(m: Marginal, n_grid: int = 257) -> bool:
    """Compare the monotonicity tag with density differences on an interior quantile grid."""
    lo, hi = m.probability_range
    u = np.linspace(lo, hi, n_grid + 2)[1:-1]
    x = np.asarray(m.quantile(u))
    d = np.diff(np.asarray(m.pdf(x)))
    tol = 1e-9 * np.max(np.abs(np.asarray(m.pdf(x))))
    if m.monotonicity is Monotonicity.DECREASING:
        return bool(np.all(d <= tol))
    return bool(np.all(d >= -tol))


def parse_marginal_spec(spec: str) -> Marginal | list[Marginal]:
    """Parse ``exp:LAMBDA[,LAMBDA...]``, ``uniform[:LOW,HIGH]`` or ``table:PATH``.

    A single rate gives one homogeneous marginal; several rates give a list.
    """
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "exp":
        try:
            rates = [float(r) for r in arg.split(",")] if arg else [1.0]
        except ValueError:
            raise DomainError(f"bad exponential rates in {spec!r}") from None
        ms = [ExponentialMarginal(r) for r in rates]
        return ms[0] if len(ms) == 1 else ms
    if kind == "uniform":
        if not arg:
            return UniformMarginal()
        try:
            low, high = (float(v) for v in arg.split(","))
        except ValueError:
            raise DomainError(f"bad uniform bounds in {spec!r}") from None
        return UniformMarginal(low, high)
    if kind == "table":
        if not arg:
            raise DomainError("table: needs a path")
        return QuantileTableMarginal.from_file(arg)
    raise DomainError(f"unknown marginal kind {kind!r} (expected exp, uniform or table)")
