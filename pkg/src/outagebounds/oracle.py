"""Independent numerical checks of the analytic bounds.

Nothing here touches :mod:`outagebounds.depbounds`: the rearrangement
estimator only sees quantile atoms of the marginals, and the Monte Carlo
routines only sample through quantile functions. Agreement with the analytic
path is therefore evidence rather than a tautology.

Rearrangement: with the marginals discretised on a probability block, every
column is repeatedly re-ordered to be oppositely ordered to the sum of the
other columns. On the upper block ``[eps, 1]`` this pushes the minimum row sum
up and approximates the largest attainable eps-quantile of the sum; on the
lower block ``[0, eps]`` it pushes the maximum row sum down and approximates
the smallest one.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .marginals import Marginal


class Offset(str, enum.Enum):
    LOWER = "lower"
    MID = "mid"
    UPPER = "upper"


class Mode(str, enum.Enum):
    MAX_QUANTILE = "max-quantile"
    MIN_QUANTILE = "min-quantile"


class Coupling(str, enum.Enum):
    IID = "iid"
    COMONOTONIC = "comonotonic"


_ALPHA = {Offset.LOWER: 0.0, Offset.MID: 0.5, Offset.UPPER: 1.0}


@dataclass
class QuantileMatrix:
    atoms: np.ndarray
    block: tuple[float, float]

    @property
    def N(self) -> int:
        return self.atoms.shape[0]

    @property
    def n(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class RaResult:
    extremal_sum: float
    iterations: int
    converged: bool
    #: extremal row sum after the initial shuffle and after each pass
    history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    #: True when the estimate is dominated by a few huge draws (heavy or infinite tail)
    unstable: bool = False
    variance: float = 0.0


def _as_list(ms) -> list[Marginal]:
    out = [ms] if isinstance(ms, Marginal) else list(ms)
    if not out:
        raise DomainError("empty marginal list")
    return out


def discretize(ms: Sequence[Marginal] | Marginal, block: tuple[float, float], N: int,
               offset: Offset | str = Offset.MID) -> QuantileMatrix:
    """Quantile atoms ``G_j(p + (q-p)(k+alpha)/N)``, ``k = 0..N-1``, one column per marginal.

    An ``upper`` offset that lands on an infinite ``G(1)`` is clamped to
    ``G(1 - (q-p)/(2N))``, which biases the top atom low.
    """
    ms = _as_list(ms)
    p, q = map(float, block)
    if not 0.0 <= p < q <= 1.0:
        raise DomainError(f"block must satisfy 0 <= p < q <= 1, got {block}")
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    alpha = _ALPHA[Offset(offset)]
    u = p + (q - p) * (np.arange(N) + alpha) / N
    cols = []
    for m in ms:
        with np.errstate(divide="ignore"):
            col = np.asarray(m.quantile(u), dtype=float)
        if not np.isfinite(col[-1]):
            col[-1] = float(m.quantile(q - (q - p) / (2 * N)))
        if not np.isfinite(col[0]):
            col[0] = float(m.quantile(p + (q - p) / (2 * N)))
        cols.append(col)
    return QuantileMatrix(np.column_stack(cols), (p, q))


def _extremal(row_sums: np.ndarray, mode: Mode) -> float:
    return float(row_sums.min() if mode is Mode.MAX_QUANTILE else row_sums.max())


def _oppositely_ordered(col: np.ndarray, rest: np.ndarray) -> bool:
    # rows by ascending rest, ties by descending atom; opposite order <=> atoms non-increasing
    order = np.lexsort((-col, rest))
    return bool(np.all(np.diff(col[order]) <= 0))


def rearrange_pass(atoms: np.ndarray) -> bool:
    """One in-place sweep of opposite re-ordering over all columns; True if anything moved.

    A column is rewritten only when it strictly violates opposite ordering
    against the sum of the other columns, so every change strictly lowers the
    sum of squared row sums and the iteration cannot cycle. Ties in the other
    columns' sums are broken by row index (stable sort).
    """
    changed = False
    n = atoms.shape[1]
    for j in range(n):
        col = atoms[:, j]
        rest = atoms[:, [k for k in range(n) if k != j]].sum(axis=1)
        if _oppositely_ordered(col, rest):
            continue
        order = np.argsort(rest, kind="stable")
        # largest atom against the smallest rest
        new = np.empty_like(col)
        new[order] = np.sort(col)[::-1]
        atoms[:, j] = new
        changed = True
    return changed


def ra_extremal_quantile(ms: Sequence[Marginal] | Marginal, epsilon: float, N: int = 2000,
                         mode: Mode | str = Mode.MAX_QUANTILE, seed: int = 0,
                         offset: Offset | str = Offset.MID, max_passes: int = 100) -> RaResult:
    """Rearrangement estimate of the extremal epsilon-quantile of the gain sum.

    ``max-quantile`` works on ``[epsilon, 1]`` and returns the minimum row sum
    (largest achievable quantile). ``min-quantile`` works on ``[0, epsilon]``
    and returns the maximum row sum (smallest achievable quantile).
    Columns start in a seeded random order.
    """
    mode = Mode(mode)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if N < 10:
        raise DomainError(f"N must be >= 10, got {N}")
    block = (epsilon, 1.0) if mode is Mode.MAX_QUANTILE else (0.0, epsilon)
    qm = discretize(ms, block, N, offset)
    atoms = qm.atoms
    rng = np.random.default_rng(seed)
    for j in range(atoms.shape[1]):
        atoms[:, j] = atoms[rng.permutation(N), j]

    history = [_extremal(atoms.sum(axis=1), mode)]
    if atoms.shape[1] == 1:
        return RaResult(history[0], 0, True, tuple(history))
    converged = False
    passes = 0
    while passes < max_passes:
        passes += 1
        changed = rearrange_pass(atoms)
        history.append(_extremal(atoms.sum(axis=1), mode))
        if not changed:
            converged = True
            break
    return RaResult(history[-1], passes, converged, tuple(history))


def _draw(ms: list[Marginal], coupling: Coupling, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if coupling is Coupling.COMONOTONIC:
        u = rng.random(samples)
        return sum(np.asarray(m.quantile(u), dtype=float) for m in ms)
    total = np.zeros(samples)
    for m in ms:
        total += np.asarray(m.quantile(rng.random(samples)), dtype=float)
    return total


def _check_samples(samples):
    if int(samples) != samples or samples < 1:
        raise DomainError(f"samples must be a positive integer, got {samples!r}")
    return int(samples)


def mc_outage(ms: Sequence[Marginal] | Marginal, s: float, coupling: Coupling | str = Coupling.IID,
              samples: int = 1_000_000, seed: int = 0, n: int | None = None) -> McEstimate:
    """Monte Carlo ``P(sum of gains < s)`` with its binomial standard error.

    A single marginal is replicated ``n`` times (``n`` required then).
    """
    ms = _replicate(ms, n)
    samples = _check_samples(samples)
    sums = _draw(ms, Coupling(coupling), samples, seed)
    p = float(np.count_nonzero(sums < s)) / samples
    return McEstimate(p, math.sqrt(p * (1.0 - p) / samples), samples)


def mc_expect_inv_sum(ms: Sequence[Marginal] | Marginal, coupling: Coupling | str = Coupling.IID,
                      samples: int = 1_000_000, seed: int = 0, n: int | None = None,
                      instability_threshold: float = 0.01) -> McEstimate:
    """Monte Carlo ``E[1 / sum of gains]``.

    Flags the estimate as unstable when its relative standard error or the
    share of the single largest draw exceeds ``instability_threshold``; both
    blow up when the expectation is infinite.
    """
    ms = _replicate(ms, n)
    samples = _check_samples(samples)
    sums = _draw(ms, Coupling(coupling), samples, seed)
    with np.errstate(divide="ignore"):
        inv = 1.0 / sums
    if not np.all(np.isfinite(inv)):
        return McEstimate(math.inf, math.inf, samples, True, math.inf)
    with np.errstate(over="ignore", invalid="ignore"):
        mean = float(inv.mean())
        var = float(inv.var(ddof=1)) if samples > 1 else 0.0
        se = math.sqrt(var / samples)
        max_share = float(inv.max() / inv.sum())
    unstable = not (se <= instability_threshold * mean and max_share <= instability_threshold)
    return McEstimate(mean, se, samples, unstable, var)


def _replicate(ms, n) -> list[Marginal]:
    if isinstance(ms, Marginal):
        if n is None:
            raise DomainError("n is required with a single marginal")
        return [ms] * int(n)
    return _as_list(ms)
