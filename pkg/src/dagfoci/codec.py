"""The CODEC conditional dependence coefficient and its numerator.

For a response ``y`` and predictors ``z`` (optionally given ``x``), the
estimator only uses the ranks of ``y`` and the nearest-neighbour graphs of
the predictor rows, so it costs ``O(n log n)`` plus the neighbour search.

Ranks use the right-continuous convention: ``R_j = #{k : y_k <= y_j}`` and
``L_j = #{k : y_k >= y_j}``.

Unconditional form (no ``x``)::

    Q_n = (1/n^2) * sum_i (min(R_i, R_M(i)) - L_i^2 / n)
    S_n = (1/n^3) * sum_i L_i (n - L_i)
    T_n = Q_n / S_n

where ``M(i)`` is the nearest neighbour of ``z_i``.  ``S_n`` is the
empirical ``int Var(1{Y >= t}) dmu(t)``; it is zero exactly when ``y`` is
constant, and it keeps the coefficient well behaved when ``y`` has ties.

Conditional form (``x`` with at least one column)::

    T_n = sum_j (min(R_j, R_M(j)) - min(R_j, R_N(j)))
          / sum_j (R_j - min(R_j, R_N(j)))

with ``N(j)`` the nearest neighbour of ``x_j`` and ``M(j)`` that of the
concatenated row ``(x_j, z_j)``.

All sums are carried out in integer arithmetic, so the statistic is exactly
reproducible for a fixed tie seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .neighbors import SeedLike, nearest_neighbors


class DegenerateStatisticError(ValueError):
    """The statistic's denominator vanishes."""


class DegenerateResponseError(DegenerateStatisticError):
    """Constant response: no variation to explain."""


@dataclass(frozen=True)
class RankVector:
    r: np.ndarray
    l: np.ndarray


@dataclass(frozen=True)
class CodecValue:
    t: float
    numerator: float
    denominator: float
    n_used: int
    conditioning_size: int


def _seed_tuple(seed: SeedLike) -> tuple:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _column(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise ValueError("response must be a single column")
    if len(y) < 2:
        raise ValueError(f"need at least 2 samples, got {len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    return y


def _matrix(a, n: int, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{what} must be a vector or a matrix")
    if a.shape[0] != n:
        raise ValueError(f"dimension mismatch: {what} has {a.shape[0]} rows, response has {n}")
    return a


def compute_ranks(y) -> RankVector:
    y = _column(y)
    srt = np.sort(y)
    r = np.searchsorted(srt, y, side="right").astype(np.int64)
    l = (len(y) - np.searchsorted(srt, y, side="left")).astype(np.int64)
    return RankVector(r=r, l=l)


def _isum(a) -> int:
    # exact integer sum; int64 is exact for n up to ~2e6
    return int(np.sum(a, dtype=np.int64)) if len(a) <= 2_000_000 else int(sum(int(v) for v in a))


class RankStats:
    """Rank data of one response, reusable across many neighbour graphs."""

    def __init__(self, y):
        ranks = compute_ranks(y)
        self.n = len(ranks.r)
        self.r = ranks.r
        self.l = ranks.l
        n = self.n
        self.l2_sum = _isum(self.l * self.l)
        self.spread_sum = _isum(self.l * (n - self.l))

    def q_sum(self, m_nn) -> int:
        """``sum_i (n min(R_i, R_M(i)) - L_i^2)``, i.e. ``n^3 * Q_n``."""
        return self.n * _isum(np.minimum(self.r, self.r[m_nn])) - self.l2_sum

    def unconditional(self, m_nn, conditioning_size: int = 0) -> CodecValue:
        if self.spread_sum == 0:
            raise DegenerateResponseError("degenerate response: y is constant")
        n3 = float(self.n) ** 3
        num = self.q_sum(m_nn)
        return CodecValue(
            t=num / self.spread_sum,
            numerator=num / n3,
            denominator=self.spread_sum / n3,
            n_used=self.n,
            conditioning_size=conditioning_size,
        )

    def conditional(self, m_nn, n_nn, conditioning_size: int) -> CodecValue:
        base = np.minimum(self.r, self.r[n_nn])
        den = _isum(self.r - base)
        if den == 0:
            raise DegenerateStatisticError(
                "conditioning explains response ranks exactly (zero denominator)"
            )
        num = _isum(np.minimum(self.r, self.r[m_nn]) - base)
        return CodecValue(
            t=num / den,
            numerator=float(num),
            denominator=float(den),
            n_used=self.n,
            conditioning_size=conditioning_size,
        )


def codec_unconditional(y, z, seed: SeedLike = 0) -> CodecValue:
    """CODEC of ``y`` on ``z`` with nothing conditioned on."""
    y = _column(y)
    z = _matrix(z, len(y), "z")
    stats = RankStats(y)
    if stats.spread_sum == 0:
        raise DegenerateResponseError("degenerate response: y is constant")
    m_nn = nearest_neighbors(z, _seed_tuple(seed) + (1,)).nn
    return stats.unconditional(m_nn)


def codec_conditional(y, z, x, seed: SeedLike = 0) -> CodecValue:
    """CODEC of ``y`` on ``z`` given ``x`` (``x`` needs at least one column)."""
    y = _column(y)
    n = len(y)
    z = _matrix(z, n, "z")
    x = _matrix(x, n, "x")
    if x.shape[1] == 0:
        raise ValueError("conditioning matrix has no columns; use codec_unconditional")
    seed = _seed_tuple(seed)
    stats = RankStats(y)
    n_nn = nearest_neighbors(x, seed + (0,)).nn
    m_nn = nearest_neighbors(np.hstack([x, z]), seed + (1,)).nn
    return stats.conditional(m_nn, n_nn, conditioning_size=x.shape[1])


def codec(y, z, x: Optional[np.ndarray] = None, seed: SeedLike = 0) -> CodecValue:
    """Dispatch to the conditional or unconditional estimator."""
    if x is None or np.asarray(x).size == 0:
        return codec_unconditional(y, z, seed)
    return codec_conditional(y, z, x, seed)


def q_n(y, x_s, seed: SeedLike = 0) -> float:
    """Numerator statistic ``Q_n(y, x_s)``; zero for an empty ``x_s``."""
    y = _column(y)
    if x_s is None:
        return 0.0
    x_s = np.asarray(x_s, dtype=np.float64)
    if x_s.ndim == 2 and x_s.shape[1] == 0 or x_s.size == 0:
        return 0.0
    x_s = _matrix(x_s, len(y), "x_s")
    stats = RankStats(y)
    m_nn = nearest_neighbors(x_s, _seed_tuple(seed) + (1,)).nn
    return stats.q_sum(m_nn) / float(stats.n) ** 3
