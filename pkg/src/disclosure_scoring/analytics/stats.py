"""Numeric primitives: midrank percentiles, Kendall's tau, time-series correlation, Welch's t-test."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from scipy import stats as _sps


class InsufficientOverlap(ValueError):
    """Fewer common time points than a statistic needs."""


def midrank_percentiles(values: Sequence[float]) -> list[float]:
    """``100 * (#smaller + 0.5 * #equal) / n`` for every element."""
    n = len(values)
    if n == 0:
        return []
    s = sorted(values)
    out = []
    for v in values:
        lo, hi = bisect_left(s, v), bisect_right(s, v)
        out.append(100.0 * (lo + 0.5 * (hi - lo)) / n)
    return out


# -- Kendall's tau -----------------------------------------------------------

@dataclass(frozen=True)
class TauResult:
    n: int
    concordant: int
    discordant: int
    ties_a: int  # pairs tied in a (including joint ties)
    ties_b: int  # pairs tied in b (including joint ties)
    ties_both: int

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def tau_b(self) -> float | None:
        """Tie-corrected tau; ``None`` when either side is entirely tied."""
        n0 = self.n_pairs
        denom = (n0 - self.ties_a) * (n0 - self.ties_b)
        if denom == 0:
            return None
        tau = (self.concordant - self.discordant) / math.sqrt(denom)
        return max(-1.0, min(1.0, tau))

    @property
    def tau_a_exact(self) -> Fraction:
        return Fraction(self.concordant - self.discordant, self.n_pairs)

    @property
    def tau_a(self) -> float:
        return (self.concordant - self.discordant) / self.n_pairs

    @property
    def concordant_fraction(self) -> Fraction | None:
        """Share of concordant pairs among pairs untied on both sides."""
        m = self.concordant + self.discordant
        return Fraction(self.concordant, m) if m else None


def _count_inversions(seq: list) -> int:
    """Number of pairs i < j with seq[i] > seq[j] (merge sort, O(n log n))."""
    n = len(seq)
    if n < 2:
        return 0
    buf = list(seq)
    tmp = [None] * n
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid, hi = min(lo + width, n), min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[j] < buf[i]:
                    tmp[k] = buf[j]
                    inv += mid - i
                    j += 1
                else:
                    tmp[k] = buf[i]
                    i += 1
                k += 1
            tmp[k:k + mid - i] = buf[i:mid]
            k += mid - i
            tmp[k:k + hi - j] = buf[j:hi]
        buf, tmp = tmp, buf
        width *= 2
    return inv


def _tied_pairs(sorted_vals: Sequence) -> int:
    total, run = 0, 1
    for prev, cur in zip(sorted_vals, sorted_vals[1:]):
        if cur == prev:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> TauResult:
    """Pair counts for Kendall's tau via Knight's O(n log n) algorithm."""
    if len(a) != len(b):
        raise ValueError("a and b must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 observations")
    pairs = sorted(zip(a, b))
    ties_a = _tied_pairs([p[0] for p in pairs])
    ties_both = _tied_pairs(pairs)
    # within runs of equal a, b is ascending, so every inversion is a discordant pair
    discordant = _count_inversions([p[1] for p in pairs])
    ties_b = _tied_pairs(sorted(b))
    n0 = n * (n - 1) // 2
    concordant = n0 - ties_a - ties_b + ties_both - discordant
    return TauResult(n, concordant, discordant, ties_a, ties_b, ties_both)


# -- time-series correlation --------------------------------------------------

def common_points(x: Mapping[int, float], y: Mapping[int, float]) -> list[int]:
    return sorted(set(x) & set(y))


def time_correlation(x: Mapping[int, float], y: Mapping[int, float], min_points: int = 3) -> float | None:
    """Centered correlation of two year-indexed series over their common years.

    Returns ``None`` when either series is constant over those years.
    """
    years = common_points(x, y)
    if len(years) < min_points:
        raise InsufficientOverlap(f"{len(years)} common years, need {min_points}")
    xs = [float(x[t]) for t in years]
    ys = [float(y[t]) for t in years]
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        return None
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    num = math.fsum(u * v for u, v in zip(dx, dy))
    den = math.sqrt(math.fsum(u * u for u in dx) * math.fsum(v * v for v in dy))
    if den == 0.0:
        return None
    c = num / den
    if abs(c) > 1.0 + 1e-12:
        raise ArithmeticError(f"correlation {c} outside [-1, 1]")
    return max(-1.0, min(1.0, c))


# -- Welch's t-test ---------------------------------------------------------

@dataclass(frozen=True)
class WelchResult:
    mean_a: float
    mean_b: float
    t_stat: float
    df: float
    p_value: float

    @property
    def direction(self) -> int:
        """Sign of ``mean_b - mean_a``."""
        return (self.mean_b > self.mean_a) - (self.mean_b < self.mean_a)


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    m = math.fsum(xs) / len(xs)
    v = math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return m, v


def welch_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Two-sided Welch two-sample t-test of ``b`` against ``a``."""
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 values")
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    se2 = va / len(a) + vb / len(b)
    if se2 == 0.0:
        if ma == mb:
            return WelchResult(ma, mb, 0.0, math.nan, 1.0)
        return WelchResult(ma, mb, math.copysign(math.inf, mb - ma), math.nan, 0.0)
    t = (mb - ma) / math.sqrt(se2)
    # Welch-Satterthwaite, written with variance shares so tiny variances don't underflow
    sa, sb = (va / len(a)) / se2, (vb / len(b)) / se2
    df = 1.0 / (sa * sa / (len(a) - 1) + sb * sb / (len(b) - 1))
    p = float(2.0 * _sps.t.sf(abs(t), df))
    return WelchResult(ma, mb, t, df, min(1.0, p))
