"""Binomial tails and their bounds, (1+1) EA run-time formulas on DLB,
power-law regression and robust summaries.

Probabilities are computed in log space; tails are summed from the side with
the smaller mass so that absolute errors stay around machine precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError

# Slack for comparing integers with a floating-point expectation.
_EPS = 1e-9


@dataclass(frozen=True)
class BinomialSpec:
    k: int
    p: float

    def __post_init__(self):
        if self.k < 0 or not 0.0 <= self.p <= 1.0:
            raise InvalidInputError(f"invalid binomial Bin({self.k}, {self.p})")

    @property
    def mean(self) -> float:
        return self.k * self.p


def _check_m(spec: BinomialSpec, m: int) -> None:
    if not 0 <= m <= spec.k or int(m) != m:
        raise InvalidInputError(f"m={m} outside [0, {spec.k}]")


def _log_pmf(k: int, p: float, m: int) -> float:
    if p == 0.0:
        return 0.0 if m == 0 else -math.inf
    if p == 1.0:
        return 0.0 if m == k else -math.inf
    return (math.lgamma(k + 1) - math.lgamma(m + 1) - math.lgamma(k - m + 1)
            + m * math.log(p) + (k - m) * math.log1p(-p))


def binom_pmf(spec: BinomialSpec, m: int) -> float:
    _check_m(spec, m)
    return math.exp(_log_pmf(spec.k, spec.p, int(m)))


def _sum_pmf(spec: BinomialSpec, lo: int, hi: int) -> float:
    return math.fsum(math.exp(_log_pmf(spec.k, spec.p, j)) for j in range(lo, hi + 1))


def binom_cdf(spec: BinomialSpec, m: int) -> float:
    """``Pr[X <= m]``."""
    _check_m(spec, m)
    if m <= spec.mean:
        return min(1.0, _sum_pmf(spec, 0, m))
    return max(0.0, 1.0 - _sum_pmf(spec, m + 1, spec.k))


def binom_sf(spec: BinomialSpec, m: int) -> float:
    """``Pr[X >= m]``."""
    _check_m(spec, m)
    if m >= spec.mean:
        return min(1.0, _sum_pmf(spec, m, spec.k))
    return max(0.0, 1.0 - _sum_pmf(spec, 0, m - 1))


def chernoff_lower_tail_bound(E: float, delta: float) -> float:
    """Multiplicative Chernoff bound on ``Pr[X <= (1 - delta) E[X]]``."""
    if not 0.0 <= delta <= 1.0 or E < 0:
        raise InvalidInputError("need delta in [0, 1] and E >= 0")
    return math.exp(-delta * delta * E / 2.0)


def binom_upper_tail_bound(spec: BinomialSpec, m: int) -> float:
    """``m(1-p) / (m - E[X]) * Pr[X = m]``, an upper bound on ``Pr[X >= m]``.

    Valid for integer ``m`` with ``E[X] + 1 <= m <= k``.
    """
    _check_m(spec, m)
    if m < spec.mean + 1 - _EPS:
        raise InvalidInputError(f"upper-tail bound needs m >= E[X] + 1 = {spec.mean + 1}")
    # m - kp written as m(1-p) - (k-m)p: the factor is exactly 1 at m = k
    num = m * (1.0 - spec.p)
    return num / (num - (spec.k - m) * spec.p) * binom_pmf(spec, m)


def binom_lower_tail_bound(spec: BinomialSpec, m: int) -> float:
    """``(k-m)p / (E[X] - m) * Pr[X = m]``, an upper bound on ``Pr[X <= m]``.

    Valid for integer ``m`` with ``0 <= m <= E[X] - 1``.
    """
    _check_m(spec, m)
    if m > spec.mean - 1 + _EPS:
        raise InvalidInputError(f"lower-tail bound needs m <= E[X] - 1 = {spec.mean - 1}")
    # kp - m written as (k-m)p - m(1-p): the factor is exactly 1 at m = 0
    num = (spec.k - m) * spec.p
    return num / (num - m * (1.0 - spec.p)) * binom_pmf(spec, m)


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise InvalidInputError(f"DLB needs an even length n >= 2, got {n}")


def ea_dlb_expected_time_closed(n: int) -> float:
    """Expected number of iterations of the (1+1) EA on DLB, closed form.

    The evaluation of the initial individual is not included.
    """
    _check_even(n)
    return (0.25 * n * n * (n - 0.5) * ((1.0 + 1.0 / (n - 1)) ** n - 1.0)
            / (1.0 + 1.0 / (2.0 * (n - 1))))


def ea_dlb_phase_times(n: int) -> list[tuple[float, float]]:
    """``(E[X_{l,0}], E[X_{l,1}])`` for every prefix length ``l = 0 .. n/2 - 1``.

    ``X_{l,b}`` is the waiting time to leave a search point with ``2l``
    leading ones whose next block is ``00`` (``b = 0``) or holds exactly one
    one (``b = 1``).
    """
    _check_even(n)
    q = 1.0 - 1.0 / n
    out = []
    for ell in range(n // 2):
        x1 = q ** (-2 * ell) * n * n
        x0 = 0.5 * q ** (-2 * ell - 1) * n + 0.5 * x1
        out.append((x0, x1))
    return out


def ea_dlb_expected_time_recurrence(n: int) -> float:
    """Same quantity as :func:`ea_dlb_expected_time_closed`, summed phase by phase."""
    return math.fsum(0.5 * x0 + 0.25 * x1 for x0, x1 in ea_dlb_phase_times(n))


def whp_threshold(n: int) -> tuple[float, float]:
    """``(n^3 / (16e), exp(-n / (64e)))``: the (1+1) EA needs more than the
    threshold with probability at least one minus the second value."""
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    return n ** 3 / (16 * math.e), math.exp(-n / (64 * math.e))


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    scale: float
    residual: float

    def predict(self, n):
        return self.scale * np.asarray(n, dtype=float) ** self.exponent


def fit_power_law(points) -> PowerLawFit:
    """Least squares of ``log T = log a + b log n``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise InvalidInputError("need at least two (n, T) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise InvalidInputError("power-law fit needs finite positive values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise InvalidInputError("need at least two distinct n")
    xm, ym = x.mean(), y.mean()
    b = float(np.dot(x - xm, y - ym) / np.dot(x - xm, x - xm))
    a = ym - b * xm
    res = float(np.sum((y - (a + b * x)) ** 2))
    return PowerLawFit(b, math.exp(a), res)


@dataclass(frozen=True)
class SummaryRow:
    """Quantiles over the successful runs of one cell; absent without successes."""

    runs: int
    successes: int
    median: Optional[float]
    q1: Optional[float]
    q3: Optional[float]
    algorithm: Optional[str] = None
    n: Optional[int] = None
    mu: Optional[int] = None
    lam: Optional[int] = None

    @property
    def success_ratio(self) -> float:
        return self.successes / self.runs


def summarize(values: Sequence[int], successes: Sequence[bool], **cell) -> SummaryRow:
    """Median and quartiles (linear interpolation) of successful runs."""
    if len(values) == 0:
        raise InvalidInputError("cannot summarize an empty sample")
    if len(values) != len(successes):
        raise InvalidInputError("values and success flags differ in length")
    ok = np.asarray([v for v, s in zip(values, successes) if s], dtype=float)
    if ok.size == 0:
        return SummaryRow(len(values), 0, None, None, None, **cell)
    q1, med, q3 = np.quantile(ok, [0.25, 0.5, 0.75])
    return SummaryRow(len(values), int(ok.size), float(med), float(q1), float(q3), **cell)
