"""Run-time instrumentation of the UMDA on DLB.

Block indices are 1-based: block ``i`` covers positions ``2i - 1`` and
``2i``.  Snapshots are taken through the ``hook`` argument of
:func:`edabench.algorithms.run_umda` / :func:`run_mimic`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidInputError
from .fitness import DLB, leading_ones_many, with_neutral_bits, without_optimum
from .models import ChainModel, FrequencyVector, Population

_TOL = 1e-12


def _freqs(model) -> np.ndarray:
    if isinstance(model, FrequencyVector):
        return model.p
    if isinstance(model, ChainModel):
        return model.marginals()
    return np.asarray(model, dtype=float)


def critical_block_index(p, n: int) -> Optional[int]:
    """First block not at its maximum while all blocks left of it are.

    ``None`` when every frequency sits at the upper margin.
    """
    if n < 2 or n % 2:
        raise InvalidInputError(f"critical blocks need an even n, got {n}")
    p = _freqs(p)
    if p.size != n:
        raise InvalidInputError(f"expected {n} frequencies, got {p.size}")
    top = 1.0 - 1.0 / n
    for i in range(n // 2):
        a, b = p[2 * i], p[2 * i + 1]
        if a + b < 2.0 * top - _TOL:
            return i + 1
        if abs(a - top) > _TOL or abs(b - top) > _TOL:
            return None
    return None


def selection_relevant_block(pop: Population, mu: int) -> Optional[int]:
    """Smallest block ``i`` such that fewer than ``mu`` members have ``2i`` leading ones."""
    if not 1 <= mu <= len(pop):
        raise InvalidInputError(f"need 1 <= mu <= {len(pop)}")
    lo = leading_ones_many(pop.members)
    # mu-th largest leading-ones count
    kth = int(np.partition(lo, lo.size - mu)[lo.size - mu])
    i = kth // 2 + 1
    return i if 2 * i <= pop.n else None


@dataclass(frozen=True, eq=False)
class IterationSnapshot:
    """State of iteration ``t``: the model the population was sampled from and
    the block notions derived from it and from the population."""

    t: int
    frequencies: np.ndarray
    critical_block: Optional[int]
    selection_relevant: Optional[int]
    min_frequency_right_of_critical: Optional[float]

    def __post_init__(self):
        p = np.array(self.frequencies, dtype=float, copy=True)
        p.flags.writeable = False
        object.__setattr__(self, "frequencies", p)

    def __eq__(self, other):
        if not isinstance(other, IterationSnapshot):
            return NotImplemented
        return (self.t == other.t and self.critical_block == other.critical_block
                and self.selection_relevant == other.selection_relevant
                and self.min_frequency_right_of_critical == other.min_frequency_right_of_critical
                and np.array_equal(self.frequencies, other.frequencies))

    def row(self) -> tuple:
        """``(iteration, critical_block, selection_relevant, min_freq_right)``."""
        return (self.t, self.critical_block, self.selection_relevant,
                self.min_frequency_right_of_critical)


def snapshot(t: int, p, pop: Population, mu: int) -> IterationSnapshot:
    p = _freqs(p)
    n = p.size
    crit = critical_block_index(p, n) if n % 2 == 0 else None
    right = p[2 * crit:] if crit is not None else p[:0]
    return IterationSnapshot(t, p, crit, selection_relevant_block(pop, mu),
                             float(right.min()) if right.size else None)


class TraceRecorder:
    """EDA hook collecting one :class:`IterationSnapshot` per iteration."""

    def __init__(self, n: int, mu: int):
        self.mu = mu
        self.model = np.full(n, 0.5)
        self.snapshots: list[IterationSnapshot] = []

    def __call__(self, t: int, pop: Population, new_model) -> None:
        self.snapshots.append(snapshot(t, self.model, pop, self.mu))
        self.model = _freqs(new_model).copy()


def neutral_band_violations(trace, eps: float, horizon: int) -> list[tuple[int, int]]:
    """``(t, j)`` pairs where position ``j`` (1-based), right of the
    selection-relevant block, has a frequency outside ``((1-eps)/2, (1+eps)/2)``.

    Only iterations ``t <= horizon`` are inspected.  Frequencies at or left of
    the selection-relevant block are under selection and thus exempt.
    """
    if not 0.0 < eps < 1.0:
        raise InvalidInputError("eps must lie in (0, 1)")
    lo, hi = (1.0 - eps) / 2.0, (1.0 + eps) / 2.0
    out = []
    for snap in trace:
        if snap.t > horizon or snap.selection_relevant is None:
            continue
        start = 2 * snap.selection_relevant
        right = snap.frequencies[start:]
        bad = np.flatnonzero((right <= lo) | (right >= hi))
        out.extend((snap.t, start + int(j) + 1) for j in bad)
    return out


@dataclass(frozen=True)
class DriftReport:
    d: float
    t_max: int
    mu: int
    runs: int
    violation_iteration: Optional[int]
    empirical_stay_rate: float
    theoretical_bound: float


def drift_bound(mu: int, t: int, d: float) -> float:
    """``1 - 2 exp(-d^2 mu / (2t))``, the guaranteed stay probability."""
    if t == 0:
        return 1.0
    return 1.0 - 2.0 * math.exp(-d * d * mu / (2.0 * t))


def neutral_drift_probe(mu: int, t: int, d: float, runs: int, rng: np.random.Generator,
                        *, n: int = 11, lam: Optional[int] = None, backend=None) -> DriftReport:
    """Fraction of UMDA runs whose neutral frequency stays within ``d`` of 1/2.

    The fitness is DLB on positions ``1 .. n-1`` with position ``n`` neutral;
    no optimum is declared, so each run performs exactly ``t`` model updates.
    ``violation_iteration`` is the earliest iteration at which any run left
    the band.
    """
    from .algorithms import OptimizerConfig, run_umda

    if not 0.0 < d or mu < 2 or t < 0 or runs < 1:
        raise InvalidInputError("need d > 0, mu >= 2, t >= 0, runs >= 1")
    if n < 3 or n % 2 == 0:
        raise InvalidInputError("the probe needs an odd n >= 3")
    lam = lam or 2 * mu
    config = OptimizerConfig("umda", mu=mu, lam=lam)
    f = without_optimum(with_neutral_bits(DLB, [n], n))
    stayed = 0
    first = None
    for _ in range(runs):
        worst = []

        def hook(it, pop, model, worst=worst):
            if not worst and abs(model.p[n - 1] - 0.5) >= d:
                worst.append(it + 1)

        if t > 0:
            # t full generations plus one sample ends the run right after update t
            run_umda(f, config, n, t * lam + 1, rng, hook, backend=backend)
        if worst:
            first = worst[0] if first is None else min(first, worst[0])
        else:
            stayed += 1
    return DriftReport(d, t, mu, runs, first, stayed / runs, drift_bound(mu, t, d))


class Recommendation(NamedTuple):
    mu: int
    lam: int
    budget: int


def theorem_constants(delta: float, eps: float, zeta: float) -> tuple[float, float]:
    """``(c_mu, c_lambda)`` of the UMDA run-time guarantee on DLB."""
    for name, v in (("delta", delta), ("eps", eps), ("zeta", zeta)):
        if not 0.0 < v < 1.0:
            raise InvalidInputError(f"{name} must lie in (0, 1), got {v}")
    c_mu = 16.0 / eps ** 2
    c_lam = (1 - zeta) * (1 - delta ** 2) * (1 - eps) ** 4 / (16 * math.e)
    return c_mu, c_lam


def recommend_parameters(n: int, mode: str = "experiment", delta: float = 0.5,
                         eps: float = 0.5, zeta: float = 0.5) -> Recommendation:
    """UMDA parameters for DLB.

    ``theorem``: ``mu = ceil(c_mu n ln n)``, smallest ``lambda`` with
    ``mu / lambda <= c_lambda``, budget ``ceil(lambda (n/2 + 2e ln n))``.
    ``experiment``: ``mu = ceil(3 n ln n)``, ``lambda = 12 mu``, budget ``10 n^3``.
    """
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    c_mu, c_lam = theorem_constants(delta, eps, zeta)
    if mode == "experiment":
        mu = math.ceil(3 * n * math.log(n))
        return Recommendation(mu, 12 * mu, 10 * n ** 3)
    if mode != "theorem":
        raise InvalidInputError(f"mode must be 'theorem' or 'experiment', not {mode!r}")
    mu = math.ceil(c_mu * n * math.log(n))
    lam = math.ceil(mu / c_lam)
    while mu / lam > c_lam:
        lam += 1
    return Recommendation(mu, lam, theorem_budget(n, lam))


def theorem_budget(n: int, lam: int) -> int:
    """``ceil(lambda (n/2 + 2e ln n))`` evaluations."""
    return math.ceil(lam * (n / 2 + 2 * math.e * math.log(n)))
