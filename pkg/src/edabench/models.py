"""Probabilistic models of the UMDA and the MIMIC.

All random draws go through a ``numpy.random.Generator`` and use only two
primitives: ``rng.random()`` (one 53-bit double) and
``rng.bit_generator.random_raw()`` (one raw 64-bit word).  The compiled
kernels in :mod:`edabench._core` consume the underlying bit generator in
exactly the same order, so both backends produce identical runs for a seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .fitness import FitnessFunction

# Entropies closer than this are treated as tied; absorbs last-ulp differences
# between log implementations.
ENTROPY_TIE_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """UMDA model: ``p[i]`` is the probability of sampling a 1 at position ``i``."""

    p: np.ndarray

    def __post_init__(self):
        p = _readonly(self.p)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("frequency vector must be a non-empty 1-d array")
        if np.any((p < 0) | (p > 1)):
            raise InvalidInputError("frequencies must lie in [0, 1]")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n: int) -> "FrequencyVector":
        return cls(np.full(n, 0.5))

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def margin(self) -> float:
        return 1.0 / self.n

    def __eq__(self, other):
        return isinstance(other, FrequencyVector) and np.array_equal(self.p, other.p)

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class ChainModel:
    """MIMIC model.

    ``order`` is a 0-based permutation of positions.  ``cond_p[j - 1]`` holds
    ``(Pr[1 | predecessor 0], Pr[1 | predecessor 1])`` for the position
    ``order[j]``, the predecessor being ``order[j - 1]``.
    """

    order: np.ndarray
    root_p: float
    cond_p: np.ndarray

    def __post_init__(self):
        order = np.array(self.order, dtype=np.intp, copy=True)
        n = order.size
        if n == 0 or not np.array_equal(np.sort(order), np.arange(n)):
            raise InvalidInputError("order must be a permutation of 0..n-1")
        cond = _readonly(np.asarray(self.cond_p, dtype=np.float64).reshape(n - 1, 2))
        if not 0.0 <= self.root_p <= 1.0 or np.any((cond < 0) | (cond > 1)):
            raise InvalidInputError("chain probabilities must lie in [0, 1]")
        order.flags.writeable = False
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "cond_p", cond)
        object.__setattr__(self, "root_p", float(self.root_p))

    @classmethod
    def uniform(cls, n: int) -> "ChainModel":
        return cls(np.arange(n), 0.5, np.full((n - 1, 2), 0.5))

    @property
    def n(self) -> int:
        return self.order.size

    def marginals(self) -> np.ndarray:
        """Probability of a 1 at each position under the chain, by position."""
        out = np.empty(self.n)
        q = self.root_p
        out[self.order[0]] = q
        for j in range(1, self.n):
            c0, c1 = self.cond_p[j - 1]
            q = q * c1 + (1.0 - q) * c0
            out[self.order[j]] = q
        return out

    def __eq__(self, other):
        return (isinstance(other, ChainModel) and self.root_p == other.root_p
                and np.array_equal(self.order, other.order)
                and np.array_equal(self.cond_p, other.cond_p))


@dataclass(frozen=True, eq=False)
class Population:
    members: np.ndarray
    fitness: np.ndarray

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.uint8)
        fitness = np.asarray(self.fitness)
        if members.ndim != 2 or fitness.shape != (members.shape[0],):
            raise InvalidInputError("population needs a (lambda, n) matrix and lambda fitness values")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "fitness", fitness)

    @classmethod
    def evaluate(cls, members, f: FitnessFunction) -> "Population":
        members = np.asarray(members, dtype=np.uint8)
        return cls(members, f.evaluate_many(members))

    def __len__(self):
        return self.members.shape[0]

    @property
    def n(self) -> int:
        return self.members.shape[1]

    def take(self, idx) -> "Population":
        return Population(self.members[idx], self.fitness[idx])


def clamp(p, n: int):
    return np.clip(p, 1.0 / n, 1.0 - 1.0 / n)


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform bit string from ``ceil(n / 64)`` raw words, low bits first."""
    words = np.atleast_1d(rng.bit_generator.random_raw((n + 63) // 64)).astype("<u8")
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:n]


def sample_from_frequencies(p: FrequencyVector, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(p.n) < p.p).astype(np.uint8)


def sample_population(p: FrequencyVector, lam: int, rng: np.random.Generator) -> np.ndarray:
    """``lam`` independent samples, row by row."""
    return (rng.random((lam, p.n)) < p.p).astype(np.uint8)


def select_indices(fitness, mu: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``mu`` best entries, breaking ties uniformly at random.

    Strictly better entries come first in index order, followed by a uniform
    ``r``-subset of the boundary class drawn with a partial Fisher-Yates
    shuffle (one ``rng.random()`` per pick, only when the cut is ambiguous).
    """
    f = np.asarray(fitness)
    lam = f.size
    if not 1 <= mu <= lam:
        raise InvalidInputError(f"cannot select {mu} of {lam} individuals")
    cut = np.partition(f, lam - mu)[lam - mu]
    above = np.flatnonzero(f > cut)
    boundary = np.flatnonzero(f == cut)
    r = mu - above.size
    c = boundary.size
    if 0 < r < c:
        for i in range(r):
            j = i + int(rng.random() * (c - i))
            boundary[i], boundary[j] = boundary[j], boundary[i]
    return np.concatenate([above, boundary[:r]])


def select_best(pop: Population, mu: int, rng: np.random.Generator) -> Population:
    return pop.take(select_indices(pop.fitness, mu, rng))


def umda_update(selected, n: int) -> FrequencyVector:
    """Relative one-frequencies of the selected individuals, clamped to the margins."""
    X = selected.members if isinstance(selected, Population) else np.asarray(selected)
    if X.shape[0] == 0:
        raise InvalidInputError("cannot update from an empty selection")
    counts = X.sum(axis=0, dtype=np.int64)
    return FrequencyVector(clamp(counts / X.shape[0], n))


def binary_entropy(q) -> float:
    """Entropy in bits of a Bernoulli(q) variable, with ``0 log 0 = 0``."""
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise InvalidInputError(f"probability out of range: {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -(q * math.log2(q) + (1.0 - q) * math.log2(1.0 - q))


def _entropy_vec(q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(q, dtype=np.float64)
    inner = (q > 0.0) & (q < 1.0)
    qi = q[inner]
    out[inner] = -(qi * np.log2(qi) + (1.0 - qi) * np.log2(1.0 - qi))
    return out


def _pick_min(values: np.ndarray, candidates: np.ndarray, rng) -> int:
    vals = values[candidates]
    ties = candidates[vals <= vals.min() + ENTROPY_TIE_TOL]
    if ties.size == 1:
        return int(ties[0])
    return int(ties[int(rng.random() * ties.size)])


def mimic_fit(selected, n: int, rng: np.random.Generator) -> ChainModel:
    """Greedy chain fit by minimum (conditional) empirical entropy.

    ``n`` sets the margins ``[1/n, 1 - 1/n]``; the chain spans the columns of
    ``selected``.
    """
    X = selected.members if isinstance(selected, Population) else np.asarray(selected, dtype=np.uint8)
    mu, width = X.shape
    if mu == 0:
        raise InvalidInputError("cannot fit from an empty selection")
    lo, hi = 1.0 / n, 1.0 - 1.0 / n
    counts = X.sum(axis=0, dtype=np.int64)
    remaining = np.ones(width, dtype=bool)

    root = _pick_min(_entropy_vec(counts / mu), np.arange(width), rng)
    remaining[root] = False
    order = [root]
    root_p = min(max(counts[root] / mu, lo), hi)
    cond = np.empty((width - 1, 2))
    prev = root
    for j in range(1, width):
        rows1 = X[:, prev] == 1
        n1 = int(rows1.sum())
        n0 = mu - n1
        ones1 = X[rows1].sum(axis=0, dtype=np.int64)
        ones0 = counts - ones1
        h = np.zeros(width)
        if n0:
            h += (n0 / mu) * _entropy_vec(ones0 / n0)
        if n1:
            h += (n1 / mu) * _entropy_vec(ones1 / n1)
        q = _pick_min(h, np.flatnonzero(remaining), rng)
        remaining[q] = False
        order.append(q)
        cond[j - 1, 0] = min(max(ones0[q] / n0, lo), hi) if n0 else 0.5
        cond[j - 1, 1] = min(max(ones1[q] / n1, lo), hi) if n1 else 0.5
        prev = q
    return ChainModel(np.array(order), root_p, cond)


def mimic_sample_many(model: ChainModel, lam: int, rng: np.random.Generator) -> np.ndarray:
    """``lam`` samples; each row consumes ``n`` doubles in chain order."""
    n = model.n
    U = rng.random((lam, n))
    X = np.empty((lam, n), dtype=np.uint8)
    col = (U[:, 0] < model.root_p).astype(np.uint8)
    X[:, model.order[0]] = col
    for j in range(1, n):
        probs = model.cond_p[j - 1][col]
        col = (U[:, j] < probs).astype(np.uint8)
        X[:, model.order[j]] = col
    return X


def mimic_sample(model: ChainModel, rng: np.random.Generator) -> np.ndarray:
    return mimic_sample_many(model, 1, rng)[0]
