"""DeceptiveLeadingBlocks and friends.

Bit strings are 1-d ``numpy`` arrays of ``uint8`` holding 0/1.  Fitness values
are plain Python integers so that selection ties are exact.

Block and position indices in the public API are 1-based where they name
positions of the problem (neutral positions); internally everything is
0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import InvalidInputError

KIND_DLB = "dlb"
KIND_LEADING_ONES = "leading_ones"
KIND_CONSTANT = "constant"
KIND_CUSTOM = "custom"


def bits(value) -> np.ndarray:
    """Coerce ``"0110"``, a sequence of ints or an array into a bit string."""
    if isinstance(value, str):
        if any(c not in "01" for c in value):
            raise InvalidInputError(f"not a bit string: {value!r}")
        return np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(value)
    if arr.ndim != 1:
        raise InvalidInputError("bit strings are one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise InvalidInputError("bit strings hold only 0 and 1")
    return arr.astype(np.uint8, copy=False)


def _check_blocks(n: int, k: int) -> None:
    if k < 1:
        raise InvalidInputError(f"block size must be positive, got {k}")
    if n % k:
        raise InvalidInputError(f"block size {k} does not divide length {n}")


def deceptive_block(block, k: int = 2) -> int:
    """Score of a single block: ``k`` for all ones, else (#zeros - 1)."""
    block = bits(block)
    if k < 2 or block.size != k:
        raise InvalidInputError(f"expected a block of length {k} >= 2, got {block.size}")
    ones = int(block.sum())
    if ones == k:
        return k
    return (k - ones) - 1


def leading_ones(x) -> int:
    x = bits(x)
    if x.all():
        return int(x.size)
    return int(np.argmin(x))


def prefix_count(x, k: int = 2) -> int:
    """Number of leading blocks that consist of ones only."""
    x = bits(x)
    _check_blocks(x.size, k)
    return leading_ones(x) // k


def dlb(x, k: int = 2) -> int:
    """DeceptiveLeadingBlocks with block size ``k``.

    Only the first non-optimal block is inspected, so the cost is
    proportional to the optimal prefix.
    """
    x = bits(x)
    n = x.size
    _check_blocks(n, k)
    lo = leading_ones(x)
    if lo == n:
        return n
    start = (lo // k) * k
    zeros = k - int(x[start:start + k].sum())
    return start + zeros - 1


def dlb_naive(x, k: int = 2) -> int:
    """Full-scan DLB: score every block, then sum up to one past the prefix."""
    x = bits(x)
    n = x.size
    _check_blocks(n, k)
    scores = [deceptive_block(x[i:i + k], k) for i in range(0, n, k)]
    prefix = 0
    for s in scores:
        if s != k:
            break
        prefix += 1
    if prefix == len(scores):
        return n
    return sum(scores[:prefix + 1])


def dlb_many(X: np.ndarray, k: int = 2) -> np.ndarray:
    """Row-wise :func:`dlb` for a 2-d array of bit strings."""
    X = np.asarray(X, dtype=np.uint8)
    lam, n = X.shape
    _check_blocks(n, k)
    lo = leading_ones_many(X)
    out = np.full(lam, n, dtype=np.int64)
    open_rows = np.flatnonzero(lo < n)
    if open_rows.size:
        start = (lo[open_rows] // k) * k
        cols = start[:, None] + np.arange(k)
        ones = X[open_rows[:, None], cols].sum(axis=1, dtype=np.int64)
        out[open_rows] = start + (k - ones) - 1
    return out


def leading_ones_many(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.uint8)
    lam, n = X.shape
    if n == 0:
        return np.zeros(lam, dtype=np.int64)
    lo = np.argmin(X, axis=1).astype(np.int64)
    lo[X.all(axis=1)] = n
    return lo


@dataclass(frozen=True)
class FitnessFunction:
    """A named, deterministic fitness function.

    ``neutral_positions`` are 1-based indices removed from the input before the
    base function sees it.  ``kind`` tells the compiled backend which kernel to
    use; ``custom`` functions only run on the pure-Python backend.
    """

    kind: str = KIND_DLB
    block_size: int = 2
    neutral_positions: frozenset = field(default_factory=frozenset)
    func: Optional[Callable] = field(default=None, compare=False)
    custom_optimum: Optional[int] = None
    label: str = ""
    declares_optimum: bool = True

    def __post_init__(self):
        if self.kind not in (KIND_DLB, KIND_LEADING_ONES, KIND_CONSTANT, KIND_CUSTOM):
            raise InvalidInputError(f"unknown fitness kind {self.kind!r}")
        if self.kind == KIND_CUSTOM and self.func is None:
            raise InvalidInputError("custom fitness needs a callable")
        if self.block_size < 1:
            raise InvalidInputError("block size must be positive")
        if any(p < 1 for p in self.neutral_positions):
            raise InvalidInputError("neutral positions are 1-based")

    @classmethod
    def custom(cls, func: Callable, optimum: Optional[int] = None, label: str = "custom"):
        return cls(kind=KIND_CUSTOM, func=func, custom_optimum=optimum, label=label)

    @property
    def name(self) -> str:
        if self.kind == KIND_DLB:
            base = "dlb" if self.block_size == 2 else f"dlb_k:{self.block_size}"
        elif self.kind == KIND_CUSTOM:
            base = self.label or "custom"
        else:
            base = self.kind
        if self.neutral_positions:
            pos = ",".join(str(p) for p in sorted(self.neutral_positions))
            return f"neutral:{base}:{pos}"
        return base

    def __str__(self) -> str:
        return self.name

    @property
    def native(self) -> bool:
        return self.kind != KIND_CUSTOM

    def kept_positions(self, n: int) -> np.ndarray:
        """0-based indices the base function is evaluated on."""
        if self.neutral_positions and max(self.neutral_positions) > n:
            raise InvalidInputError(
                f"neutral position {max(self.neutral_positions)} out of range for n={n}")
        mask = np.ones(n, dtype=bool)
        mask[[p - 1 for p in self.neutral_positions]] = False
        return np.flatnonzero(mask).astype(np.intp)

    def effective_length(self, n: int) -> int:
        return n - len(self.neutral_positions)

    def check_length(self, n: int) -> None:
        m = self.kept_positions(n).size
        if self.kind == KIND_DLB:
            _check_blocks(m, self.block_size)

    def optimum(self, n: int) -> Optional[int]:
        """Known maximum on ``{0,1}^n``, or ``None`` when no optimum is declared.

        Runs stop at the first evaluation of the declared optimum; without one
        they always spend their whole budget.
        """
        if not self.declares_optimum:
            return None
        if self.kind in (KIND_DLB, KIND_LEADING_ONES):
            return self.effective_length(n)
        if self.kind == KIND_CUSTOM:
            return self.custom_optimum
        return None

    def _base(self, x: np.ndarray) -> int:
        if self.kind == KIND_DLB:
            return dlb(x, self.block_size)
        if self.kind == KIND_LEADING_ONES:
            return leading_ones(x)
        if self.kind == KIND_CONSTANT:
            return 0
        return self.func(x)

    def __call__(self, x) -> int:
        x = bits(x)
        if self.neutral_positions:
            x = x[self.kept_positions(x.size)]
        return self._base(x)

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.uint8)
        if self.neutral_positions:
            X = X[:, self.kept_positions(X.shape[1])]
        if self.kind == KIND_DLB:
            return dlb_many(X, self.block_size)
        if self.kind == KIND_LEADING_ONES:
            return leading_ones_many(X)
        if self.kind == KIND_CONSTANT:
            return np.zeros(X.shape[0], dtype=np.int64)
        return np.array([self.func(row) for row in X])


DLB = FitnessFunction()
LEADING_ONES = FitnessFunction(kind=KIND_LEADING_ONES)
CONSTANT = FitnessFunction(kind=KIND_CONSTANT)


def with_neutral_bits(f: FitnessFunction, positions: Iterable[int],
                      n: Optional[int] = None) -> FitnessFunction:
    """Copy of ``f`` that ignores the given 1-based positions."""
    positions = frozenset(int(p) for p in positions)
    if any(p < 1 for p in positions) or (n is not None and any(p > n for p in positions)):
        raise InvalidInputError(f"neutral positions {sorted(positions)} out of range")
    return FitnessFunction(kind=f.kind, block_size=f.block_size,
                           neutral_positions=f.neutral_positions | positions,
                           func=f.func, custom_optimum=f.custom_optimum, label=f.label,
                           declares_optimum=f.declares_optimum)


def without_optimum(f: FitnessFunction) -> FitnessFunction:
    """Copy of ``f`` whose runs never stop early; used to observe a fixed horizon."""
    return replace(f, declares_optimum=False)


def parse_fitness(spec: str) -> FitnessFunction:
    """Parse a fitness id: ``dlb``, ``dlb_k:<k>``, ``leading_ones``, ``constant``
    or ``neutral:<id>:<comma-separated 1-based positions>``."""
    spec = spec.strip()
    if spec.startswith("neutral:"):
        inner, sep, pos = spec[len("neutral:"):].rpartition(":")
        if not sep or not inner:
            raise InvalidInputError(f"malformed neutral fitness id {spec!r}")
        try:
            positions = [int(p) for p in pos.split(",") if p]
        except ValueError:
            raise InvalidInputError(f"malformed neutral positions in {spec!r}") from None
        return with_neutral_bits(parse_fitness(inner), positions)
    if spec == "dlb":
        return DLB
    if spec.startswith("dlb_k:"):
        try:
            k = int(spec[len("dlb_k:"):])
        except ValueError:
            raise InvalidInputError(f"malformed block size in {spec!r}") from None
        if k < 2:
            raise InvalidInputError("DLB block size must be at least 2")
        return FitnessFunction(kind=KIND_DLB, block_size=k)
    if spec == "leading_ones":
        return LEADING_ONES
    if spec == "constant":
        return CONSTANT
    raise InvalidInputError(f"unknown fitness id {spec!r}")
