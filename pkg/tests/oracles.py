"""Independent reference computations used as test oracles.

Nothing here imports the package's algorithms; everything is derived from
first principles with exact or brute-force arithmetic.
"""
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np


def db_literal(b1, b2):
    """Block score: 2 for 11, else number of zeros minus one."""
    if b1 == 1 and b2 == 1:
        return 2
    zeros = int(b1 == 0) + int(b2 == 0)
    return zeros - 1


def prefix_literal(x):
    """Sum over i of the Iverson bracket [all blocks j <= i score 2]."""
    n = len(x)
    total = 0
    for i in range(1, n // 2 + 1):
        total += int(all(db_literal(x[2 * j - 2], x[2 * j - 1]) == 2 for j in range(1, i + 1)))
    return total


def dlb_literal(x):
    n = len(x)
    pre = prefix_literal(x)
    if pre == n // 2:
        return n
    return sum(db_literal(x[2 * i - 2], x[2 * i - 1]) for i in range(1, pre + 2))


def all_strings(n):
    return (np.array(bits, dtype=np.uint8) for bits in product((0, 1), repeat=n))


def ea_expected_iterations_markov(n, fitness):
    """Exact expected number of (1+1) EA iterations (initial evaluation excluded)
    until the maximum of ``fitness`` is evaluated, from a uniform random start,
    with mutation rate 1/n.  Solves the absorbing-chain linear system over all
    2^n states.
    """
    states = list(all_strings(n))
    vals = np.array([fitness(s) for s in states])
    opt = vals.max()
    N = len(states)
    ints = np.array([int("".join(map(str, s)), 2) for s in states])
    # transition x -> x xor mask with probability r^|mask| (1-r)^(n-|mask|)
    r = 1.0 / n
    masks = np.arange(N)
    flips = np.array([bin(m).count("1") for m in masks])
    pmask = r ** flips * (1 - r) ** (n - flips)
    A = np.eye(N)
    b = np.ones(N)
    index = {v: i for i, v in enumerate(ints)}
    for i in range(N):
        if vals[i] == opt:
            A[i] = 0
            A[i, i] = 1
            b[i] = 0
            continue
        for m in masks:
            j = index[ints[i] ^ m]
            if vals[j] == opt:
                continue  # absorbed after this iteration
            target = j if vals[j] >= vals[i] else i
            A[i, target] -= pmask[m]
    h = np.linalg.solve(A, b)
    return float(h.mean())


def binom_pmf_exact(k, p: Fraction, m) -> Fraction:
    return comb(k, m) * p ** m * (1 - p) ** (k - m)


def binom_cdf_exact(k, p: Fraction, m) -> Fraction:
    return sum((binom_pmf_exact(k, p, j) for j in range(m + 1)), Fraction(0))
