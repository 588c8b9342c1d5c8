"""The optimizer roster under one run contract.

Every run counts fitness evaluations, including those of the initial
individuals, and stops the moment an optimum is evaluated or the budget is
spent.  Given the same configuration, fitness, budget and seed, a run is
reproducible and identical on both backends.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _pure
from ._backend import kernels
from .errors import InvalidInputError
from .fitness import FitnessFunction, bits
from .models import ChainModel, FrequencyVector, Population

# canonical id -> accepted aliases
VARIANTS = {
    "umda": ("umda",),
    "mimic": ("mimic",),
    "opo_ea": ("opo_ea", "one_plus_one_ea"),
    "comma_ea": ("comma_ea",),
    "comma_ga": ("comma_ga",),
    "opl_ea": ("opl_ea", "one_plus_lambda_ea"),
    "mpo_ea": ("mpo_ea", "mu_plus_one_ea"),
}
_ALIASES = {alias: canon for canon, names in VARIANTS.items() for alias in names}
EDA_VARIANTS = ("umda", "mimic")
COMMA_VARIANTS = ("comma_ea", "comma_ga")
PLUS_VARIANTS = ("opl_ea", "mpo_ea")

# EA traces are capped; long runs only keep their first generations.
TRACE_LIMIT = 100_000
UNLIMITED = 2**62


def canonical_variant(name: str) -> str:
    try:
        return _ALIASES[name]
    except KeyError:
        raise InvalidInputError(f"unknown algorithm {name!r}; expected one of {sorted(_ALIASES)}") from None


@dataclass(frozen=True)
class OptimizerConfig:
    """Algorithm id and parameters.

    ``chi`` is the mutation-rate numerator: the rate is ``chi / n``.  ``pc``
    is the crossover probability of ``comma_ga`` and is ignored elsewhere.
    """

    variant: str
    mu: int = 1
    lam: int = 1
    chi: float = 1.0
    pc: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "variant", canonical_variant(self.variant))
        if self.mu < 1 or self.lam < 1:
            raise InvalidInputError("mu and lambda must be positive")
        if self.variant in EDA_VARIANTS + COMMA_VARIANTS and self.mu > self.lam:
            raise InvalidInputError(f"{self.variant} needs mu <= lambda")
        if self.variant in EDA_VARIANTS and self.mu < 2:
            raise InvalidInputError(f"{self.variant} needs mu >= 2")
        if self.chi <= 0:
            raise InvalidInputError("mutation numerator chi must be positive")
        if not 0.0 <= self.pc <= 1.0:
            raise InvalidInputError("crossover probability must lie in [0, 1]")

    def mutation_rate(self, n: int) -> float:
        rate = self.chi / n
        if not 0.0 < rate < 1.0:
            raise InvalidInputError(f"mutation rate {rate} outside (0, 1)")
        return rate


@dataclass(eq=False)
class RunOutcome:
    success: bool
    evaluations: int
    iterations: int
    best: np.ndarray
    best_fitness: int
    trace: Optional[list] = None

    def __eq__(self, other):
        if not isinstance(other, RunOutcome):
            return NotImplemented
        return (self.success == other.success and self.evaluations == other.evaluations
                and self.iterations == other.iterations and self.best_fitness == other.best_fitness
                and np.array_equal(self.best, other.best) and _trace_eq(self.trace, other.trace))


def _trace_eq(a, b):
    if a is None or b is None:
        return a is b
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))


def standard_bit_mutation(x, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Copy of ``x`` with every bit flipped independently with probability ``rate``."""
    if not 0.0 < rate <= 1.0:
        raise InvalidInputError(f"mutation rate {rate} outside (0, 1]")
    return _pure.mutate(bits(x), rate, rng)


def uniform_crossover(a, b, rng: np.random.Generator) -> np.ndarray:
    a, b = bits(a), bits(b)
    if a.size != b.size:
        raise InvalidInputError(f"parents differ in length ({a.size} vs {b.size})")
    return _pure.crossover(a, b, rng)


def _check_budget(budget):
    if budget < 1:
        raise InvalidInputError(f"budget must be at least 1, got {budget}")


def _trace_buffer(trace, budget):
    return np.empty(min(budget, TRACE_LIMIT), dtype=np.int64) if trace else None


def _ea_outcome(res, buf):
    evals, iters, success, best, best_f, nt = res
    trace = [int(v) for v in buf[:nt]] if buf is not None else None
    return RunOutcome(bool(success), int(evals), int(iters), np.asarray(best, dtype=np.uint8),
                      int(best_f), trace)


def run_one_plus_one_ea(f: FitnessFunction, n: int, budget: int, rng: np.random.Generator,
                        *, chi: float = 1.0, trace: bool = False, backend=None) -> RunOutcome:
    """(1+1) EA: accept the mutant iff it is at least as good.

    With ``trace`` the current fitness after each iteration is recorded.
    """
    _check_budget(budget)
    rate = OptimizerConfig("opo_ea", chi=chi).mutation_rate(n)
    buf = _trace_buffer(trace, budget)
    return _ea_outcome(kernels(f, backend).one_plus_one(f, n, rate, budget, rng, buf), buf)


def run_comma_selection(f: FitnessFunction, config: OptimizerConfig, n: int, budget: int,
                        rng: np.random.Generator, *, trace: bool = False, backend=None) -> RunOutcome:
    """(mu, lambda) EA, or GA when ``config.variant == 'comma_ga'``.

    Offspring pick a uniform parent; in the GA, with probability ``pc`` an
    offspring is instead the uniform crossover of two uniform parents.  Every
    offspring is then mutated.  The trace holds the best fitness of each new
    population.
    """
    _check_budget(budget)
    if config.variant not in COMMA_VARIANTS:
        raise InvalidInputError(f"{config.variant} is not a comma-selection algorithm")
    pc = config.pc if config.variant == "comma_ga" else 0.0
    buf = _trace_buffer(trace, budget)
    res = kernels(f, backend).comma(f, n, config.mu, config.lam, config.mutation_rate(n), pc,
                                    budget, rng, buf)
    return _ea_outcome(res, buf)


def run_plus_selection(f: FitnessFunction, config: OptimizerConfig, n: int, budget: int,
                       rng: np.random.Generator, *, trace: bool = False, backend=None) -> RunOutcome:
    """Elitist (mu + lambda) EA; the trace holds the best-so-far fitness per generation."""
    _check_budget(budget)
    buf = _trace_buffer(trace, budget)
    res = kernels(f, backend).plus(f, n, config.mu, config.lam, config.mutation_rate(n),
                                   budget, rng, buf)
    return _ea_outcome(res, buf)


Hook = Callable[[int, Population, object], None]


def _run_eda(variant, f, config, n, budget, rng, hook, trace, backend):
    _check_budget(budget)
    if config.variant != variant:
        raise InvalidInputError(f"config is for {config.variant}, not {variant}")
    f.check_length(n)
    mu, lam = config.mu, config.lam
    recorder = None
    if trace:
        from .diagnostics import TraceRecorder
        recorder = TraceRecorder(n, mu)
    hooks = [h for h in (hook, recorder) if h is not None]

    k = kernels(f, backend)
    X = np.zeros((lam, n), dtype=np.uint8)
    F = np.zeros(lam, dtype=np.int64)
    best = np.zeros(n, dtype=np.uint8)
    best_f = -1
    if variant == "umda":
        p = np.full(n, 0.5)
    else:
        order, root, cond = np.arange(n, dtype=np.intp), np.array([0.5]), np.full((n - 1, 2), 0.5)
    max_gens = 1 if hooks else UNLIMITED
    evals = gens = 0
    while True:
        if variant == "umda":
            e, g, success, _, best_f = k.umda(f, n, mu, lam, p, budget - evals, rng, max_gens,
                                              X, F, best, best_f)
        else:
            e, g, success, _, best_f = k.mimic(f, n, mu, lam, order, root, cond, budget - evals,
                                               rng, max_gens, X, F, best, best_f)
        evals += e
        gens += g
        if hooks and g:
            model = FrequencyVector(p) if variant == "umda" else ChainModel(order, root[0], cond)
            pop = Population(X.copy(), F.copy())
            for h in hooks:
                h(gens - 1, pop, model)
        if success or evals >= budget:
            break
    return RunOutcome(bool(success), int(evals), int(gens), best.copy(), int(best_f),
                      recorder.snapshots if recorder is not None else None)


def run_umda(f: FitnessFunction, config: OptimizerConfig, n: int, budget: int,
             rng: np.random.Generator, hook: Optional[Hook] = None, *, trace: bool = False,
             backend=None) -> RunOutcome:
    """UMDA starting from all frequencies 1/2.

    ``hook(t, population, frequencies)`` is called after every completed
    iteration ``t`` (0-based) with the sampled population and the updated,
    clamped frequency vector.  A generation cut short by an optimum or by the
    budget is not reported.
    """
    return _run_eda("umda", f, config, n, budget, rng, hook, trace, backend)


def run_mimic(f: FitnessFunction, config: OptimizerConfig, n: int, budget: int,
              rng: np.random.Generator, hook: Optional[Hook] = None, *, trace: bool = False,
              backend=None) -> RunOutcome:
    """MIMIC starting from the identity chain with all probabilities 1/2; see :func:`run_umda`."""
    return _run_eda("mimic", f, config, n, budget, rng, hook, trace, backend)


def run(config: OptimizerConfig, f: FitnessFunction, n: int, budget: int,
        rng: np.random.Generator, *, trace: bool = False, backend=None) -> RunOutcome:
    """Dispatch on ``config.variant``."""
    v = config.variant
    if v == "umda":
        return run_umda(f, config, n, budget, rng, trace=trace, backend=backend)
    if v == "mimic":
        return run_mimic(f, config, n, budget, rng, trace=trace, backend=backend)
    if v == "opo_ea":
        return run_one_plus_one_ea(f, n, budget, rng, chi=config.chi, trace=trace, backend=backend)
    if v in COMMA_VARIANTS:
        return run_comma_selection(f, config, n, budget, rng, trace=trace, backend=backend)
    return run_plus_selection(f, config, n, budget, rng, trace=trace, backend=backend)
