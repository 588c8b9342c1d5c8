"""UMDA, MIMIC and evolutionary algorithms on DeceptiveLeadingBlocks."""
from ._backend import DEFAULT_BACKEND, NATIVE_AVAILABLE
from .algorithms import (OptimizerConfig, RunOutcome, run, run_comma_selection, run_mimic,
                         run_one_plus_one_ea, run_plus_selection, run_umda,
                         standard_bit_mutation, uniform_crossover)
from .errors import InvalidInputError
from .fitness import (CONSTANT, DLB, LEADING_ONES, FitnessFunction, deceptive_block, dlb,
                      leading_ones, parse_fitness, prefix_count, with_neutral_bits)

__version__ = "0.1.0"
