import math

import numpy as np
import pytest

from conftest import gen
from edabench.algorithms import OptimizerConfig, run_mimic, run_umda
from edabench.diagnostics import (IterationSnapshot, TraceRecorder, critical_block_index,
                                  drift_bound, neutral_band_violations, neutral_drift_probe,
                                  recommend_parameters, selection_relevant_block,
                                  theorem_constants)
from edabench.errors import InvalidInputError
from edabench.fitness import DLB
from edabench.models import ChainModel, FrequencyVector, Population


def pop_of(*rows):
    X = np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)
    return Population.evaluate(X, DLB)


def test_critical_block_examples():
    n = 6
    top = 1 - 1 / n
    assert critical_block_index(np.full(n, top), n) is None
    assert critical_block_index(FrequencyVector.uniform(n), n) == 1
    assert critical_block_index([top, top, 0.7, top, 0.5, 0.5], n) == 2
    with pytest.raises(InvalidInputError):
        critical_block_index(np.full(5, 0.5), 5)


def test_critical_block_needs_saturated_prefix():
    # first block above the margin sum but not at it: no prefix-saturated block qualifies
    assert critical_block_index([0.9, 0.95, 0.5, 0.5], 4) is None
    assert critical_block_index(ChainModel.uniform(4), 4) == 1


def test_selection_relevant_examples():
    assert selection_relevant_block(pop_of("1111", "1111", "0000"), 2) is None
    assert selection_relevant_block(pop_of("1100", "1100", "0000"), 2) == 2
    assert selection_relevant_block(pop_of("0011", "0101", "0110"), 1) == 1
    with pytest.raises(InvalidInputError):
        selection_relevant_block(pop_of("0011"), 2)


def snap(t, p, rel):
    return IterationSnapshot(t, p, None, rel, None)


def test_band_violations():
    untouched = [snap(t, np.full(8, 0.5), 1) for t in range(5)]
    assert neutral_band_violations(untouched, 0.5, 10) == []
    p = np.full(8, 0.5)
    p[5] = 0.2
    assert neutral_band_violations([snap(3, p, 1)], 0.5, 10) == [(3, 6)]
    assert neutral_band_violations([snap(3, p, 1)], 0.5, 2) == []
    # position 6 lies in block 3: exempt once that block is selection-relevant
    assert neutral_band_violations([snap(3, p, 3)], 0.5, 10) == []
    clamped = [snap(0, np.array([1 / 8, 7 / 8] * 4), 1)]
    assert neutral_band_violations(clamped, 1 - 1e-12, 10) == []
    with pytest.raises(InvalidInputError):
        neutral_band_violations([], 1.0, 10)


def test_drift_probe_trivial_cases():
    assert neutral_drift_probe(50, 0, 0.1, 5, gen(0)).empirical_stay_rate == 1.0
    r = neutral_drift_probe(10, 20, 0.5, 5, gen(0))
    assert r.empirical_stay_rate == 1.0 and r.violation_iteration is None


def test_drift_probe_small_mu_drifts():
    r = neutral_drift_probe(4, 30, 0.1, 20, gen(1))
    assert r.empirical_stay_rate < 0.5
    assert r.violation_iteration >= 1
    assert r.theoretical_bound < 0


def test_drift_bound_values():
    assert drift_bound(5000, 100, 0.4) == pytest.approx(1 - 2 * math.exp(-4))
    assert drift_bound(10, 0, 0.1) == 1.0


def test_recommend_experiment_mode():
    assert tuple(recommend_parameters(100, "experiment")) == (1382, 16584, 10**7)


def test_recommend_theorem_mode_constants():
    c_mu, c_lam = theorem_constants(0.5, 0.5, 0.5)
    assert c_mu == 64
    assert c_lam == pytest.approx(0.5 * 0.75 * 0.0625 / (16 * math.e))
    assert c_lam == pytest.approx(5.39e-4, rel=1e-3)


@pytest.mark.parametrize("n", range(50, 301, 25))
def test_recommend_theorem_preconditions(n):
    for d, e, z in [(0.5, 0.5, 0.5), (0.1, 0.3, 0.9), (0.9, 0.05, 0.2)]:
        c_mu, c_lam = theorem_constants(d, e, z)
        mu, lam, budget = recommend_parameters(n, "theorem", d, e, z)
        assert mu >= c_mu * n * math.log(n)
        assert mu / lam <= c_lam
        assert mu / (lam - 1) > c_lam
        assert budget >= lam * (n / 2 + 2 * math.e * math.log(n))


def test_recommend_rejects_bad_input():
    for args in [(100, "theorem", 0, 0.5, 0.5), (100, "theorem", 0.5, 1.0, 0.5), (100, "other")]:
        with pytest.raises(InvalidInputError):
            recommend_parameters(*args)


def test_recorder_on_umda_run():
    n, mu = 20, 200
    cfg = OptimizerConfig("umda", mu=mu, lam=12 * mu)
    out = run_umda(DLB, cfg, n, 10**6, gen(5), trace=True)
    assert out.success
    for s in out.trace:
        if s.critical_block is not None:
            # every frequency left of the critical block is at the upper margin
            assert np.allclose(s.frequencies[: 2 * (s.critical_block - 1)], 1 - 1 / n)
            assert s.min_frequency_right_of_critical == pytest.approx(
                s.frequencies[2 * s.critical_block:].min() if 2 * s.critical_block < n else None)
        assert s.selection_relevant is None or 1 <= s.selection_relevant <= n // 2
    assert [s.t for s in out.trace] == list(range(out.iterations))


def test_recorder_on_mimic_uses_marginals():
    rec = TraceRecorder(8, 4)
    out = run_mimic(DLB, OptimizerConfig("mimic", mu=4, lam=16), 8, 2000, gen(1), rec)
    assert len(rec.snapshots) == out.iterations
    assert np.all(rec.snapshots[0].frequencies == 0.5)


def test_selection_relevant_moves_right():
    n, mu = 50, 587
    cfg = OptimizerConfig("umda", mu=mu, lam=12 * mu)
    steps = ok = 0
    for seed in range(30):
        trace = run_umda(DLB, cfg, n, 10 * n ** 3, gen(seed), trace=True).trace
        rel = [s.selection_relevant for s in trace]
        for a, b in zip(rel, rel[1:]):
            steps += 1
            ok += a is None or b is None or b >= a
    assert ok >= 0.95 * steps


def test_snapshot_is_immutable():
    s = IterationSnapshot(0, [0.5, 0.5], 1, 1, 0.5)
    with pytest.raises(ValueError):
        s.frequencies[0] = 1.0
    assert s.row() == (0, 1, 1, 0.5)
