"""End-to-end acceptance suite.

Each test records a one-line verdict in ``conftest.ACCEPTANCE_RESULTS``; the
terminal summary prints one PASS/FAIL line per criterion.  Runs are seeded, so
outcomes are reproducible.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

import conftest
from conftest import gen
from edabench import cli, harness
from edabench.algorithms import OptimizerConfig
from edabench.diagnostics import neutral_drift_probe, recommend_parameters, theorem_budget
from edabench.fitness import dlb, dlb_many
from edabench.stats import (BinomialSpec, binom_cdf, binom_lower_tail_bound, binom_pmf, binom_sf,
                            binom_upper_tail_bound, chernoff_lower_tail_bound,
                            ea_dlb_expected_time_closed, ea_dlb_expected_time_recurrence,
                            fit_power_law, whp_threshold)
from oracles import all_strings, binom_pmf_exact, dlb_literal, ea_expected_iterations_markov

pytestmark = pytest.mark.acceptance


def record(cid, name, ok, detail):
    conftest.ACCEPTANCE_RESULTS[cid] = (bool(ok), name, detail)
    assert ok, f"criterion {cid} ({name}) failed: {detail}"


def ea_cell(n, runs, budget):
    return harness.Cell(OptimizerConfig("opo_ea"), n, runs, budget)


@pytest.fixture(scope="module")
def desk_sweep():
    t0 = time.perf_counter()
    recs = harness.execute(harness.plan_figure1_desk(master_seed=2024))
    return recs, time.perf_counter() - t0


def test_c01_dlb_exhaustive():
    checked = 0
    for n in range(2, 17, 2):
        X = np.array(list(all_strings(n)))
        fast = dlb_many(X)
        lit = np.array([dlb_literal(x) for x in X])
        assert np.array_equal(fast, lit), n
        assert all(dlb(x) == v for x, v in zip(X[:: max(1, len(X) // 512)], lit[:: max(1, len(X) // 512)]))
        checked += len(X)
    record(1, "DLB oracle equivalence", True, f"{checked} strings, even n <= 16, exact")


def test_c02_expected_time():
    worst = max(abs(ea_dlb_expected_time_closed(n) - ea_dlb_expected_time_recurrence(n))
                / ea_dlb_expected_time_recurrence(n) for n in range(2, 2001, 2))
    markov = ea_expected_iterations_markov(2, dlb)
    plan = harness.ExperimentPlan((ea_cell(10, 10_000, 10**6), ea_cell(20, 10_000, 10**6)),
                                  "expected-time", 11)
    recs = harness.execute(plan)
    errs = {}
    for n in (10, 20):
        T = [r.evaluations - 1 for r in recs if r.n == n]
        assert all(r.success for r in recs if r.n == n)
        errs[n] = abs(np.mean(T) / ea_dlb_expected_time_closed(n) - 1)
    ok = worst <= 1e-9 and abs(markov - 3) < 1e-12 and max(errs.values()) <= 0.05
    record(2, "(1+1) EA expected time", ok,
           f"max rel gap {worst:.1e}; MC rel err n=10 {errs[10]:.3f}, n=20 {errs[20]:.3f}; "
           f"n=2 Markov {markov:.12g}")


def test_c03_umda_within_theorem_budget():
    n = 50
    mu, lam, _ = recommend_parameters(n, "experiment")
    budget = theorem_budget(n, lam)
    cell = harness.Cell(OptimizerConfig("umda", mu=mu, lam=lam), n, 30, budget)
    recs = harness.execute(harness.ExperimentPlan((cell,), "umda-theorem", 3))
    hits = sum(r.success for r in recs)
    record(3, "UMDA within lambda(n/2 + 2e ln n)", hits >= 27,
           f"{hits}/30 runs at n=50 (mu={mu}, lambda={lam}, budget={budget})")


def test_c04_figure1_slopes(desk_sweep):
    recs, elapsed = desk_sweep
    rows = harness.summarize_records(recs)
    slopes = {}
    for alg in harness.FIGURE1_ALGORITHMS:
        pts = [(r.n, r.median) for r in rows if r.algorithm == alg and r.median is not None]
        slopes[alg] = fit_power_law(pts).exponent
    ok = (all(2.8 <= slopes[a] <= 3.2 for a in ("opo_ea", "comma_ea", "comma_ga"))
          and 2.0 <= slopes["umda"] <= 2.5 and abs(slopes["mimic"] - slopes["umda"]) <= 0.2)
    detail = ", ".join(f"{a} {b:.3f}" for a, b in slopes.items())
    record(4, "Figure-1 exponents (desk)", ok, f"{detail}; sweep {elapsed:.0f}s")


def test_c05_mimic_magnitude(desk_sweep):
    recs, _ = desk_sweep
    row = [r for r in harness.summarize_records(recs) if r.algorithm == "mimic" and r.n == 100][0]
    assert row.runs == 30
    ratio = row.median / 6e5
    record(5, "MIMIC median at n=100", 0.5 <= ratio <= 2,
           f"median {row.median:.0f} ({ratio:.2f} x 6e5), {row.successes}/30 successes")


def test_c06_whp_lower_bound():
    n = 60
    threshold, _ = whp_threshold(n)
    recs = harness.execute(harness.ExperimentPlan((ea_cell(n, 200, 10 * n**3),), "whp", 6))
    early = sum(r.evaluations - 1 <= threshold for r in recs)
    record(6, "(1+1) EA rarely beats n^3/(16e)", early <= 10,
           f"{early}/200 runs within {threshold:.0f} iterations; min {min(r.evaluations for r in recs)}")


def test_c07_figure2_regimes():
    plan = harness.plan_figure2(100, range(1, 13), runs=30, master_seed=7)
    rows = {r.mu: r for r in harness.summarize_records(harness.execute(plan))}
    low = rows[2].success_ratio
    mid = {mu: rows[mu].success_ratio for mu in (32, 64, 128)}
    high = (rows[2048].success_ratio, rows[4096].success_ratio)
    ok = low >= 0.9 and min(mid.values()) <= 0.2 and min(high) >= 0.9
    ratios = " ".join(f"{mu}:{rows[mu].success_ratio:.2f}" for mu in sorted(rows))
    record(7, "Figure-2 regimes at n=100", ok, ratios)


def test_c08_bound_suite():
    checks, bad = cli.verify_bound_grid(200)
    pmf_err = 0.0
    for k, p in [(50, Fraction(1, 10)), (200, Fraction(1, 2)), (200, Fraction(9, 10))]:
        for m in range(0, k + 1, 7):
            pmf_err = max(pmf_err, abs(binom_pmf(BinomialSpec(k, float(p)), m)
                                       - float(binom_pmf_exact(k, p, m))))
    boundary = []
    for k in (5, 40, 200):
        for p in (0.1, 0.5, 0.9):
            spec = BinomialSpec(k, p)
            if k >= spec.mean + 1:
                boundary.append(binom_upper_tail_bound(spec, k) == binom_sf(spec, k))
            if spec.mean >= 1:
                boundary.append(binom_lower_tail_bound(spec, 0) == binom_cdf(spec, 0))
            boundary.append(chernoff_lower_tail_bound(spec.mean, 0.0) == 1.0)
    ok = not bad and pmf_err <= 1e-12 and all(boundary)
    record(8, "Binomial bound suite", ok,
           f"{checks} instances, {len(bad)} violations, pmf err {pmf_err:.1e}, "
           f"{sum(boundary)}/{len(boundary)} boundary equalities")


def test_c09_neutral_drift():
    rep = neutral_drift_probe(5000, 100, 0.4, 100, gen(9))
    threshold = 0.963 - 0.05
    record(9, "Neutral frequency stays in band", rep.empirical_stay_rate >= threshold,
           f"stay rate {rep.empirical_stay_rate:.3f} (bound {rep.theoretical_bound:.3f}, "
           f"threshold {threshold:.3f})")


def test_c10_sweep_determinism(tmp_path, capsys):
    outs = []
    for i, threads in enumerate((1, 2, 4, 1)):
        path = tmp_path / f"s{i}.csv"
        code = cli.main(["sweep", "--n", "10", "20", "--runs", "4", "--seed", "31",
                         "--threads", str(threads), "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    ok = len(set(outs)) == 1 and len(outs[0]) > 0
    record(10, "Sweep CSV determinism", ok,
           f"{len(outs)} sweeps at parallelism 1/2/4/1, {len(outs[0])} bytes, "
           f"{'identical' if ok else 'differ'}")
