"""Run DLB experiments, formulas and checks from the command line.

Exit status is 0 on success, 2 on invalid input or usage errors and 1 when
runs fail or a check does not hold.
"""
from __future__ import annotations

import argparse
import sys
from collections import defaultdict

from . import harness, stats
from .algorithms import OptimizerConfig, VARIANTS
from .diagnostics import recommend_parameters
from .errors import InvalidInputError
from .fitness import parse_fitness

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInputError(f"{self.prog}: {message}")


def _common(p, *, sizes=True):
    if sizes:
        p.add_argument("--n", type=int, nargs="+", help="problem size(s)")
    p.add_argument("--runs", type=int, help="independent runs per cell")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--budget", type=int, help="evaluation budget (default 10 n^3)")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--threads", type=int, help="worker processes (default $EDABENCH_THREADS or 1)")
    p.add_argument("--config", help="JSON experiment plan; replaces the generated plan")
    p.add_argument("--trace", help="also write EDA iteration traces to this CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="edabench", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a single cell")
    _common(p)
    p.add_argument("--algorithm", choices=sorted(
        a for names in VARIANTS.values() for a in names))
    p.add_argument("--fitness", default="dlb")
    p.add_argument("--mu", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--chi", type=float, default=1.0, help="mutation rate is chi / n")
    p.add_argument("--pc", type=float, default=0.5, help="crossover probability (comma_ga)")

    p = sub.add_parser("sweep", help="run time versus n for the standard roster")
    _common(p)
    p.add_argument("--desk", action="store_true",
                   help=f"{harness.DESK_RUNS} runs and EDA sizes up to {harness.DESK_EDA_MAX_N}")
    p.add_argument("--algorithms", nargs="+", default=list(harness.FIGURE1_ALGORITHMS))

    p = sub.add_parser("mu-sweep", help="UMDA run time versus mu at fixed n")
    _common(p)
    p.add_argument("--exponents", type=int, nargs="+", default=list(range(1, 13)),
                   help="mu = 2^e for each exponent e (default 1..12)")

    p = sub.add_parser("advise", help="UMDA parameters for DLB")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("experiment", "theorem"), default="experiment")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--zeta", type=float, default=0.5)

    p = sub.add_parser("expected-ea", help="expected (1+1) EA iterations on DLB")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--detail", action="store_true",
                   help="also print the phase-sum value and the high-probability threshold")

    p = sub.add_parser("verify-bounds", help="check binomial tail bounds against exact tails")
    p.add_argument("--kmax", type=int, default=100)

    p = sub.add_parser("analyze", help="power-law fits of median run times")
    p.add_argument("csv")
    p.add_argument("--min-n", type=int, default=0, help="ignore sizes below this")

    p = sub.add_parser("plot", help="render a results CSV as a log-log SVG")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--style", choices=("figure1", "figure2"), default="figure1")
    p.add_argument("--title")
    return ap


def _plan(args):
    if args.config:
        return harness.load_plan(args.config)
    if args.command == "run":
        if args.algorithm is None:
            raise InvalidInputError("run needs --algorithm or --config")
        if not args.n or len(args.n) != 1:
            raise InvalidInputError("run needs exactly one --n")
        n = args.n[0]
        base = harness.standard_config(args.algorithm, n)
        cfg = OptimizerConfig(base.variant, mu=args.mu or base.mu, lam=args.lam or base.lam,
                              chi=args.chi, pc=args.pc)
        cell = harness.Cell(cfg, n, args.runs or 1, args.budget or harness.standard_budget(n),
                            parse_fitness(args.fitness).name)
        return harness.ExperimentPlan((cell,), "run", args.seed)
    if args.command == "sweep":
        sizes = args.n or harness.FIGURE1_SIZES
        if args.desk:
            plan = harness.plan_figure1(sizes, args.runs or harness.DESK_RUNS, args.seed,
                                        args.algorithms, eda_max_n=harness.DESK_EDA_MAX_N)
        else:
            plan = harness.plan_figure1(sizes, args.runs or 100, args.seed, args.algorithms)
    else:
        if args.n and len(args.n) != 1:
            raise InvalidInputError("mu-sweep takes a single --n")
        plan = harness.plan_figure2(args.n[0] if args.n else 300, args.exponents,
                                    args.runs or 100, args.seed)
    if args.budget:
        plan = harness.ExperimentPlan(
            tuple(harness.Cell(c.config, c.n, c.runs, args.budget, c.fitness) for c in plan.cells),
            plan.name, plan.master_seed)
    return plan


def _print_summary(records, stream):
    for row in harness.summarize_records(records):
        med = "-" if row.median is None else f"{row.median:.0f}"
        iqr = "-" if row.q1 is None else f"[{row.q1:.0f}, {row.q3:.0f}]"
        print(f"{row.algorithm:9s} n={row.n:<5d} mu={row.mu:<6d} runs={row.runs:<4d} "
              f"success={row.success_ratio:.2f} median={med} iqr={iqr}", file=stream)


def _cmd_experiment(args) -> int:
    plan = _plan(args)
    threads = args.threads if args.threads is not None else harness.default_parallelism()
    records = harness.execute(plan, threads, trace=bool(args.trace))
    bad = harness.failed(records)
    ok = [r for r in records if r.error is None]
    if args.out:
        harness.write_csv(ok, args.out)
        _print_summary(ok, sys.stdout)
    else:
        sys.stdout.write(harness.records_to_csv(ok))
    if args.trace:
        harness.write_trace_csv(ok, args.trace)
    for r in bad:
        print(f"run failed: {r.algorithm} n={r.n} mu={r.mu} run={r.run_index}\n{r.error}",
              file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def _cmd_advise(args) -> int:
    mu, lam, budget = recommend_parameters(args.n, args.mode, args.delta, args.eps, args.zeta)
    print(f"μ={mu} λ={lam} budget={budget}")
    return EXIT_OK


def _cmd_expected(args) -> int:
    for n in args.n:
        closed = stats.ea_dlb_expected_time_closed(n)
        prefix = f"n={n} " if len(args.n) > 1 or args.detail else ""
        line = f"{prefix}{closed:.12g}"
        if args.detail:
            thr, fail = stats.whp_threshold(n)
            line += (f" recurrence={stats.ea_dlb_expected_time_recurrence(n):.12g}"
                     f" whp_threshold={thr:.6g} failure_bound={fail:.6g}")
        print(line)
    return EXIT_OK


def verify_bound_grid(kmax: int = 100):
    """Check every bound on ``k = 5, 10, ..., kmax``, ``p = 0.1, ..., 0.9``.

    Returns ``(checks, violations)`` where violations lists failing cases.
    """
    checks, bad = 0, []
    for k in range(5, kmax + 1, 5):
        for p10 in range(1, 10):
            spec = stats.BinomialSpec(k, p10 / 10)
            E = spec.mean
            for m in range(k + 1):
                if m >= E + 1 - 1e-9:
                    checks += 1
                    if stats.binom_upper_tail_bound(spec, m) < stats.binom_sf(spec, m):
                        bad.append(("upper", k, spec.p, m))
                if m <= E - 1 + 1e-9:
                    checks += 1
                    if stats.binom_lower_tail_bound(spec, m) < stats.binom_cdf(spec, m):
                        bad.append(("lower", k, spec.p, m))
                if m <= E:
                    delta = 1.0 - m / E
                    checks += 1
                    if stats.chernoff_lower_tail_bound(E, delta) < stats.binom_cdf(spec, m):
                        bad.append(("chernoff", k, spec.p, m))
    return checks, bad


def _cmd_verify(args) -> int:
    if args.kmax < 5:
        raise InvalidInputError("--kmax must be at least 5")
    checks, bad = verify_bound_grid(args.kmax)
    print(f"checked {checks} bound instances, {len(bad)} violations")
    for case in bad:
        print("violation: %s k=%d p=%.1f m=%d" % case)
    return EXIT_FAIL if bad else EXIT_OK


def _cmd_analyze(args) -> int:
    records = harness.read_csv(args.csv)
    rows = [r for r in harness.summarize_records(records) if r.n >= args.min_n]
    for row in rows:
        med = "-" if row.median is None else f"{row.median:.0f}"
        print(f"# {row.algorithm} n={row.n} mu={row.mu} success={row.success_ratio:.2f} "
              f"median={med}")
    by_alg = defaultdict(list)
    for row in rows:
        if row.median is not None:
            by_alg[row.algorithm].append((row.n, row.median))
    print("algorithm,exponent,scale,residual,points")
    for alg, pts in sorted(by_alg.items()):
        if len({n for n, _ in pts}) < 2:
            print(f"# {alg}: fewer than two sizes with successful runs, no fit")
            continue
        fit = stats.fit_power_law(pts)
        print(f"{alg},{fit.exponent:.4f},{fit.scale:.6g},{fit.residual:.3g},{len(pts)}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    summary = harness.summarize_records(harness.read_csv(args.csv))
    svg = harness.emit_svg_loglog(summary, args.style, args.title)
    with open(args.out, "w") as fh:
        fh.write(svg)
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_experiment, "sweep": _cmd_experiment, "mu-sweep": _cmd_experiment,
    "advise": _cmd_advise, "expected-ea": _cmd_expected, "verify-bounds": _cmd_verify,
    "analyze": _cmd_analyze, "plot": _cmd_plot,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except InvalidInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
