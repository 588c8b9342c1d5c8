"""Experiment plans, seeded parallel execution, CSV persistence and log-log SVG plots."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import traceback
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .algorithms import EDA_VARIANTS, OptimizerConfig, canonical_variant, run
from .diagnostics import recommend_parameters
from .errors import InvalidInputError
from .fitness import parse_fitness
from .stats import SummaryRow, summarize

CSV_HEADER = ["algorithm", "n", "mu", "lambda", "seed", "run_index", "budget", "evaluations",
              "success"]
TRACE_HEADER = ["algorithm", "n", "mu", "run_index", "iteration", "critical_block",
                "selection_relevant", "min_freq_right"]

FIGURE1_ALGORITHMS = ("opo_ea", "comma_ea", "comma_ga", "umda", "mimic")
FIGURE1_SIZES = (50, 100, 150, 200, 250, 300)
DESK_RUNS = 30
DESK_EDA_MAX_N = 150


def standard_config(variant: str, n: int) -> OptimizerConfig:
    """Parameters used for each algorithm in the DLB experiments."""
    v = canonical_variant(variant)
    ln = math.ceil(math.log(n))
    if v in EDA_VARIANTS:
        mu, lam, _ = recommend_parameters(n, "experiment")
        return OptimizerConfig(v, mu=mu, lam=lam)
    if v == "opo_ea":
        return OptimizerConfig(v)
    if v in ("comma_ea", "comma_ga"):
        return OptimizerConfig(v, mu=ln, lam=9 * ln, pc=0.5)
    if v == "opl_ea":
        return OptimizerConfig(v, mu=1, lam=math.ceil(math.sqrt(n)))
    return OptimizerConfig(v, mu=ln, lam=1)


def standard_budget(n: int) -> int:
    return 10 * n ** 3


@dataclass(frozen=True)
class Cell:
    config: OptimizerConfig
    n: int
    runs: int
    budget: int
    fitness: str = "dlb"

    def __post_init__(self):
        if self.runs < 1 or self.budget < 1 or self.n < 1:
            raise InvalidInputError("cells need n, runs and budget >= 1")
        parse_fitness(self.fitness).check_length(self.n)

    @property
    def key(self) -> tuple:
        return (self.config.variant, self.n, self.config.mu)


@dataclass(frozen=True)
class ExperimentPlan:
    cells: tuple
    name: str = "plan"
    master_seed: int = 0
    outputs: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        keys = [c.key for c in self.cells]
        if len(set(keys)) != len(keys):
            raise InvalidInputError("cells must be unique per (algorithm, n, mu)")

    @property
    def total_runs(self) -> int:
        return sum(c.runs for c in self.cells)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "master_seed": self.master_seed,
            "cells": [{"algorithm": c.config.variant, "fitness": c.fitness, "n": c.n,
                       "mu": c.config.mu, "lambda": c.config.lam, "chi": c.config.chi,
                       "pc": c.config.pc, "runs": c.runs, "budget": c.budget}
                      for c in self.cells],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentPlan":
        try:
            cells = []
            for c in doc["cells"]:
                n = int(c["n"])
                base = standard_config(c["algorithm"], n)
                cfg = OptimizerConfig(base.variant, mu=int(c.get("mu", base.mu)),
                                      lam=int(c.get("lambda", base.lam)),
                                      chi=float(c.get("chi", base.chi)),
                                      pc=float(c.get("pc", base.pc)))
                cells.append(Cell(cfg, n, int(c.get("runs", DESK_RUNS)),
                                  int(c.get("budget", standard_budget(n))),
                                  c.get("fitness", "dlb")))
            return cls(tuple(cells), doc.get("name", "plan"), int(doc.get("master_seed", 0)))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed plan document: {e!r}") from None


def load_plan(path) -> ExperimentPlan:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"{path}: {e}") from None
    return ExperimentPlan.from_json(doc)


def _check_sizes(n_values):
    for n in n_values:
        if n < 2 or n % 2:
            raise InvalidInputError(f"DLB sizes must be even and >= 2, got {n}")


def plan_figure1(n_values: Sequence[int] = FIGURE1_SIZES, runs: int = 100, master_seed: int = 0,
                 algorithms: Sequence[str] = FIGURE1_ALGORITHMS,
                 eda_max_n: Optional[int] = None) -> ExperimentPlan:
    """Run time versus n with the standard parameters and a ``10 n^3`` cutoff.

    ``eda_max_n`` drops EDA cells above that size (desk scale).
    """
    _check_sizes(n_values)
    cells = []
    for alg in algorithms:
        alg = canonical_variant(alg)
        for n in n_values:
            if eda_max_n is not None and alg in EDA_VARIANTS and n > eda_max_n:
                continue
            cells.append(Cell(standard_config(alg, n), n, runs, standard_budget(n)))
    return ExperimentPlan(tuple(cells), "figure1", master_seed)


def plan_figure1_desk(n_values: Sequence[int] = FIGURE1_SIZES, runs: int = DESK_RUNS,
                      master_seed: int = 0) -> ExperimentPlan:
    return replace(plan_figure1(n_values, runs, master_seed, eda_max_n=DESK_EDA_MAX_N),
                   name="figure1_desk")


def plan_figure2(n: int = 300, mu_exponents: Iterable[int] = range(1, 13), runs: int = 100,
                 master_seed: int = 0) -> ExperimentPlan:
    """UMDA with ``mu = 2^e`` and ``lambda = 12 mu`` at a fixed ``n``."""
    _check_sizes([n])
    cells = []
    for e in mu_exponents:
        if e < 1:
            raise InvalidInputError("mu exponents must be >= 1")
        mu = 2 ** e
        cells.append(Cell(OptimizerConfig("umda", mu=mu, lam=12 * mu), n, runs,
                          standard_budget(n)))
    return ExperimentPlan(tuple(cells), "figure2", master_seed)


def derive_seed(master_seed: int, algorithm: str, n: int, mu: int, run_index: int) -> int:
    """Stable 64-bit seed of one run."""
    key = f"{master_seed}|{algorithm}|{n}|{mu}|{run_index}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    n: int
    mu: int
    lam: int
    seed: int
    run_index: int
    budget: int
    evaluations: int
    success: bool
    error: Optional[str] = field(default=None, compare=False)
    trace: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.error is None and not 0 <= self.evaluations <= self.budget:
            raise InvalidInputError(
                f"evaluations {self.evaluations} outside [0, budget={self.budget}]")

    @property
    def sort_key(self) -> tuple:
        return (self.algorithm, self.n, self.mu, self.run_index)


def run_cell_once(cell: Cell, run_index: int, master_seed: int, trace: bool = False,
                  backend=None) -> RunRecord:
    cfg = cell.config
    seed = derive_seed(master_seed, cfg.variant, cell.n, cfg.mu, run_index)
    base = dict(algorithm=cfg.variant, n=cell.n, mu=cfg.mu, lam=cfg.lam, seed=seed,
                run_index=run_index, budget=cell.budget)
    try:
        rng = np.random.Generator(np.random.PCG64(seed))
        want = trace and cfg.variant in EDA_VARIANTS
        out = run(cfg, parse_fitness(cell.fitness), cell.n, cell.budget, rng,
                  trace=want, backend=backend)
    except Exception:  # reported as a failed record, never as a CSV row
        return RunRecord(evaluations=0, success=False, error=traceback.format_exc(), **base)
    rows = tuple(s.row() for s in out.trace) if out.trace is not None else None
    return RunRecord(evaluations=out.evaluations, success=out.success, trace=rows, **base)


def _task(args):
    return run_cell_once(*args)


def default_parallelism() -> int:
    try:
        return max(1, int(os.environ.get("EDABENCH_THREADS", "1")))
    except ValueError:
        raise InvalidInputError("EDABENCH_THREADS must be an integer") from None


def execute(plan: ExperimentPlan, parallelism: Optional[int] = None, *,
            trace: bool = False, backend=None) -> list[RunRecord]:
    """Run every cell of ``plan``; records come back sorted by
    ``(algorithm, n, mu, run_index)`` whatever the parallelism."""
    parallelism = default_parallelism() if parallelism is None else parallelism
    if parallelism < 1:
        raise InvalidInputError("parallelism must be at least 1")
    tasks = [(cell, r, plan.master_seed, trace, backend)
             for cell in plan.cells for r in range(cell.runs)]
    if parallelism == 1 or len(tasks) <= 1:
        records = [_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (parallelism * 8))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(_task, tasks, chunksize=chunk))
    return sorted(records, key=lambda r: r.sort_key)


def failed(records: Iterable[RunRecord]) -> list[RunRecord]:
    return [r for r in records if r.error is not None]


def _fmt_row(r: RunRecord) -> list:
    return [r.algorithm, r.n, r.mu, r.lam, r.seed, r.run_index, r.budget, r.evaluations,
            "true" if r.success else "false"]


def records_to_csv(records: Sequence[RunRecord]) -> str:
    bad = failed(records)
    if bad:
        raise InvalidInputError(f"{len(bad)} failed runs cannot be written as CSV rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(_fmt_row(r))
    return buf.getvalue()


def write_csv(records: Sequence[RunRecord], path) -> None:
    text = records_to_csv(records)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def parse_csv(text: str, source: str = "<csv>") -> list[RunRecord]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != CSV_HEADER:
        raise InvalidInputError(f"{source}: header {header!r} does not match "
                                f"{','.join(CSV_HEADER)!r}")
    out = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise InvalidInputError(f"{source}:{lineno}: expected {len(CSV_HEADER)} fields")
        alg, n, mu, lam, seed, idx, budget, evals, succ = row
        if succ not in ("true", "false"):
            raise InvalidInputError(f"{source}:{lineno}: success must be true or false")
        try:
            out.append(RunRecord(canonical_variant(alg), int(n), int(mu), int(lam), int(seed),
                                 int(idx), int(budget), int(evals), succ == "true"))
        except (ValueError, InvalidInputError) as e:
            raise InvalidInputError(f"{source}:{lineno}: {e}") from None
    return out


def read_csv(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        return parse_csv(fh.read(), str(path))


def write_trace_csv(records: Sequence[RunRecord], path) -> int:
    """Write EDA iteration traces; returns the number of rows."""
    count = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in records:
            for t, crit, rel, low in r.trace or ():
                w.writerow([r.algorithm, r.n, r.mu, r.run_index, t,
                            "" if crit is None else crit, "" if rel is None else rel,
                            "" if low is None else repr(low)])
                count += 1
    return count


def summarize_records(records: Iterable[RunRecord]) -> list[SummaryRow]:
    """One row per (algorithm, n, mu): quantiles of successful runs and the success ratio."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.algorithm, r.n, r.mu)].append(r)
    rows = []
    for (alg, n, mu), rs in sorted(groups.items()):
        rs.sort(key=lambda r: r.run_index)
        rows.append(summarize([r.evaluations for r in rs], [r.success for r in rs],
                              algorithm=alg, n=n, mu=mu, lam=rs[0].lam))
    return rows


# --- SVG -----------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_W, _H = 640, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 150, 20, 50


def _log_range(values):
    lo, hi = math.log10(min(values)), math.log10(max(values))
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def emit_svg_loglog(summary: Sequence[SummaryRow], style: str = "figure1",
                    title: Optional[str] = None) -> str:
    """Log-log plot of median evaluations with an interquartile band per algorithm.

    ``figure1`` puts n on the x axis; ``figure2`` puts mu there and labels
    every point with its success ratio.  Rows without successes are omitted.
    """
    if style not in ("figure1", "figure2"):
        raise InvalidInputError(f"unknown plot style {style!r}")
    if not summary:
        raise InvalidInputError("nothing to plot")
    xkey = "n" if style == "figure1" else "mu"
    series = defaultdict(list)
    for row in summary:
        if row.median is not None:
            series[row.algorithm].append((getattr(row, xkey), row))
    points = [(x, r) for s in series.values() for x, r in s]
    if not points:
        raise InvalidInputError("no successful cells to plot")
    x0, x1 = _log_range([x for x, _ in points])
    y0, y1 = _log_range([v for _, r in points for v in (r.q1, r.q3, r.median)])
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (math.log10(x) - x0) / (x1 - x0) * pw

    def py(y):
        return _TOP + ph - (math.log10(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
           f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    if title:
        out.append(f'<title>{escape(title)}</title>')
    for axis, (lo, hi) in (("x", (x0, x1)), ("y", (y0, y1))):
        for e in range(math.ceil(lo), math.floor(hi) + 1):
            if axis == "x":
                p = px(10.0 ** e)
                out.append(f'<line class="tick" x1="{p:.3f}" y1="{_TOP + ph}" x2="{p:.3f}" '
                           f'y2="{_TOP + ph + 5}" stroke="#333"/>')
                out.append(f'<text x="{p:.3f}" y="{_TOP + ph + 18}" text-anchor="middle">'
                           f'1e{e}</text>')
            else:
                p = py(10.0 ** e)
                out.append(f'<line class="tick" x1="{_LEFT - 5}" y1="{p:.3f}" x2="{_LEFT}" '
                           f'y2="{p:.3f}" stroke="#333"/>')
                out.append(f'<text x="{_LEFT - 8}" y="{p + 4:.3f}" text-anchor="end">'
                           f'1e{e}</text>')
    out.append(f'<text x="{_LEFT + pw / 2}" y="{_H - 10}" text-anchor="middle">'
               f'{"n" if style == "figure1" else "mu"}</text>')
    out.append(f'<text transform="translate(16 {_TOP + ph / 2}) rotate(-90)" '
               f'text-anchor="middle">fitness evaluations</text>')
    for i, (alg, pts) in enumerate(sorted(series.items())):
        pts.sort(key=lambda p: p[0])
        color = _COLORS[i % len(_COLORS)]
        upper = [f"{px(x):.6f},{py(r.q3):.6f}" for x, r in pts]
        lower = [f"{px(x):.6f},{py(r.q1):.6f}" for x, r in reversed(pts)]
        out.append(f'<path class="band" data-algorithm="{escape(alg)}" '
                   f'd="M {" L ".join(upper + lower)} Z" fill="{color}" fill-opacity="0.2" '
                   f'stroke="none"/>')
        coords = " ".join(f"{px(x):.6f},{py(r.median):.6f}" for x, r in pts)
        out.append(f'<polyline class="median" data-algorithm="{escape(alg)}" points="{coords}" '
                   f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, r in pts:
            out.append(f'<circle cx="{px(x):.6f}" cy="{py(r.median):.6f}" r="2.5" '
                       f'fill="{color}"/>')
            if style == "figure2":
                out.append(f'<text class="ratio" x="{px(x):.3f}" y="{py(r.q3) - 6:.3f}" '
                           f'text-anchor="middle">{r.success_ratio:.2f}</text>')
        ly = _TOP + 14 + 16 * i
        out.append(f'<line x1="{_W - _RIGHT + 12}" y1="{ly - 4}" x2="{_W - _RIGHT + 32}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{_W - _RIGHT + 38}" y="{ly}">{escape(alg)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
