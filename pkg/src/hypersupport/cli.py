"""Experiment runner: generate bodies, sweep selection + verification, emit reports.

Subcommands::

    generate --kind box --n 3 --thinness 1e-3 --seed 7 --out body.json
    run --config experiment.json
    sweep --n 2 3 --s 1e-1 1e-3 --trials 10 --s0 paper

Exit codes: 0 when every algorithm row meets its bound and no invariant
check failed, 1 otherwise, 2 for usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .body import FacetTable, VPolytope, load_body, ray_boundary, save_body
from .centering import well_center
from .errors import InputError, InvariantViolation, VerificationError
from .selector import select_hyperplane
from .verify import (ALGORITHM, EXTRA_KINDS, FAMILY_KINDS, ORACLE_BEST, CandidateSet,
                     check_bound, interval, naive_strategies, oracle_best_ratio,
                     thin_family, well_centering_residuals)

COLUMNS = ("n", "trial_id", "body_kind", "thinness", "s", "s0", "strategy", "ratio",
           "bound", "depth", "case_terminated", "perturbed", "wall_ms")
SEED_ENV = "HYPERSUPPORT_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class ExperimentConfig:
    n_list: list = field(default_factory=lambda: [2, 3, 4, 5])
    trials: int = 10
    s_list: list = field(default_factory=lambda: [1e-1, 1e-3, 1e-6])
    s0: object = "paper"                 # "paper" -> 1/(2n), or a number
    kinds: list = field(default_factory=lambda: list(FAMILY_KINDS))
    thinness: list = field(default_factory=lambda: [1.0, 1e-2, 1e-4, 1e-6])
    body_files: list = field(default_factory=list)
    seed: int | None = None
    output: str | None = None
    format: str = "csv"
    plotdata: str | None = None
    trace_dir: str | None = None
    random_directions: int = 8
    oracle_budget: int = 4096
    bound_rtol: float = 1e-6
    oracle_atol: float = 1e-9
    centering_tol: float = 1e-6
    workers: int = 1
    keep_traces: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def s0_for(self, n: int) -> float:
        if self.s0 == "paper":
            return 1.0 / (2 * n)
        return float(self.s0)

    def validate(self) -> None:
        if self.seed is None:
            env = os.environ.get(SEED_ENV)
            if env is None:
                raise InputError(f"no seed given and {SEED_ENV} is unset")
            try:
                self.seed = int(env)
            except ValueError:
                raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InputError("seed must be a nonnegative integer")
        if self.format not in ("csv", "json"):
            raise InputError("format must be csv or json")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InputError("trials must be a positive integer")
        if self.random_directions < 0 or self.oracle_budget < 0 or self.workers < 1:
            raise InputError("random_directions and oracle_budget must be >= 0, workers >= 1")
        if not self.s_list:
            raise InputError("s_list is empty")
        if self.s0 != "paper":
            try:
                s0 = float(self.s0)
            except (TypeError, ValueError):
                raise InputError(f"s0 must be 'paper' or a number, got {self.s0!r}") from None
            if not 0.0 < s0 < 1.0:
                raise InputError("s0 must lie in (0, 1)")
        bad_kinds = [k for k in self.kinds if k not in FAMILY_KINDS + EXTRA_KINDS]
        if bad_kinds:
            raise InputError(f"unknown body kinds: {bad_kinds}")
        if not self.body_files:
            if not self.n_list or any(not isinstance(n, int) or n < 1 for n in self.n_list):
                raise InputError("n_list must hold positive integers")
            if not self.kinds or not self.thinness:
                raise InputError("kinds and thinness must be nonempty")
            if any(not 0.0 < t <= 1.0 for t in self.thinness):
                raise InputError("thinness values must lie in (0, 1]")
            dims = self.n_list
        else:
            dims = [_load_file(path).dim for path in self.body_files]
        for n in dims:
            s0 = self.s0_for(n)
            bad = [s for s in self.s_list if not 0.0 <= s <= s0]
            if bad:
                raise InputError(f"s values {bad} are outside [0, s0 = {s0!r}] for n = {n}")


def _load_file(path) -> VPolytope:
    try:
        return load_body(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read body file {path}: {exc}") from exc


@dataclass
class Instance:
    n: int
    trial: int
    kind: str
    thinness: float
    body: VPolytope
    direction_seed: list


@dataclass
class Failure:
    instance: str
    message: str
    trace: str | None = None


def build_instances(cfg: ExperimentConfig) -> list:
    """Bodies to sweep, each seeded from (seed, n, trial) alone."""
    out = []
    if cfg.body_files:
        for i, path in enumerate(cfg.body_files):
            body = _load_file(path)
            out.append(Instance(body.dim, i, "file", float("nan"), body, [cfg.seed, body.dim, i]))
        return out
    for n in cfg.n_list:
        for t in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, n, t])
            body_seed = int(rng.integers(2**31))
            if n == 1:
                kind, thin = "interval", 1.0
                body = interval(float(10.0 ** rng.uniform(-3, 3)))
            else:
                kind = cfg.kinds[t % len(cfg.kinds)]
                thin = float(cfg.thinness[(t // len(cfg.kinds)) % len(cfg.thinness)])
                body = thin_family(kind, n, thin, body_seed)
            out.append(Instance(n, t, kind, thin, body, [cfg.seed, n, t, 1]))
    return out


def _rows_for(inst, trial_id, s, s0, reports, sel, timings):
    rows = []
    for rep in reports:
        algo = rep.strategy == ALGORITHM
        rows.append({
            "n": inst.n, "trial_id": trial_id, "body_kind": inst.kind,
            "thinness": inst.thinness, "s": s, "s0": s0, "strategy": rep.strategy,
            "ratio": rep.ratio, "bound": rep.bound,
            "depth": sel.trace.depth if algo else 0,
            "case_terminated": sel.trace.case_terminated if algo else "",
            "perturbed": sel.trace.perturbed if algo else False,
            "wall_ms": timings[rep.strategy],
        })
    return rows


def run_instance(inst: Instance, cfg: ExperimentConfig):
    """Rows, failures and (trial_id, SelectionTrace) pairs for one body.

    Traces are kept only when ``cfg.trace_dir`` or ``cfg.keep_traces`` is set.
    """
    rows, failures, traces = [], [], []
    label = f"n={inst.n} trial={inst.trial} kind={inst.kind} thinness={inst.thinness!r}"
    s0 = cfg.s0_for(inst.n)
    try:
        frame, fb = well_center(inst.body)
        outer, inner = well_centering_residuals(fb, frame.semi_axes, seed=inst.trial)
        if outer > cfg.centering_tol or inner > cfg.centering_tol:
            failures.append(Failure(label, f"well-centring residuals {outer!r}, {inner!r}"))
        facets = FacetTable(fb)
        cands = CandidateSet(fb, cfg.oracle_budget, inst.trial, facets)
    except (InputError, RuntimeError) as exc:
        failures.append(Failure(label, f"setup failed: {exc}"))
        return rows, failures, traces

    rng = np.random.default_rng(inst.direction_seed)
    dirs = np.vstack([fb.vertices, rng.normal(size=(cfg.random_directions, inst.n))])
    a = frame.semi_axes
    for d_idx, d in enumerate(dirs):
        if not np.any(d):
            continue
        p = ray_boundary(fb, d)
        for s_idx, s in enumerate(cfg.s_list):
            trial_id = f"{inst.trial:05d}-{d_idx:03d}-{s_idx}"
            where = f"{label} direction={d_idx} s={s!r}"
            y = (1.0 - s) * p
            sel = None
            try:
                t0 = time.perf_counter()
                sel = select_hyperplane(fb, a, y, s0, facets=facets)
                algo = check_bound(fb, a, y, s0, sel, facets)
                t1 = time.perf_counter()
                naive = naive_strategies(fb, y, cands, s0, sel.trace.initial_plane)
                t2 = time.perf_counter()
                extra = [algo.normal] + [r.normal for r in naive]
                oracle = oracle_best_ratio(fb, y, cands, s0, extra)
                t3 = time.perf_counter()
            except (InvariantViolation, VerificationError, InputError, RuntimeError) as exc:
                trace = getattr(exc, "trace", None) or (sel.trace if sel else None)
                failures.append(Failure(where, f"{type(exc).__name__}: {exc}",
                                        trace.to_json() if trace is not None else None))
                continue
            reports = [algo, *naive, oracle]
            timings = {ALGORITHM: 1e3 * (t1 - t0), ORACLE_BEST: 1e3 * (t3 - t2)}
            timings.update({r.strategy: 1e3 * (t2 - t1) / 3 for r in naive})
            rows.extend(_rows_for(inst, trial_id, s, s0, reports, sel, timings))
            if cfg.trace_dir or cfg.keep_traces:
                traces.append((trial_id, sel.trace))
            if algo.ratio > algo.bound * (1.0 + cfg.bound_rtol):
                failures.append(Failure(
                    where, f"bound violated: ratio {algo.ratio!r} > bound {algo.bound!r}",
                    sel.trace.to_json()))
            for rep in reports[:-1]:
                if oracle.ratio > rep.ratio + cfg.oracle_atol:
                    failures.append(Failure(
                        where, f"oracle {oracle.ratio!r} above {rep.strategy} {rep.ratio!r}"))
    return rows, failures, traces


def _run_one(args):
    return run_instance(*args)


@dataclass
class RunResult:
    rows: list
    failures: list


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    instances = build_instances(cfg)
    jobs = [(inst, cfg) for inst in instances]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    rows, failures = [], []
    for inst, (r, f, traces) in zip(instances, results):
        rows.extend(r)
        failures.extend(f)
        if cfg.trace_dir and traces:
            tdir = Path(cfg.trace_dir)
            tdir.mkdir(parents=True, exist_ok=True)
            with open(tdir / f"traces_n{inst.n}_t{inst.trial:05d}.jsonl", "w") as fh:
                for trial_id, trace in traces:
                    record = {"trial_id": trial_id, "trace": json.loads(trace.to_json())}
                    fh.write(json.dumps(record) + "\n")
    rows.sort(key=lambda r: (r["n"], r["trial_id"], r["strategy"]))
    return RunResult(rows, failures)


# ---------------------------------------------------------------- emission

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(column: str, text: str):
    if column in ("n", "depth"):
        return int(text)
    if column == "perturbed":
        return text == "true"
    if column in ("trial_id", "body_kind", "strategy", "case_terminated"):
        return text
    return float(text)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise InputError(f"unexpected CSV header {header}")
    return [{c: _parse_cell(c, v) for c, v in zip(COLUMNS, line)} for line in reader]


def _json_value(value):
    # JSON has no NaN; thinness of file bodies is written as null
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def rows_to_json(rows) -> str:
    return json.dumps([{c: _json_value(row[c]) for c in COLUMNS} for row in rows], indent=1)


def rows_from_json(text: str) -> list:
    data = json.loads(text)
    return [{c: (float("nan") if row[c] is None else row[c]) for c in COLUMNS} for row in data]


def plot_series(rows) -> list:
    """Per (n, body_kind): the sorted s values and worst ratio per strategy."""
    worst = {}
    bounds = {}
    for row in rows:
        key = (row["n"], row["body_kind"])
        cell = worst.setdefault(key, {}).setdefault(row["strategy"], {})
        cell[row["s"]] = max(cell.get(row["s"], -math.inf), row["ratio"])
        bounds.setdefault(key, {})[row["s"]] = row["bound"]
    series = []
    for (n, kind) in sorted(worst):
        s_vals = sorted(bounds[(n, kind)])
        series.append({
            "n": n, "body_kind": kind, "s": s_vals,
            "bound": [bounds[(n, kind)][s] for s in s_vals],
            "worst_ratio": {strat: [vals.get(s) for s in s_vals]
                            for strat, vals in sorted(worst[(n, kind)].items())},
        })
    return series


def loglog_slope(s_vals, ratios) -> float:
    """Least-squares slope of log ratio against log s over the positive pairs."""
    pts = [(math.log(s), math.log(r)) for s, r in zip(s_vals, ratios)
           if s > 0 and r is not None and r > 0]
    if len(pts) < 2:
        raise InputError("need two positive points for a slope")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def emit(rows, fmt: str = "csv", output=None, plotdata=None) -> None:
    if not rows:
        raise InputError("report is empty")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    if plotdata:
        Path(plotdata).write_text(json.dumps({"series": plot_series(rows)}, indent=1) + "\n")


def _report_failures(failures, trace_dir) -> None:
    first = failures[0]
    print(f"FAILED: {len(failures)} problem(s); first at {first.instance}: {first.message}",
          file=sys.stderr)
    if first.trace is None:
        return
    if trace_dir:
        path = Path(trace_dir) / "first_failure.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(first.trace)
        print(f"trace written to {path}", file=sys.stderr)
    else:
        print(first.trace, file=sys.stderr)


def execute(cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg)
    if result.rows:
        emit(result.rows, cfg.format, cfg.output, cfg.plotdata)
    if result.failures:
        _report_failures(result.failures, cfg.trace_dir)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- argparse

def _parse_s0(text: str):
    if text == "paper":
        return "paper"
    if text.startswith("fixed:"):
        try:
            return float(text[len("fixed:"):])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError("expected 'paper' or 'fixed:<value>'")


def _add_output_flags(p):
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--output", help="report path (default: stdout)")
    p.add_argument("--plotdata", help="write per-(n, kind) worst-ratio series here")
    p.add_argument("--trace-dir", help="write selection traces here")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypersupport", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a thin-family body as JSON")
    g.add_argument("--kind", required=True, choices=FAMILY_KINDS + EXTRA_KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--thinness", type=float, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run an experiment described by a JSON config")
    r.add_argument("--config", required=True)
    _add_output_flags(r)

    w = sub.add_parser("sweep", help="run an experiment configured by flags")
    w.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    w.add_argument("--s", type=float, nargs="+", default=[1e-1, 1e-3, 1e-6])
    w.add_argument("--trials", type=int, default=10)
    w.add_argument("--s0", type=_parse_s0, default="paper")
    w.add_argument("--kinds", nargs="+", default=list(FAMILY_KINDS))
    w.add_argument("--thinness", type=float, nargs="+", default=[1.0, 1e-2, 1e-4, 1e-6])
    w.add_argument("--body", dest="body_files", nargs="+", default=[])
    w.add_argument("--seed", type=int)
    w.add_argument("--random-directions", type=int, default=8)
    w.add_argument("--oracle-budget", type=int, default=4096)
    _add_output_flags(w)
    return parser


def _overrides(args) -> dict:
    out = {}
    for key in ("format", "output", "plotdata", "trace_dir", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            seed = args.seed
            if seed is None and os.environ.get(SEED_ENV) is not None:
                seed = int(os.environ[SEED_ENV])
            save_body(thin_family(args.kind, args.n, args.thinness, seed), args.out)
            return EXIT_OK
        if args.command == "run":
            try:
                data = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read config {args.config}: {exc}") from exc
            if isinstance(data, dict):
                data.update(_overrides(args))
            cfg = ExperimentConfig.from_dict(data)
        else:
            data = {"n_list": args.n, "s_list": args.s, "trials": args.trials,
                    "s0": args.s0, "kinds": args.kinds, "thinness": args.thinness,
                    "body_files": args.body_files, "seed": args.seed,
                    "random_directions": args.random_directions,
                    "oracle_budget": args.oracle_budget}
            data.update(_overrides(args))
            cfg = ExperimentConfig.from_dict(data)
        return execute(cfg)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
