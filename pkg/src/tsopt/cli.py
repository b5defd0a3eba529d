"""Benchmark harness: run BO over methods and seeds, write trace and summary CSVs.

Example::

    python3 -m tsopt --func schwefel --dim 2 --method spectral-ts,ts-rf --runs 20 --iters 120 --out runs/
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bo import INNER, METHODS, BOConfig, BOTrace, run_bo
from .objectives import OBJECTIVES

__all__ = [
    "TRACE_COLUMNS",
    "TIMING_COLUMNS",
    "SUMMARY_COLUMNS",
    "build_parser",
    "parse_config_file",
    "resolve_args",
    "write_trace",
    "read_trace",
    "summarize",
    "run_experiment",
    "main",
]

log = logging.getLogger("tsopt")

TRACE_COLUMNS = ("run_id", "method", "iter", "x_star", "y", "y_min", "inner_value", "log10_regret")
TIMING_COLUMNS = ("run_id", "method", "iter", "inner_time_s", "cum_time_s")
SUMMARY_COLUMNS = ("method", "iter", "n_runs", "median", "q25", "q75")
# -inf regrets (exact hits) enter the summary statistics at this value
SUMMARY_FLOOR = -12.0

DEFAULT_ITERS = {2: 120, 10: 200}

# config-file key -> (argparse dest, type)
_CONFIG_KEYS = {
    "func": ("func", str),
    "dim": ("dim", int),
    "method": ("method", str),
    "inner": ("inner", str),
    "runs": ("runs", int),
    "iters": ("iters", int),
    "seed": ("seed", int),
    "out": ("out", str),
    "eta": ("eta", float),
    "mmax": ("mmax", int),
    "beta": ("beta", float),
    "rff-m": ("rff_m", int),
    "rff_m": ("rff_m", int),
    "freeze-hypers": ("freeze_hypers", None),
    "freeze_hypers": ("freeze_hypers", None),
    "workers": ("workers", int),
}


class UsageError(Exception):
    """Bad flags or config values; reported with exit status 2."""


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return format(v, ".17g")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsopt", description="GP-TS benchmark runner")
    p.add_argument("--func", choices=sorted(OBJECTIVES))
    p.add_argument("--dim", type=int)
    p.add_argument("--method", help=f"one or more of {', '.join(METHODS)} (comma separated)")
    p.add_argument("--inner", help=f"inner optimizer: {', '.join(INNER)}")
    p.add_argument("--runs", type=int)
    p.add_argument("--iters", type=int, help="BO iterations (default 120 for 2d, 200 for 10d)")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    p.add_argument("--out", help="output directory")
    p.add_argument("--eta", type=float)
    p.add_argument("--mmax", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--rff-m", dest="rff_m", type=int)
    p.add_argument("--freeze-hypers", dest="freeze_hypers", action="store_true", default=None)
    p.add_argument("--workers", type=int, help="parallel runs (processes)")
    p.add_argument("--config", help="file of `key = value` lines; flags override it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def parse_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected `key = value`")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            dest, typ = _CONFIG_KEYS[key]
            try:
                out[dest] = _parse_bool(value) if typ is None else typ(value)
            except ValueError as err:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {err}") from None
    return out


def resolve_args(ns: argparse.Namespace) -> dict:
    """Defaults < config file < command-line flags."""
    opts = dict(func="schwefel", dim=2, method="spectral-ts", inner="ours", runs=20, iters=None, seed=0,
                out="runs", eta=1e-16, mmax=1000, beta=4.0, rff_m=1000, freeze_hypers=False, workers=1)
    if ns.config:
        try:
            opts.update(parse_config_file(ns.config))
        except OSError as err:
            raise UsageError(f"cannot read config file: {err}") from None
    for key in opts:
        val = getattr(ns, key, None)
        if val is not None:
            opts[key] = val
    methods = [m.strip() for m in str(opts["method"]).split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method {', '.join(bad) or '(none)'}; valid methods: {', '.join(METHODS)}")
    opts["methods"] = methods
    if opts["inner"] == "random-multistart":
        opts["inner"] = "random"
    if opts["inner"] not in INNER:
        raise UsageError(f"unknown inner optimizer {opts['inner']!r}; valid: {', '.join(INNER)}")
    if opts["func"] not in OBJECTIVES:
        raise UsageError(f"unknown function {opts['func']!r}; valid: {', '.join(sorted(OBJECTIVES))}")
    if opts["iters"] is None:
        opts["iters"] = DEFAULT_ITERS.get(opts["dim"], 120)
    for key in ("dim", "runs", "workers", "mmax", "rff_m"):
        if opts[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    if opts["iters"] < 0:
        raise UsageError("--iters must be non-negative")
    return opts


def _configs(opts: dict) -> list[tuple[int, BOConfig]]:
    jobs = []
    for method in opts["methods"]:
        for r in range(opts["runs"]):
            cfg = BOConfig(objective=opts["func"], dim=opts["dim"], iterations=opts["iters"], method=method,
                           inner=opts["inner"], seed=opts["seed"] + r, m_max=opts["mmax"], eta=opts["eta"],
                           beta=opts["beta"], rff_m=opts["rff_m"], freeze_hypers=opts["freeze_hypers"])
            jobs.append((r, cfg))
    return jobs


def _stem(run_id: int, cfg: BOConfig) -> str:
    return f"{cfg.objective}{cfg.dim}d_{cfg.method}_{cfg.inner}_run{run_id:03d}"


def write_trace(path: Path, run_id: int, trace: BOTrace) -> tuple[Path, Path]:
    """Write the deterministic trace CSV and its wall-time sidecar."""
    method = trace.config.method
    path = Path(path)
    timing = path.with_name(path.stem + "_timing.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            w.writerow([run_id, method, row.iteration, ";".join(_fmt(v) for v in row.x_star), _fmt(row.y),
                        _fmt(row.y_min), _fmt(row.inner_value), _fmt(row.log_regret)])
    with open(timing, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for row in trace.rows:
            w.writerow([run_id, method, row.iteration, _fmt(row.inner_time), _fmt(row.cum_time)])
    return path, timing


def read_trace(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rec["run_id"] = int(rec["run_id"])
            rec["iter"] = int(rec["iter"])
            rec["x_star"] = tuple(float(v) for v in rec["x_star"].split(";"))
            for key in ("y", "y_min", "inner_value", "log10_regret"):
                rec[key] = float(rec[key])
            rows.append(rec)
    return rows


def summarize(traces: dict[str, list[np.ndarray]]) -> list[tuple]:
    """Per-method, per-iteration ``(method, iter, n, median, q25, q75)`` of log regret."""
    out = []
    for method, runs in traces.items():
        R = np.maximum(np.array(runs, dtype=float), SUMMARY_FLOOR)
        q25, med, q75 = np.percentile(R, [25, 50, 75], axis=0)
        for k in range(R.shape[1]):
            out.append((method, k, R.shape[0], med[k], q25[k], q75[k]))
    return out


def _run_job(job):
    run_id, cfg = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return run_id, run_bo(cfg)


def run_experiment(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * ns.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_args(ns)
        jobs = _configs(opts)
    except (UsageError, ValueError) as err:
        parser.print_usage(sys.stderr)
        print(f"tsopt: error: {err}", file=sys.stderr)
        return 2

    out = Path(opts["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        if opts["workers"] > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=opts["workers"]) as pool:
                results = list(pool.map(_run_job, jobs))
        else:
            results = [_run_job(job) for job in jobs]
        regrets: dict[str, list[np.ndarray]] = {m: [] for m in opts["methods"]}
        # merged single-threaded, in job order, so output never depends on scheduling
        for (run_id, trace), (_, cfg) in zip(results, jobs):
            path, _ = write_trace(out / f"{_stem(run_id, cfg)}.csv", run_id, trace)
            regrets[cfg.method].append(trace.regrets())
            log.info("wrote %s (final log10 regret %s)", path, _fmt(trace.rows[-1].log_regret))
        with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for method, k, n, med, q25, q75 in summarize(regrets):
                w.writerow([method, k, n, _fmt(med), _fmt(q25), _fmt(q75)])
    except Exception as err:  # report any runtime failure as exit 1
        print(f"tsopt: run failed: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_experiment())


if __name__ == "__main__":
    main()
