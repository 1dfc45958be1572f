"""Command line entry point: ``batmodel explore`` and ``batmodel simulate``.

Exit status is 0 on success, 1 when a verified property is violated and 2 for
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import config as scenario
from .explorer import PROPERTIES, explore, format_trace
from .protocol import ConfigError
from .sim import run_batch

log = logging.getLogger("batmodel")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

PER_RUN_COLUMNS = [
    "run", "t", "bidir_misses", "no_route", "best_hop_total",
    "route_errors", "avg_buffer", "max_buffer", "buffer_errors",
]
RUN_SUMMARY_COLUMNS = ["run", "mean_occupancy", "wrapped", "max_head_wait", "events"]


def _sample_row(sample) -> dict:
    return {
        "t": sample.t,
        "bidir_misses": sample.bidir_misses,
        "no_route": sample.no_route,
        "best_hop_total": sample.best_hop_total,
        "route_errors": sample.route_errors,
        "avg_buffer": sample.avg_buffer,
        "max_buffer": sample.max_buffer,
        "buffer_errors": sample.buffer_error_total,
    }


def _write_table(path: Path, columns: list[str], rows: list[dict], fmt: str):
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps(rows, indent=1) + "\n")
    else:
        path = path.with_suffix(".csv")
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return path


def _prepare_out(directory: str) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError("output", f"cannot write to {out}: {exc.strerror or exc}") from None
    return out


def explore_command(cfg: scenario.ScenarioConfig) -> int:
    params, topo = cfg.validate()
    budgets = cfg.explore_budgets(topo.n)
    out = _prepare_out(cfg.output)
    start = time.perf_counter()
    report = explore(params, topo, budgets, reduction=cfg.reduction, state_cap=cfg.state_cap)
    elapsed = time.perf_counter() - start

    summary = report.summary()
    summary.update(
        interpretation=params.interpretation.value,
        topology=cfg.topology,
        budgets=list(budgets),
        reduction=cfg.reduction,
        seconds=round(elapsed, 2),
        quiescent_route_tables=len(report.quiescent_tables),
    )
    traces = {prop: format_trace(steps) for prop, steps in report.violations.items()}
    for prop, text in traces.items():
        (out / f"trace_{prop}.txt").write_text(text + "\n")
    if cfg.format == "json":
        summary["counterexamples"] = {p: t.splitlines() for p, t in traces.items()}
        (out / "explore_report.json").write_text(json.dumps(summary, indent=1) + "\n")
    else:
        rows = [
            {"property": p, "passed": p not in report.violations, "trace_steps": len(report.violations.get(p, ()))}
            for p in PROPERTIES
        ]
        _write_table(out / "explore_report", ["property", "passed", "trace_steps"], rows, "csv")

    print(
        f"{params.interpretation.value}: {report.states_visited} states, {report.transitions} transitions, "
        f"{report.quiescent_states} quiescent, {elapsed:.1f}s" + ("" if report.complete else " (INCOMPLETE: state cap hit)")
    )
    for prop in PROPERTIES:
        verdict = "FAIL" if prop in report.violations else "pass"
        print(f"  {prop:22s} {verdict}")
    for prop, text in traces.items():
        print(f"counterexample for {prop} ({len(report.violations[prop])} steps):")
        print(text)
    if not report.complete:
        return EXIT_VIOLATION
    return EXIT_VIOLATION if report.violations else EXIT_OK


def simulate_command(cfg: scenario.ScenarioConfig) -> int:
    params, topo = cfg.validate()
    timed = cfg.timed_config()
    out = _prepare_out(cfg.output)
    start = time.perf_counter()
    batch = run_batch(params, topo, timed, workers=cfg.workers)
    elapsed = time.perf_counter() - start

    per_run = [{"run": d.run_index, **_sample_row(s)} for d in batch.details for s in d.samples]
    agg = []
    for row in batch.aggregate:
        row = dict(row)
        row["buffer_errors"] = row.pop("buffer_error_total")
        agg.append(row)
    summary = [
        {
            "run": d.run_index,
            "mean_occupancy": d.mean_occupancy,
            "wrapped": d.wrapped,
            "max_head_wait": d.max_head_wait,
            "events": d.events,
        }
        for d in batch.details
    ]
    paths = [
        _write_table(out / "per_run", PER_RUN_COLUMNS, per_run, cfg.format),
        _write_table(out / "aggregate", PER_RUN_COLUMNS[1:], agg, cfg.format),
        _write_table(out / "run_summary", RUN_SUMMARY_COLUMNS, summary, cfg.format),
    ]
    last = batch.aggregate[-1]
    print(
        f"{params.interpretation.value}: {timed.runs} runs on {cfg.topology} in {elapsed:.1f}s; "
        f"t={last['t']:g} route_errors={last['route_errors']:.2f} no_route={last['no_route']:.2f} "
        f"mean occupancy={batch.mean_occupancy():.2f}"
    )
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batmodel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("explore", "exhaustively check the untimed model"), ("simulate", "run the timed simulation")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario file (key = value)")
        p.add_argument("--interpretation", choices=["literal", "alternative"])
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=["csv", "json"])
        if name == "explore":
            p.add_argument("--no-reduction", action="store_true", help="disable internal-transition priority")
        else:
            p.add_argument("--seed", type=int)
            p.add_argument("--runs", type=int)
            p.add_argument("--workers", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = scenario.load(args.config)
        cfg = scenario.with_overrides(
            cfg,
            interpretation=args.interpretation,
            output=args.out,
            format=args.format,
            reduction=False if getattr(args, "no_reduction", False) else None,
            seed=getattr(args, "seed", None),
            runs=getattr(args, "runs", None),
            workers=getattr(args, "workers", None),
        )
        if args.command == "explore":
            return explore_command(cfg)
        return simulate_command(cfg)
    except ConfigError as exc:
        print(f"batmodel: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"batmodel: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
