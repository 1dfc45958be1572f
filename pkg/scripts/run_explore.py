"""Explore ring(4) under both readings, with and without the priority reduction.

    python scripts/run_explore.py [--skip-full]
"""
import argparse
import time
from pathlib import Path

from batmodel import config
from batmodel.explorer import PROPERTIES, explore

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "ring4.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(SCENARIO))
    ap.add_argument("--skip-full", action="store_true", help="only run with the reduction on")
    args = ap.parse_args()
    base = config.load(args.config)
    for reading in ("literal", "alternative"):
        cfg = config.with_overrides(base, interpretation=reading)
        params, topo = cfg.validate()
        tables = {}
        for reduction in (True,) if args.skip_full else (True, False):
            start = time.perf_counter()
            report = explore(params, topo, cfg.explore_budgets(topo.n), reduction=reduction)
            tables[reduction] = report.quiescent_tables
            verdicts = " ".join(f"{p}={'ok' if p not in report.violations else 'FAIL'}" for p in PROPERTIES)
            print(
                f"{reading:11s} reduction={'on ' if reduction else 'off'} states={report.states_visited:>9} "
                f"quiescent={report.quiescent_states:>5} tables={len(report.quiescent_tables):>4} "
                f"{time.perf_counter() - start:6.1f}s {verdicts}"
            )
        if len(tables) == 2:
            print(f"{reading:11s} quiescent tables identical: {tables[True] == tables[False]}")


if __name__ == "__main__":
    main()
