#!/usr/bin/env python3
"""Run a configured study end to end and print the comparison table.

Thin orchestration over the library: load the JSON config, execute every
sequence/variant/QP cell (reusing the result store where possible), then
build the report. Stores recorded on other hosts can be merged in so the
table carries one time/energy column per host label.

    python3 scripts/run_study.py study.json --csv table.csv \
        --merge-store other_host_results.jsonl
"""

import argparse
import sys
import time
from pathlib import Path

from hdrbench.config import load_config
from hdrbench.errors import ExecutionError, ValidationError
from hdrbench.pipeline import ResultStore, Runner
from hdrbench.report import build_table, render_text, write_csv


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config", type=Path, help="study configuration (JSON)")
    parser.add_argument("--fresh", action="store_true", help="ignore cached measurements")
    parser.add_argument("--merge-store", type=Path, action="append", default=[],
                        help="additional result store to merge before reporting")
    parser.add_argument("--baseline", default="10-10")
    parser.add_argument("--contender", default="8-8")
    parser.add_argument("--quality-axis", choices=("psnr_yuv", "external"), default="psnr_yuv")
    parser.add_argument("--csv", type=Path, default=None, help="also write the table as CSV")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        runner = Runner(config)
        total = len(runner.plan())
        print(f"{len(config.sequences)} sequence(s) x {len(config.variants)} variant(s) "
              f"x {len(config.qp_ladder)} QP(s) = {total} cells on host "
              f"{config.host_label!r}")
        start = time.perf_counter()

        def progress(index, count, cell, state):
            print(f"[{index}/{count}] {state:8s} "
                  f"{cell.sequence.name}/{cell.variant.name}/qp{cell.qp}", flush=True)

        store = runner.run(force_fresh=True if args.fresh else None, progress=progress)
        print(f"{runner.executed_cells} measured, {runner.reused_cells} reused in "
              f"{time.perf_counter() - start:.1f} s; store: {config.store_path}")

        merged = ResultStore()
        merged.merge(store)
        for extra in args.merge_store:
            if not extra.exists():
                raise ValidationError(f"store not found: {extra}")
            merged.merge(ResultStore.load(extra))

        table = build_table(
            merged, baseline=args.baseline, contender=args.contender,
            quality_axis=args.quality_axis,
        )
        print()
        print(render_text(table))
        if args.csv is not None:
            write_csv(table, args.csv)
            print(f"\nwrote {args.csv}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExecutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
