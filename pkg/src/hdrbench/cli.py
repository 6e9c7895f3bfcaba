"""Command-line entry point.

Subcommands mirror the library layers: ``convert`` (bit-depth), ``quality``
(PSNR scoring), ``bd`` (curve comparison from CSV files), ``measure``
(time/energy of an arbitrary command), ``run`` (full benchmark from a JSON
config), and ``report`` (tables from one or more result stores).

Exit codes: 0 on success, 1 for validation problems (bad arguments, bad
files, inconsistent stores), 2 for runtime failures of external tools.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from . import __version__, bitdepth, report, yuv
from .config import load_config
from .curves import compare, export_comparison_csv, read_curve_csv
from .errors import ExecutionError, ValidationError
from .measure import measure_process
from .metrics import aggregate_frame_psnrs, external_metric, psnr_plane
from .pipeline import STORE_SCHEMA, ResultStore, Runner, to_json_float
from .yuv import Frame, PlaneFormat


class _ArgumentError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors as validation failures."""

    def error(self, message):
        raise _ArgumentError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="hdrbench", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__} (store schema {STORE_SCHEMA})",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, help_text: str) -> _Parser:
        return sub.add_parser(name, help=help_text, description=help_text)

    p = add("convert", "Convert raw 4:2:0 YUV between 10-bit and 8-bit.")
    p.add_argument("--input", "--in", dest="input", required=True, type=Path)
    p.add_argument("--output", "--out", dest="output", required=True, type=Path)
    p.add_argument("--direction", required=True, choices=("10to8", "8to10"))
    p.add_argument("--width", required=True, type=int)
    p.add_argument("--height", required=True, type=int)
    p.add_argument("--fps", type=float, default=None,
                   help="frame-rate metadata; raw planar output carries no header")

    p = add("quality", "Score a 10-bit reconstruction against its 10-bit source.")
    p.add_argument("--ref", required=True, type=Path)
    p.add_argument("--test", required=True, type=Path)
    p.add_argument("--width", required=True, type=int)
    p.add_argument("--height", required=True, type=int)
    p.add_argument("--metric-cmd", help="external metric template with {REF} and {TEST}")

    p = add("bd", "Compare two rate/quality curves stored as qp,quality,cost CSV.")
    p.add_argument("--curve-a", required=True, type=Path, help="reference curve")
    p.add_argument("--curve-b", required=True, type=Path, help="contender curve")
    p.add_argument("--rcd-grid", type=int, default=0, metavar="N",
                   help="sample the relative curve difference at N points")
    p.add_argument("--intersections", action="store_true", default=True,
                   help="locate curve crossings (default)")
    p.add_argument("--no-intersections", dest="intersections", action="store_false")
    p.add_argument("--export", type=Path, metavar="CSV",
                   help="write interpolated curves and RCD for plotting")

    p = add("measure", "Measure wall time, CPU time and RAPL energy of a command.")
    p.add_argument("--cmd", required=True, help="command line to run (quoted)")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--rapl-domain")
    p.add_argument("--powercap-root", type=Path)
    p.add_argument("--no-pin", action="store_true")
    p.add_argument("--no-trim", action="store_true")

    p = add("run", "Execute the full benchmark described by a JSON config.")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--store", type=Path, help="override the result store path")
    p.add_argument("--fresh-measurements", action="store_true",
                   help="re-run every cell even if a cached record exists")

    p = add("report", "Render comparison tables from one or more result stores.")
    p.add_argument("--store", required=True, action="append", type=Path,
                   help="result store (repeat to merge hosts)")
    p.add_argument("--baseline", default=report.BASELINE_VARIANT)
    p.add_argument("--contender", default=report.CONTENDER_VARIANT)
    p.add_argument("--csv", type=Path, help="also write the table(s) as CSV")

    return parser


def _cmd_convert(args) -> int:
    if args.direction == "10to8":
        in_fmt = PlaneFormat(args.width, args.height, 10)
        op, out_depth = bitdepth.tonemap_plane, 8
    else:
        in_fmt = PlaneFormat(args.width, args.height, 8)
        op, out_depth = bitdepth.expand_plane, 10
    out_fmt = in_fmt.with_bit_depth(out_depth)
    yuv.write_frames(
        args.output,
        (
            Frame(op(f.y), op(f.u), op(f.v), out_fmt)
            for f in yuv.iter_frames(args.input, in_fmt)
        ),
    )
    frames = yuv.frame_count(args.output, out_fmt)
    print(f"wrote {frames} frame(s) to {args.output}")
    return 0


def _cmd_quality(args) -> int:
    fmt = PlaneFormat(args.width, args.height, 10)
    if yuv.frame_count(args.ref, fmt) != yuv.frame_count(args.test, fmt):
        raise ValidationError("reference and test sequences have different frame counts")
    y_psnrs, u_psnrs, v_psnrs = [], [], []
    for ref_frame, test_frame in zip(
        yuv.iter_frames(args.ref, fmt), yuv.iter_frames(args.test, fmt)
    ):
        y_psnrs.append(psnr_plane(ref_frame.y, test_frame.y, 10))
        u_psnrs.append(psnr_plane(ref_frame.u, test_frame.u, 10))
        v_psnrs.append(psnr_plane(ref_frame.v, test_frame.v, 10))
    quality = aggregate_frame_psnrs(y_psnrs, u_psnrs, v_psnrs)
    payload = {
        "frames": len(y_psnrs),
        "psnr_y": to_json_float(quality.psnr_y),
        "psnr_u": to_json_float(quality.psnr_u),
        "psnr_v": to_json_float(quality.psnr_v),
        "psnr_yuv": to_json_float(quality.psnr_yuv),
    }
    if args.metric_cmd:
        payload["external_score"] = external_metric(args.ref, args.test, args.metric_cmd)
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_bd(args) -> int:
    curve_a = read_curve_csv(args.curve_a, monotone_cost=False)
    curve_b = read_curve_csv(args.curve_b, monotone_cost=False)
    result = compare(
        curve_a,
        curve_b,
        rcd_grid_size=args.rcd_grid,
        with_intersections=args.intersections,
        ceil_reference=curve_a,
    )
    payload = {
        "bd_percent": result.bd_percent,
        "overlap": list(result.overlap),
    }
    if args.intersections:
        payload["intersections"] = list(result.intersections)
        payload["ceil_qp"] = result.ceil_qp
    if args.rcd_grid:
        payload["rcd"] = [list(pair) for pair in result.rcd_samples]
    if args.export:
        export_comparison_csv(curve_a, curve_b, args.export)
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_measure(args) -> int:
    kwargs = {}
    if args.powercap_root:
        kwargs["powercap_root"] = args.powercap_root
    result = measure_process(
        shlex.split(args.cmd),
        repetitions=args.reps,
        rapl_domain=args.rapl_domain,
        pin_cpu=not args.no_pin,
        trim_outliers=not args.no_trim,
        **kwargs,
    )
    payload = {
        "repetitions": len(result.samples),
        "retained": result.retained_count,
        "mean_wall_time_s": result.mean_wall_time,
        "mean_cpu_time_s": result.mean_cpu_time,
        "mean_energy_j": result.mean_energy_joules,
        "samples": [
            {"wall_s": s.wall_time, "cpu_s": s.cpu_time, "energy_j": s.energy_joules}
            for s in result.samples
        ],
        "warnings": list(result.warnings),
    }
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.store:
        from dataclasses import replace

        config = replace(config, store_path=args.store)
    runner = Runner(config)

    def progress(index, total, cell, state):
        print(
            f"[{index}/{total}] {cell.sequence.name}/{cell.variant.name}/qp{cell.qp:02d}: {state}"
        )

    runner.run(force_fresh=args.fresh_measurements or None, progress=progress)
    print(
        f"done: {runner.executed_cells} cell(s) measured, {runner.reused_cells} reused, "
        f"{runner.encoder_invocations} encoder invocation(s); store: {config.store_path}"
    )
    return 0


def _cmd_report(args) -> int:
    merged = ResultStore()
    for store_path in args.store:
        if not Path(store_path).is_file():
            raise ValidationError(f"store not found: {store_path}")
        merged.merge(ResultStore.load(store_path))
    table = report.build_table(merged, baseline=args.baseline, contender=args.contender)
    print(report.render_text(table))
    if args.csv:
        report.write_csv(table, args.csv)
    if report.has_external_scores(merged):
        score_table = report.build_table(
            merged, baseline=args.baseline, contender=args.contender, quality_axis="external"
        )
        print(report.render_text(score_table))
        if args.csv:
            extra = args.csv.with_name(args.csv.stem + ".external" + args.csv.suffix)
            report.write_csv(score_table, extra)
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "quality": _cmd_quality,
    "bd": _cmd_bd,
    "measure": _cmd_measure,
    "run": _cmd_run,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExecutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
