"""Turn stored run records into per-sequence comparison tables.

The headline table compares the 10-bit reference route against the 8-bit
route per sequence: where their rate curves cross, the next ladder QP
past the crossing, and BD deltas for encoding time (per host), encoding
energy (per host with RAPL data), and bitrate. Hosts appear as column
suffixes, so one table can mix measurements from several machines as long
as every machine saw byte-identical bitstreams.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .curves import Curve, OperatingPoint, SequenceRow, report_row
from .errors import ValidationError
from .pipeline import ResultStore, RunRecord

BASELINE_VARIANT = "10-10"
CONTENDER_VARIANT = "8-8"
QUALITY_AXES = ("psnr_yuv", "external")


class ReportError(ValidationError):
    """Store content cannot be turned into a consistent table."""


def _quality_value(record: RunRecord, axis: str) -> float:
    if axis == "psnr_yuv":
        return record.quality.psnr_yuv
    if axis == "external":
        if record.quality.external_score is None:
            raise ReportError(
                f"{record.sequence}/{record.variant}/qp{record.qp}: no external score stored"
            )
        return record.quality.external_score
    raise ReportError(f"unknown quality axis {axis!r}")


def collect(store: ResultStore) -> dict[str, dict[str, dict[str, list[RunRecord]]]]:
    """Group records as sequence -> variant -> host -> records (QP ascending)."""
    grouped: dict[str, dict[str, dict[str, list[RunRecord]]]] = {}
    for record in store.records.values():
        grouped.setdefault(record.sequence, {}).setdefault(record.variant, {}).setdefault(
            record.host, []
        ).append(record)
    for variants in grouped.values():
        for hosts in variants.values():
            for records in hosts.values():
                records.sort(key=lambda r: r.qp)
    return grouped


def _check_ladders(sequence: str, variants: dict[str, dict[str, list[RunRecord]]]) -> tuple[int, ...]:
    """All variant/host groups of a sequence must cover the same QP set."""
    expected: set[int] = set()
    for hosts in variants.values():
        for records in hosts.values():
            expected.update(r.qp for r in records)
    for variant, hosts in variants.items():
        for host, records in hosts.items():
            have = {r.qp for r in records}
            if have != expected:
                missing = sorted(expected - have)
                raise ReportError(
                    f"incomplete ladder for {sequence}/{variant} on host {host}: "
                    f"missing QP {missing}"
                )
    return tuple(sorted(expected))


def _check_digests(sequence: str, variants: dict[str, dict[str, list[RunRecord]]]) -> None:
    """Across hosts, the same cell must have produced the same bitstream."""
    for variant, hosts in variants.items():
        per_qp: dict[int, set[str]] = {}
        for records in hosts.values():
            for record in records:
                per_qp.setdefault(record.qp, set()).add(record.bitstream_sha256)
        for qp, digests in per_qp.items():
            if len(digests) > 1:
                raise ReportError(
                    f"{sequence}/{variant}/qp{qp}: bitstream digests disagree across hosts"
                )


def _rate_curve(records: list[RunRecord], axis: str) -> Curve:
    points = [
        OperatingPoint(r.qp, _quality_value(r, axis), r.bitrate_kbps) for r in records
    ]
    return Curve.from_points(points, quality_kind=axis, cost_kind="bitrate")


def _cost_curve(records: list[RunRecord], axis: str, cost_kind: str) -> Curve:
    # Time and energy are measurements, not rate-control outputs, so they are
    # not forced to grow monotonically along the ladder.
    costs = {
        "time": lambda r: r.cpu_time,
        "energy": lambda r: r.energy_joules,
    }[cost_kind]
    points = [OperatingPoint(r.qp, _quality_value(r, axis), costs(r)) for r in records]
    return Curve.from_points(points, quality_kind=axis, cost_kind=cost_kind, monotone_cost=False)


@dataclass(frozen=True)
class ReportTable:
    quality_axis: str
    baseline: str
    contender: str
    rows: tuple[SequenceRow, ...]
    time_hosts: tuple[str, ...]
    energy_hosts: tuple[str, ...]
    rate_variants: tuple[str, ...]

    def averages(self) -> SequenceRow:
        """Mean of every BD column; crossing quality and QP stay blank."""

        def mean_over(key_of) -> dict[str, float]:
            sums: dict[str, list[float]] = {}
            for row in self.rows:
                for key, value in key_of(row).items():
                    sums.setdefault(key, []).append(value)
            return {k: sum(v) / len(v) for k, v in sums.items()}

        return SequenceRow(
            sequence="Average",
            intersection_quality=None,
            ceil_qp=None,
            bdt_percent=mean_over(lambda r: r.bdt_percent),
            bdee_percent=mean_over(lambda r: r.bdee_percent),
            bd_rate_percent=mean_over(lambda r: r.bd_rate_percent),
        )


def build_table(
    store: ResultStore,
    baseline: str = BASELINE_VARIANT,
    contender: str = CONTENDER_VARIANT,
    quality_axis: str = "psnr_yuv",
    extra_rate_variants: tuple[str, ...] = ("8-10",),
) -> ReportTable:
    """Assemble the per-sequence comparison table from a (merged) store."""
    if quality_axis not in QUALITY_AXES:
        raise ReportError(f"unknown quality axis {quality_axis!r}")
    grouped = collect(store)
    if not grouped:
        raise ReportError("result store is empty")

    rows = []
    time_hosts: set[str] = set()
    energy_hosts: set[str] = set()
    rate_variants: set[str] = set()
    for sequence in sorted(grouped):
        variants = grouped[sequence]
        for needed in (baseline, contender):
            if needed not in variants:
                raise ReportError(f"sequence {sequence}: no records for variant {needed}")
        _check_ladders(sequence, variants)
        _check_digests(sequence, variants)

        def host_records(variant: str, host: str) -> list[RunRecord]:
            return variants[variant][host]

        # Rate and quality are host-independent (digests were just checked),
        # so the rate curves come from whichever host sorts first.
        def any_host(variant: str) -> list[RunRecord]:
            hosts = variants[variant]
            return hosts[sorted(hosts)[0]]

        rate_pair = (
            _rate_curve(any_host(baseline), quality_axis),
            _rate_curve(any_host(contender), quality_axis),
        )

        shared_hosts = sorted(
            set(variants[baseline]) & set(variants[contender])
        )
        time_pairs = {}
        energy_pairs = {}
        for host in shared_hosts:
            time_pairs[host] = (
                _cost_curve(host_records(baseline, host), quality_axis, "time"),
                _cost_curve(host_records(contender, host), quality_axis, "time"),
            )
            both = host_records(baseline, host) + host_records(contender, host)
            if all(r.energy_joules is not None for r in both):
                energy_pairs[host] = (
                    _cost_curve(host_records(baseline, host), quality_axis, "energy"),
                    _cost_curve(host_records(contender, host), quality_axis, "energy"),
                )

        extra_pairs = {}
        for name in extra_rate_variants:
            if name in variants and name not in (baseline, contender):
                extra_pairs[name] = (
                    _rate_curve(any_host(baseline), quality_axis),
                    _rate_curve(any_host(name), quality_axis),
                )

        row = report_row(
            sequence,
            rate_pair,
            time_pairs=time_pairs,
            energy_pairs=energy_pairs,
            extra_rate_pairs=extra_pairs,
            contender=contender,
        )
        rows.append(row)
        time_hosts.update(row.bdt_percent)
        energy_hosts.update(row.bdee_percent)
        rate_variants.update(row.bd_rate_percent)

    ordered_variants = [contender] + sorted(rate_variants - {contender})
    return ReportTable(
        quality_axis=quality_axis,
        baseline=baseline,
        contender=contender,
        rows=tuple(rows),
        time_hosts=tuple(sorted(time_hosts)),
        energy_hosts=tuple(sorted(energy_hosts)),
        rate_variants=tuple(v for v in ordered_variants if v in rate_variants),
    )


def has_external_scores(store: ResultStore) -> bool:
    records = list(store.records.values())
    return bool(records) and all(r.quality.external_score is not None for r in records)


def _columns(table: ReportTable) -> list[tuple[str, object]]:
    """Column headers plus per-row accessors, in print order."""
    axis_label = "PSNR (dB)" if table.quality_axis == "psnr_yuv" else "Score"
    cols: list[tuple[str, object]] = [
        ("Sequence", lambda r: r.sequence),
        (axis_label, lambda r: "" if r.intersection_quality is None else f"{r.intersection_quality:.2f}"),
        ("ceil(QP)", lambda r: "" if r.ceil_qp is None else str(r.ceil_qp)),
    ]

    def pct(mapping_of, key):
        def fmt(row):
            value = mapping_of(row).get(key)
            return "" if value is None else f"{value:+.1f}%"

        return fmt

    for host in table.time_hosts:
        cols.append((f"BDT[{host}]", pct(lambda r: r.bdt_percent, host)))
    for host in table.energy_hosts:
        cols.append((f"BDEE[{host}]", pct(lambda r: r.bdee_percent, host)))
    for variant in table.rate_variants:
        cols.append((f"BD-Rate[{variant}]", pct(lambda r: r.bd_rate_percent, variant)))
    return cols


def render_text(table: ReportTable) -> str:
    """Fixed-width text rendering with a closing average row."""
    cols = _columns(table)
    all_rows = list(table.rows) + [table.averages()]
    matrix = [[header for header, _ in cols]]
    for row in all_rows:
        matrix.append([accessor(row) for _, accessor in cols])
    widths = [max(len(line[i]) for line in matrix) for i in range(len(cols))]

    out = io.StringIO()
    out.write(
        f"Reference {table.baseline} vs {table.contender}"
        f" (quality axis: {table.quality_axis})\n"
    )
    header, *body = matrix
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    out.write("  ".join("-" * w for w in widths) + "\n")
    for line in body[:-1]:
        out.write("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(line, widths))).rstrip() + "\n")
    out.write("  ".join("-" * w for w in widths) + "\n")
    average = body[-1]
    out.write("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(average, widths))).rstrip() + "\n")
    return out.getvalue()


def write_csv(table: ReportTable, path) -> None:
    """CSV twin of the text table, same columns and rows."""
    cols = _columns(table)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header for header, _ in cols])
        for row in list(table.rows) + [table.averages()]:
            writer.writerow([accessor(row) for _, accessor in cols])
