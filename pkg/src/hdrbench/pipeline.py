"""Benchmark execution: plan cells, run codecs, measure, persist results.

One *cell* is (sequence, variant, QP). Executing a cell tonemaps the input
if the variant wants 8-bit, runs the encoder under measurement, decodes,
re-expands 8-bit reconstructions to 10-bit, and scores quality against the
untouched 10-bit source. Records land in a JSONL store keyed by a content
hash so repeated runs reuse finished cells instead of re-encoding.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import math
import os
import re
import subprocess
from dataclasses import dataclass, replace
from pathlib import Path

from . import bitdepth, yuv
from .config import RunConfig, SequenceSpec, VariantConfig, render_template
from .errors import ExecutionError, ValidationError
from .measure import DEFAULT_POWERCAP_ROOT, measure_process
from .metrics import QualityRecord, aggregate_frame_psnrs, external_metric, psnr_plane
from .yuv import Frame, PlaneFormat

STORE_SCHEMA = 1
_HASH_CHUNK = 1 << 20


class PipelineError(ExecutionError):
    """A codec invocation failed or produced unusable output."""


class StoreError(ValidationError):
    """Result store file is malformed."""


class StoreConflictError(StoreError):
    """Two records claim the same cell but disagree about the bitstream."""


def to_json_float(value: float | None):
    if value is None:
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def from_json_float(value) -> float | None:
    if value is None:
        return None
    if isinstance(value, str):
        return float(value)
    return float(value)


def file_sha256(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        while chunk := fh.read(_HASH_CHUNK):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunRecord:
    """Everything measured and derived for one executed cell."""

    cache_key: str
    sequence: str
    variant: str
    qp: int
    host: str
    width: int
    height: int
    input_depth: int
    internal_depth: int
    frames: int
    frame_rate: float
    bitstream_bytes: int
    bitstream_sha256: str
    wall_time: float
    cpu_time: float
    energy_joules: float | None
    samples: tuple[tuple[float, float, float | None], ...]
    retained_count: int
    quality: QualityRecord
    reported_rate_kbps: float | None = None
    warnings: tuple[str, ...] = ()
    created_at: str = ""

    @property
    def bitrate_kbps(self) -> float:
        """Bitrate derived from the exact stored byte count (normative)."""
        return self.bitstream_bytes * 8.0 * self.frame_rate / self.frames / 1000.0

    def to_dict(self) -> dict:
        return {
            "schema": STORE_SCHEMA,
            "key": self.cache_key,
            "sequence": self.sequence,
            "variant": self.variant,
            "qp": self.qp,
            "host": self.host,
            "width": self.width,
            "height": self.height,
            "input_depth": self.input_depth,
            "internal_depth": self.internal_depth,
            "frames": self.frames,
            "frame_rate": self.frame_rate,
            "bitstream_bytes": self.bitstream_bytes,
            "bitstream_sha256": self.bitstream_sha256,
            "wall_time": self.wall_time,
            "cpu_time": self.cpu_time,
            "energy_joules": self.energy_joules,
            "samples": [[w, c, e] for w, c, e in self.samples],
            "retained_count": self.retained_count,
            "psnr_y": to_json_float(self.quality.psnr_y),
            "psnr_u": to_json_float(self.quality.psnr_u),
            "psnr_v": to_json_float(self.quality.psnr_v),
            "psnr_yuv": to_json_float(self.quality.psnr_yuv),
            "external_score": self.quality.external_score,
            "reported_rate_kbps": self.reported_rate_kbps,
            "warnings": list(self.warnings),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        if data.get("schema") != STORE_SCHEMA:
            raise StoreError(f"unsupported store schema {data.get('schema')!r}")
        quality = QualityRecord(
            psnr_y=from_json_float(data["psnr_y"]),
            psnr_u=from_json_float(data["psnr_u"]),
            psnr_v=from_json_float(data["psnr_v"]),
            psnr_yuv=from_json_float(data["psnr_yuv"]),
            external_score=data.get("external_score"),
        )
        return cls(
            cache_key=data["key"],
            sequence=data["sequence"],
            variant=data["variant"],
            qp=data["qp"],
            host=data["host"],
            width=data["width"],
            height=data["height"],
            input_depth=data["input_depth"],
            internal_depth=data["internal_depth"],
            frames=data["frames"],
            frame_rate=data["frame_rate"],
            bitstream_bytes=data["bitstream_bytes"],
            bitstream_sha256=data["bitstream_sha256"],
            wall_time=data["wall_time"],
            cpu_time=data["cpu_time"],
            energy_joules=data["energy_joules"],
            samples=tuple((s[0], s[1], s[2]) for s in data["samples"]),
            retained_count=data["retained_count"],
            quality=quality,
            reported_rate_kbps=data.get("reported_rate_kbps"),
            warnings=tuple(data.get("warnings", ())),
            created_at=data.get("created_at", ""),
        )


class ResultStore:
    """JSONL-backed collection of run records, one JSON object per line."""

    def __init__(self, records: dict[str, RunRecord] | None = None):
        self.records: dict[str, RunRecord] = dict(records or {})

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, cache_key: str) -> bool:
        return cache_key in self.records

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ResultStore":
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            store.add(RunRecord.from_dict(data), replace=True)
        return store

    def add(self, record: RunRecord, replace: bool = False) -> None:
        existing = self.records.get(record.cache_key)
        if existing is not None and not replace:
            if existing.bitstream_sha256 != record.bitstream_sha256:
                raise StoreConflictError(
                    f"cell {record.sequence}/{record.variant}/qp{record.qp}: "
                    f"conflicting bitstream digests "
                    f"{existing.bitstream_sha256[:12]} vs {record.bitstream_sha256[:12]}"
                )
            return
        self.records[record.cache_key] = record

    def merge(self, other: "ResultStore") -> None:
        """Fold another store in; same-key records must agree on the bitstream."""
        for record in other.records.values():
            self.add(record, replace=False)

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w") as fh:
            for record in self.records.values():
                fh.write(json.dumps(record.to_dict()) + "\n")
        os.replace(tmp, path)

    def select(self, sequence: str | None = None, variant: str | None = None) -> list[RunRecord]:
        out = [
            r
            for r in self.records.values()
            if (sequence is None or r.sequence == sequence)
            and (variant is None or r.variant == variant)
        ]
        out.sort(key=lambda r: (r.sequence, r.variant, r.qp))
        return out


@dataclass(frozen=True)
class PlanCell:
    sequence: SequenceSpec
    variant: VariantConfig
    qp: int
    cache_key: str


def cell_cache_key(
    sequence_digest: str, variant: VariantConfig, qp: int, host: str
) -> str:
    """Content hash identifying a cell's measurement context.

    The host label is part of the key on purpose: time and energy numbers
    from one machine must never satisfy a cache lookup on another.
    """
    payload = json.dumps(
        {
            "schema": STORE_SCHEMA,
            "source": sequence_digest,
            "variant": [
                variant.name,
                variant.input_depth,
                variant.internal_depth,
                variant.simd_enabled,
                variant.encoder_template,
                variant.decoder_template,
            ],
            "qp": qp,
            "host": host,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


class Runner:
    """Plans and executes all cells of a run configuration."""

    def __init__(self, config: RunConfig, store: ResultStore | None = None):
        self.config = config
        self.store = store if store is not None else ResultStore.load(config.store_path)
        self.encoder_invocations = 0
        self.executed_cells = 0
        self.reused_cells = 0
        self._sequence_digests: dict[str, str] = {}
        self._prepared_inputs: dict[tuple[str, int], Path] = {}

    # -- planning ----------------------------------------------------------

    def sequence_digest(self, spec: SequenceSpec) -> str:
        cached = self._sequence_digests.get(spec.name)
        if cached is None:
            tag = f"{spec.fmt.width}x{spec.fmt.height}@{spec.fmt.bit_depth}:"
            digest = hashlib.sha256(tag.encode())
            with open(spec.path, "rb") as fh:
                while chunk := fh.read(_HASH_CHUNK):
                    digest.update(chunk)
            cached = digest.hexdigest()
            self._sequence_digests[spec.name] = cached
        return cached

    def plan(self) -> list[PlanCell]:
        """Validate inputs and lay out cells: highest QP (fastest) first."""
        cells = []
        for spec in self.config.sequences:
            if not Path(spec.path).is_file():
                raise ValidationError(f"sequence {spec.name}: file not found: {spec.path}")
            if spec.fmt.bit_depth != 10:
                raise ValidationError(
                    f"sequence {spec.name}: source must be 10-bit, got {spec.fmt.bit_depth}-bit"
                )
            if yuv.frame_count(spec.path, spec.fmt) < 1:
                raise ValidationError(f"sequence {spec.name}: no complete frames in {spec.path}")
            digest = self.sequence_digest(spec)
            for variant in self.config.variants:
                for qp in sorted(self.config.qp_ladder, reverse=True):
                    cells.append(
                        PlanCell(spec, variant, qp, cell_cache_key(digest, variant, qp, self.config.host_label))
                    )
        return cells

    # -- execution ---------------------------------------------------------

    def _prepare_input(self, spec: SequenceSpec, depth: int) -> Path:
        """Return the path of the encoder input at the requested bit depth.

        The 8-bit tonemapped rendition is produced once per sequence and
        shared by every 8-bit variant and QP.
        """
        if depth == 10:
            return Path(spec.path)
        cached = self._prepared_inputs.get((spec.name, depth))
        if cached is not None:
            return cached
        out_dir = self.config.work_dir / "inputs"
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / f"{spec.name}_{depth}bit.yuv"
        fmt8 = spec.fmt.with_bit_depth(8)
        yuv.write_frames(
            out_path,
            (
                Frame(
                    bitdepth.tonemap_plane(frame.y),
                    bitdepth.tonemap_plane(frame.u),
                    bitdepth.tonemap_plane(frame.v),
                    fmt8,
                )
                for frame in yuv.iter_frames(spec.path, spec.fmt)
            ),
        )
        self._prepared_inputs[(spec.name, depth)] = out_path
        return out_path

    def _substitutions(self, spec: SequenceSpec, path_in, path_out, qp: int, depth: int) -> dict:
        return {
            "{INPUT}": str(path_in),
            "{OUTPUT}": str(path_out),
            "{QP}": str(qp),
            "{WIDTH}": str(spec.fmt.width),
            "{HEIGHT}": str(spec.fmt.height),
            "{BITDEPTH}": str(depth),
            "{FPS}": format(spec.frame_rate, "g"),
        }

    def _parse_reported_rate(self, *log_paths: Path) -> float | None:
        pattern = self.config.reported_rate_regex
        if not pattern:
            return None
        for log_path in log_paths:
            try:
                text = log_path.read_text()
            except OSError:
                continue
            match = re.search(pattern, text)
            if match:
                try:
                    return float(match.group(1) if match.groups() else match.group(0))
                except ValueError:
                    return None
        return None

    def execute_cell(self, cell: PlanCell) -> RunRecord:
        config = self.config
        spec, variant, qp = cell.sequence, cell.variant, cell.qp
        source_frames = yuv.frame_count(spec.path, spec.fmt)
        in_path = self._prepare_input(spec, variant.input_depth)

        cell_dir = config.work_dir / spec.name / variant.name / f"qp{qp:02d}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        bitstream = cell_dir / "bitstream.bin"
        recon = cell_dir / f"recon_{variant.internal_depth}bit.yuv"

        enc_argv = render_template(
            variant.encoder_template,
            self._substitutions(spec, in_path, bitstream, qp, variant.input_depth),
        )
        enc_stdout = cell_dir / "encoder.stdout.log"
        enc_stderr = cell_dir / "encoder.stderr.log"
        measurement = measure_process(
            enc_argv,
            repetitions=config.repetitions,
            rapl_domain=config.rapl_domain,
            powercap_root=config.powercap_root or DEFAULT_POWERCAP_ROOT,
            pin_cpu=config.pin_cpu,
            trim_outliers=config.trim_outliers,
            stdout_path=enc_stdout,
            stderr_path=enc_stderr,
        )
        self.encoder_invocations += config.repetitions

        if not bitstream.is_file() or bitstream.stat().st_size == 0:
            raise PipelineError(
                f"encoder produced no bitstream for {spec.name}/{variant.name}/qp{qp}"
            )
        bitstream_bytes = bitstream.stat().st_size
        bitstream_digest = file_sha256(bitstream)

        dec_argv = render_template(
            variant.decoder_template,
            self._substitutions(spec, bitstream, recon, qp, variant.internal_depth),
        )
        dec_result = subprocess.run(dec_argv, capture_output=True, text=True)
        if dec_result.returncode != 0:
            tail = (dec_result.stderr or dec_result.stdout or "").strip().splitlines()[-3:]
            raise PipelineError(
                f"decoder exited {dec_result.returncode} for "
                f"{spec.name}/{variant.name}/qp{qp}: {' | '.join(tail)}"
            )

        recon_fmt = spec.fmt.with_bit_depth(variant.internal_depth)
        recon_frames = yuv.frame_count(recon, recon_fmt)
        if recon_frames != source_frames:
            raise PipelineError(
                f"decoder returned {recon_frames} frames, source has {source_frames} "
                f"({spec.name}/{variant.name}/qp{qp})"
            )

        quality = self._score(spec, recon, recon_fmt, cell_dir)

        warnings = list(measurement.warnings)
        reported = self._parse_reported_rate(enc_stderr, enc_stdout)
        record = RunRecord(
            cache_key=cell.cache_key,
            sequence=spec.name,
            variant=variant.name,
            qp=qp,
            host=config.host_label,
            width=spec.fmt.width,
            height=spec.fmt.height,
            input_depth=variant.input_depth,
            internal_depth=variant.internal_depth,
            frames=source_frames,
            frame_rate=spec.frame_rate,
            bitstream_bytes=bitstream_bytes,
            bitstream_sha256=bitstream_digest,
            wall_time=measurement.mean_wall_time,
            cpu_time=measurement.mean_cpu_time,
            energy_joules=measurement.mean_energy_joules,
            samples=tuple(
                (s.wall_time, s.cpu_time, s.energy_joules) for s in measurement.samples
            ),
            retained_count=measurement.retained_count,
            quality=quality,
            reported_rate_kbps=reported,
            warnings=tuple(warnings),
            created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )
        if reported is not None:
            derived = record.bitrate_kbps
            if derived > 0 and abs(reported - derived) / derived > 0.1:
                record = replace(
                    record,
                    warnings=record.warnings
                    + (
                        f"encoder-reported rate {reported:.3f} kbps deviates from "
                        f"derived {derived:.3f} kbps",
                    ),
                )
        return record

    def _score(
        self, spec: SequenceSpec, recon: Path, recon_fmt: PlaneFormat, cell_dir: Path
    ) -> QualityRecord:
        """Stream source and reconstruction in lockstep; score at 10-bit."""
        if recon_fmt.bit_depth == 8:
            recon10 = cell_dir / "recon_10bit.yuv"
            fmt10 = recon_fmt.with_bit_depth(10)
            yuv.write_frames(
                recon10,
                (
                    Frame(
                        bitdepth.expand_plane(frame.y),
                        bitdepth.expand_plane(frame.u),
                        bitdepth.expand_plane(frame.v),
                        fmt10,
                    )
                    for frame in yuv.iter_frames(recon, recon_fmt)
                ),
            )
        else:
            recon10 = recon

        y_psnrs, u_psnrs, v_psnrs = [], [], []
        for ref_frame, test_frame in zip(
            yuv.iter_frames(spec.path, spec.fmt),
            yuv.iter_frames(recon10, spec.fmt),
        ):
            y_psnrs.append(psnr_plane(ref_frame.y, test_frame.y, 10))
            u_psnrs.append(psnr_plane(ref_frame.u, test_frame.u, 10))
            v_psnrs.append(psnr_plane(ref_frame.v, test_frame.v, 10))
        quality = aggregate_frame_psnrs(y_psnrs, u_psnrs, v_psnrs)

        if self.config.metric_command:
            score = external_metric(spec.path, recon10, self.config.metric_command)
            quality = replace(quality, external_score=score)
        return quality

    def run(self, force_fresh: bool | None = None, progress=None) -> ResultStore:
        """Execute every planned cell, reusing stored results when allowed.

        The store file is checkpointed after each executed cell so an
        interrupted run loses at most the cell in flight.
        """
        fresh = force_fresh if force_fresh is not None else self.config.cache == "fresh"
        cells = self.plan()
        for index, cell in enumerate(cells, start=1):
            if not fresh and cell.cache_key in self.store:
                self.reused_cells += 1
                if progress:
                    progress(index, len(cells), cell, "cached")
                continue
            record = self.execute_cell(cell)
            self.store.add(record, replace=True)
            self.store.save(self.config.store_path)
            self.executed_cells += 1
            if progress:
                progress(index, len(cells), cell, "measured")
        return self.store
