"""Benchmark run configuration: sequences, encoder variants, ladder, hosts.

Loaded from a single JSON document. Encoder and decoder adapters are
command templates with ``{INPUT} {OUTPUT} {QP} {WIDTH} {HEIGHT} {BITDEPTH}
{FPS}`` placeholders; anything else (presets, SIMD toggles) lives verbatim
in the template, so the toolkit never links codec code.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .yuv import PlaneFormat

DEFAULT_QP_LADDER = (12, 17, 22, 27, 32, 37)
DEFAULT_REPETITIONS = 5

# name -> (input_depth, internal_depth, simd_enabled)
KNOWN_VARIANTS = {
    "10-10": (10, 10, True),
    "8-10": (8, 10, True),
    "8-8": (8, 8, True),
    "8-8-nosimd": (8, 8, False),
}

TEMPLATE_PLACEHOLDERS = ("{INPUT}", "{OUTPUT}", "{QP}", "{WIDTH}", "{HEIGHT}", "{BITDEPTH}", "{FPS}")


class ConfigError(ValidationError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class SequenceSpec:
    name: str
    path: Path
    fmt: PlaneFormat
    frame_rate: float

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ConfigError(f"sequence {self.name}: frame rate must be positive")


@dataclass(frozen=True)
class VariantConfig:
    """One encoding route: which depth the encoder sees and runs at.

    ``8-8`` and ``8-8-nosimd`` must differ only in ``simd_enabled``; their
    bitstreams are expected to be byte-identical.
    """

    name: str
    input_depth: int
    internal_depth: int
    simd_enabled: bool
    encoder_template: str
    decoder_template: str

    def __post_init__(self):
        if self.input_depth not in (8, 10) or self.internal_depth not in (8, 10):
            raise ConfigError(f"variant {self.name}: depths must be 8 or 10")
        known = KNOWN_VARIANTS.get(self.name)
        if known and known != (self.input_depth, self.internal_depth, self.simd_enabled):
            raise ConfigError(
                f"variant {self.name}: depths/simd {self.input_depth}/{self.internal_depth}/"
                f"{self.simd_enabled} contradict the standard definition {known}"
            )
        for template, what in ((self.encoder_template, "encoder"), (self.decoder_template, "decoder")):
            if "{INPUT}" not in template or "{OUTPUT}" not in template:
                raise ConfigError(
                    f"variant {self.name}: {what} template needs {{INPUT}} and {{OUTPUT}}"
                )


def render_template(template: str, substitutions: dict[str, str]) -> list[str]:
    """Tokenize a command template, then substitute placeholders per token."""
    argv = []
    for token in shlex.split(template):
        for key, value in substitutions.items():
            token = token.replace(key, value)
        argv.append(token)
    return argv


@dataclass(frozen=True)
class RunConfig:
    sequences: tuple[SequenceSpec, ...]
    variants: tuple[VariantConfig, ...]
    qp_ladder: tuple[int, ...] = DEFAULT_QP_LADDER
    repetitions: int = DEFAULT_REPETITIONS
    host_label: str = "local"
    rapl_domain: str | None = None
    powercap_root: Path | None = None
    store_path: Path = Path("results.jsonl")
    work_dir: Path = Path("work")
    cache: str = "reuse"  # or "fresh"
    trim_outliers: bool = True
    pin_cpu: bool = True
    metric_command: str | None = None
    reported_rate_regex: str | None = None

    def __post_init__(self):
        if not self.sequences:
            raise ConfigError("no sequences configured")
        if not self.variants:
            raise ConfigError("no variants configured")
        if not self.qp_ladder:
            raise ConfigError("QP ladder must not be empty")
        if len(set(self.qp_ladder)) != len(self.qp_ladder):
            raise ConfigError("QP ladder contains duplicates")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.cache not in ("reuse", "fresh"):
            raise ConfigError(f"cache policy must be 'reuse' or 'fresh', got {self.cache!r}")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate variant names")
        seq_names = [s.name for s in self.sequences]
        if len(set(seq_names)) != len(seq_names):
            raise ConfigError("duplicate sequence names")

    def variant(self, name: str) -> VariantConfig:
        for v in self.variants:
            if v.name == name:
                return v
        raise ConfigError(f"unknown variant name {name!r}")


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _reject_unknown_keys(mapping: dict, allowed: frozenset, context: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


_SEQUENCE_KEYS = frozenset({"name", "path", "width", "height", "bit_depth", "fps"})
_VARIANT_KEYS = frozenset(
    {"name", "input_depth", "internal_depth", "simd_enabled", "encoder_template",
     "decoder_template"}
)
_CONFIG_KEYS = frozenset(
    {"sequences", "variants", "qp_ladder", "repetitions", "host_label", "rapl_domain",
     "powercap_root", "store", "work_dir", "cache", "trim_outliers", "pin_cpu",
     "metric_command", "reported_rate_regex"}
)


def _parse_sequence(entry: dict, base: Path) -> SequenceSpec:
    _reject_unknown_keys(entry, _SEQUENCE_KEYS, "sequence")
    path = Path(_require(entry, "path", "sequence"))
    if not path.is_absolute():
        path = base / path
    name = entry.get("name") or path.stem
    fmt = PlaneFormat(
        width=_require(entry, "width", f"sequence {name}"),
        height=_require(entry, "height", f"sequence {name}"),
        bit_depth=entry.get("bit_depth", 10),
    )
    if not path.is_file():
        raise ConfigError(f"sequence {name}: file not found: {path}")
    return SequenceSpec(name=name, path=path, fmt=fmt, frame_rate=_require(entry, "fps", f"sequence {name}"))


def _parse_variant(entry: dict) -> VariantConfig:
    _reject_unknown_keys(entry, _VARIANT_KEYS, "variant")
    name = _require(entry, "name", "variant")
    known = KNOWN_VARIANTS.get(name)
    if known is None and not all(k in entry for k in ("input_depth", "internal_depth")):
        raise ConfigError(
            f"unknown variant name {name!r}: specify input_depth and internal_depth"
        )
    input_depth, internal_depth, simd = known or (entry["input_depth"], entry["internal_depth"], True)
    return VariantConfig(
        name=name,
        input_depth=entry.get("input_depth", input_depth),
        internal_depth=entry.get("internal_depth", internal_depth),
        simd_enabled=entry.get("simd_enabled", simd),
        encoder_template=_require(entry, "encoder_template", f"variant {name}"),
        decoder_template=_require(entry, "decoder_template", f"variant {name}"),
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a JSON run configuration file.

    Relative sequence/store/work paths resolve against the config file's
    directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    _reject_unknown_keys(data, _CONFIG_KEYS, f"config {path}")

    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    sequences = tuple(_parse_sequence(e, base) for e in _require(data, "sequences", "config"))
    variants = tuple(_parse_variant(e) for e in _require(data, "variants", "config"))
    return RunConfig(
        sequences=sequences,
        variants=variants,
        qp_ladder=tuple(data.get("qp_ladder", DEFAULT_QP_LADDER)),
        repetitions=data.get("repetitions", DEFAULT_REPETITIONS),
        host_label=data.get("host_label", "local"),
        rapl_domain=data.get("rapl_domain"),
        powercap_root=resolve(data["powercap_root"]) if "powercap_root" in data else None,
        store_path=resolve(data.get("store", "results.jsonl")),
        work_dir=resolve(data.get("work_dir", "work")),
        cache=data.get("cache", "reuse"),
        trim_outliers=data.get("trim_outliers", True),
        pin_cpu=data.get("pin_cpu", True),
        metric_command=data.get("metric_command"),
        reported_rate_regex=data.get("reported_rate_regex"),
    )
