"""Run-configuration parsing and validation."""

import json

import pytest

from hdrbench import yuv
from hdrbench.config import (
    DEFAULT_QP_LADDER,
    ConfigError,
    RunConfig,
    SequenceSpec,
    VariantConfig,
    load_config,
    render_template,
)
from hdrbench.yuv import PlaneFormat
from tests.conftest import MOCK_DECODE, MOCK_ENCODE, make_sequence


def write_clip(tmp_path, name="clip.yuv", frames=2):
    fmt = PlaneFormat(32, 32, 10)
    yuv.write_sequence(make_sequence(1, fmt, frames=frames), tmp_path / name)
    return tmp_path / name


def config_dict(tmp_path, **overrides):
    write_clip(tmp_path)
    data = {
        "sequences": [
            {"name": "clip", "path": "clip.yuv", "width": 32, "height": 32, "fps": 50}
        ],
        "variants": [
            {"name": "10-10", "encoder_template": MOCK_ENCODE, "decoder_template": MOCK_DECODE},
            {"name": "8-8", "encoder_template": MOCK_ENCODE, "decoder_template": MOCK_DECODE},
        ],
        "host_label": "testhost",
    }
    data.update(overrides)
    return data


def write_config(tmp_path, **overrides):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config_dict(tmp_path, **overrides)))
    return path


class TestLoadConfig:
    def test_happy_path(self, tmp_path):
        config = load_config(write_config(tmp_path))
        assert config.qp_ladder == DEFAULT_QP_LADDER
        assert config.repetitions == 5
        assert config.host_label == "testhost"
        assert config.sequences[0].name == "clip"
        assert config.sequences[0].path == tmp_path / "clip.yuv"
        assert config.variants[0].input_depth == 10
        assert config.variants[1].input_depth == 8
        assert config.store_path == tmp_path / "results.jsonl"

    def test_builtin_variant_depths(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"] = [
            {"name": name, "encoder_template": MOCK_ENCODE, "decoder_template": MOCK_DECODE}
            for name in ("10-10", "8-10", "8-8", "8-8-nosimd")
        ]
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        config = load_config(path)
        table = {
            v.name: (v.input_depth, v.internal_depth, v.simd_enabled) for v in config.variants
        }
        assert table == {
            "10-10": (10, 10, True),
            "8-10": (8, 10, True),
            "8-8": (8, 8, True),
            "8-8-nosimd": (8, 8, False),
        }

    def test_unknown_variant_needs_depths(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"].append(
            {"name": "exotic", "encoder_template": MOCK_ENCODE, "decoder_template": MOCK_DECODE}
        )
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="unknown variant"):
            load_config(path)

    def test_unknown_variant_with_depths_accepted(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"].append(
            {
                "name": "exotic",
                "input_depth": 10,
                "internal_depth": 8,
                "encoder_template": MOCK_ENCODE,
                "decoder_template": MOCK_DECODE,
            }
        )
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        config = load_config(path)
        assert config.variant("exotic").internal_depth == 8

    def test_builtin_variant_contradiction_rejected(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"][0]["input_depth"] = 8  # 10-10 must read 10-bit input
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="contradict"):
            load_config(path)

    def test_missing_sequence_file(self, tmp_path):
        data = config_dict(tmp_path)
        data["sequences"][0]["path"] = "nope.yuv"
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="not found"):
            load_config(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{ nope")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(path)

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_unknown_top_level_key_rejected(self, tmp_path):
        # A typo like "store_path" (the key is "store") must not pass silently.
        with pytest.raises(ConfigError, match="store_path"):
            load_config(write_config(tmp_path, store_path="elsewhere.jsonl"))

    def test_unknown_sequence_key_rejected(self, tmp_path):
        data = config_dict(tmp_path)
        data["sequences"][0]["frame_rate"] = 50
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="frame_rate"):
            load_config(path)

    def test_unknown_variant_key_rejected(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"][0]["encoder"] = "x {INPUT} {OUTPUT}"
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="'encoder'"):
            load_config(path)

    def test_template_needs_placeholders(self, tmp_path):
        data = config_dict(tmp_path)
        data["variants"][0]["encoder_template"] = "encoder --flag"
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="INPUT"):
            load_config(path)

    def test_relative_paths_resolve_against_config(self, tmp_path):
        sub = tmp_path / "nested"
        sub.mkdir()
        write_clip(sub)
        data = config_dict(tmp_path)
        data["store"] = "out/results.jsonl"
        path = sub / "run.json"
        path.write_text(json.dumps(data))
        config = load_config(path)
        assert config.sequences[0].path == sub / "clip.yuv"
        assert config.store_path == sub / "out" / "results.jsonl"


class TestRunConfigValidation:
    def make(self, tmp_path, **overrides):
        clip = write_clip(tmp_path)
        spec = SequenceSpec("clip", clip, PlaneFormat(32, 32, 10), 50.0)
        variant = VariantConfig("10-10", 10, 10, True, MOCK_ENCODE, MOCK_DECODE)
        defaults = dict(sequences=(spec,), variants=(variant,))
        defaults.update(overrides)
        return RunConfig(**defaults)

    def test_defaults(self, tmp_path):
        config = self.make(tmp_path)
        assert config.qp_ladder == (12, 17, 22, 27, 32, 37)
        assert config.cache == "reuse"

    def test_empty_ladder_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="ladder"):
            self.make(tmp_path, qp_ladder=())

    def test_duplicate_qp_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            self.make(tmp_path, qp_ladder=(22, 22, 27, 32))

    def test_zero_repetitions_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="repetitions"):
            self.make(tmp_path, repetitions=0)

    def test_bad_cache_policy_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="cache"):
            self.make(tmp_path, cache="maybe")

    def test_unknown_variant_lookup(self, tmp_path):
        config = self.make(tmp_path)
        with pytest.raises(ConfigError, match="unknown variant"):
            config.variant("8-8")


class TestRenderTemplate:
    def test_substitution_per_token(self):
        argv = render_template(
            "enc --in {INPUT} --qp {QP} --size {WIDTH}x{HEIGHT}",
            {"{INPUT}": "a.yuv", "{QP}": "22", "{WIDTH}": "64", "{HEIGHT}": "48"},
        )
        assert argv == ["enc", "--in", "a.yuv", "--qp", "22", "--size", "64x48"]

    def test_quoted_arguments_with_spaces(self):
        argv = render_template("enc --note 'two words' {INPUT}", {"{INPUT}": "in file.yuv"})
        assert argv == ["enc", "--note", "two words", "in file.yuv"]
