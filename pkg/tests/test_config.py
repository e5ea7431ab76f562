"""Tests for pipeline configuration."""

import json

import pytest
import yaml

from dex_multifractal.config import CrossConfig, PairConfig, PipelineConfig, ScaleConfig
from dex_multifractal.errors import ValidationError


@pytest.fixture
def tick_file(tmp_path):
    path = tmp_path / "eth_usdc.csv"
    path.write_text("timestamp_ms,price,volume_usd\n0,100.0,5.0\n1000,101.0,7.0\n")
    return path


@pytest.fixture
def config_data():
    return {
        "pairs": [
            {"pair_id": "eth-usdc", "ticks": ["eth_usdc.csv"]},
            {"pair_id": "cascade", "synthetic": {"kind": "cascade", "levels": 12, "p": 0.7}},
        ],
        "cross": [{"x": "eth-usdc:volatility", "y": "cascade:volume"}],
        "dt_ms": 60_000,
        "q": "-2:2:0.5",
        "scales": {"s_min": 16, "count": 10},
    }


class TestFromDict:
    """Tests for PipelineConfig.from_dict / to_dict."""

    def test_defaults(self):
        config = PipelineConfig.from_dict({})
        assert config.min_volume_usd == 0.01
        assert config.dt_ms == 300_000
        assert config.q == "-4:4:0.2"
        assert config.scales == ScaleConfig(16, None, 40)
        assert config.m == 2
        assert config.fit_range is None
        assert config.acf_max_lag == 500
        assert config.tail_quantile == 0.99
        assert config.rho_q == [2.0]
        assert config.surrogates.kinds == []
        assert config.workers == 1

    def test_nested(self, config_data):
        config = PipelineConfig.from_dict(config_data)
        assert config.pairs[0].ticks[0].path == "eth_usdc.csv"
        assert config.pairs[0].ticks[0].dialect == "generic"
        assert config.pairs[0].source == "ticks"
        assert config.pairs[1].source == "synthetic"
        assert config.cross[0].label == "eth-usdc:volatility~cascade:volume"
        assert config.scales.s_max is None

    def test_unknown_field(self):
        with pytest.raises(ValidationError, match="Unknown config field"):
            PipelineConfig.from_dict({"pairs": [], "window": 5})

    def test_not_a_mapping(self):
        with pytest.raises(ValidationError, match="mapping"):
            PipelineConfig.from_dict(["pairs"])

    def test_pair_without_id(self):
        with pytest.raises(ValidationError, match="pair_id"):
            PipelineConfig.from_dict({"pairs": [{"ticks": ["a.csv"]}]})

    def test_to_dict_round_trip(self, config_data):
        config = PipelineConfig.from_dict(config_data)
        assert PipelineConfig.from_dict(config.to_dict()) == config


class TestLoadSave:
    def test_load_json(self, tmp_path, config_data):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(config_data))
        config = PipelineConfig.load(path)
        assert config.base_dir == tmp_path.resolve()
        assert config.resolve("eth_usdc.csv") == tmp_path.resolve() / "eth_usdc.csv"

    def test_load_yaml(self, tmp_path, config_data):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(config_data))
        assert PipelineConfig.load(path).dt_ms == 60_000

    def test_missing(self, tmp_path):
        with pytest.raises(ValidationError, match="Config file not found"):
            PipelineConfig.load(tmp_path / "nope.json")

    def test_unparsable(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{pairs: ")
        with pytest.raises(ValidationError, match="Cannot parse config"):
            PipelineConfig.load(path)

    @pytest.mark.parametrize("name", ["saved.json", "saved.yaml"])
    def test_save_round_trip(self, tmp_path, config_data, name):
        config = PipelineConfig.from_dict(config_data)
        config.save(tmp_path / name)
        assert PipelineConfig.load(tmp_path / name) == config


class TestContentHash:
    def test_stable(self, config_data):
        a = PipelineConfig.from_dict(config_data)
        b = PipelineConfig.from_dict(json.loads(json.dumps(config_data)))
        assert a.content_hash() == b.content_hash()
        assert len(a.content_hash()) == 64

    def test_ignores_runtime_fields(self, config_data):
        base = PipelineConfig.from_dict(config_data).content_hash()
        other = PipelineConfig.from_dict({**config_data, "workers": 8, "outdir": "elsewhere"})
        assert other.content_hash() == base

    def test_analysis_fields_change_hash(self, config_data):
        base = PipelineConfig.from_dict(config_data).content_hash()
        assert PipelineConfig.from_dict({**config_data, "m": 3}).content_hash() != base

    def test_analysis_dict(self, config_data):
        data = PipelineConfig.from_dict(config_data).analysis_dict()
        assert "workers" not in data
        assert "outdir" not in data
        assert data["q"] == "-2:2:0.5"


class TestValidate:
    """Tests for PipelineConfig.validate."""

    def test_valid(self, tmp_path, tick_file, config_data):
        PipelineConfig.from_dict(config_data, base_dir=tmp_path).validate()

    def test_no_pairs(self):
        with pytest.raises(ValidationError, match="no pairs configured"):
            PipelineConfig().validate()

    def test_missing_tick_file(self, tmp_path, config_data):
        config = PipelineConfig.from_dict(config_data, base_dir=tmp_path)
        with pytest.raises(ValidationError, match="tick file not found: eth_usdc.csv"):
            config.validate()

    def test_collects_all_problems(self, tmp_path, tick_file, config_data):
        config = PipelineConfig.from_dict(
            {**config_data, "m": 7, "dt_ms": 0, "tail_quantile": 1.5, "fit_range": [64, 16]},
            base_dir=tmp_path,
        )
        with pytest.raises(ValidationError) as exc_info:
            config.validate()
        message = str(exc_info.value)
        assert "m must lie in [1, 4]" in message
        assert "dt_ms must be positive" in message
        assert "tail_quantile must lie in (0, 1)" in message
        assert "fit_range must be [s1, s2]" in message

    def test_duplicate_pair(self, tmp_path, tick_file):
        pair = {"pair_id": "eth", "ticks": ["eth_usdc.csv"]}
        config = PipelineConfig.from_dict({"pairs": [pair, pair]}, base_dir=tmp_path)
        with pytest.raises(ValidationError, match="duplicate pair_id 'eth'"):
            config.validate()

    def test_pair_needs_one_source(self, tmp_path, tick_file):
        pair = {"pair_id": "eth", "ticks": ["eth_usdc.csv"], "series": "eth.json"}
        config = PipelineConfig.from_dict({"pairs": [pair]}, base_dir=tmp_path)
        with pytest.raises(ValidationError, match="exactly one of"):
            config.validate()

    def test_unknown_cross_pair(self, tmp_path, tick_file, config_data):
        data = {**config_data, "cross": [{"x": "eth-usdc:volatility", "y": "btc:volume"}]}
        config = PipelineConfig.from_dict(data, base_dir=tmp_path)
        with pytest.raises(ValidationError, match="unknown pair 'btc'"):
            config.validate()

    @pytest.mark.parametrize(
        "synthetic,message",
        [
            ({"kind": "brownian"}, "synthetic kind"),
            ({"kind": "cascade", "p": 0.3}, "p must lie in"),
            ({"kind": "fgn", "H": 1.2}, "fgn H must lie in"),
        ],
    )
    def test_bad_synthetic(self, synthetic, message):
        config = PipelineConfig.from_dict({"pairs": [{"pair_id": "s", "synthetic": synthetic}]})
        with pytest.raises(ValidationError, match=message):
            config.validate()

    def test_bad_surrogate_kind(self):
        config = PipelineConfig.from_dict(
            {
                "pairs": [{"pair_id": "s", "synthetic": {"kind": "fgn"}}],
                "surrogates": {"kinds": ["bootstrap"]},
            }
        )
        with pytest.raises(ValidationError, match="Unknown surrogate kind"):
            config.validate()

    def test_bad_spacing(self):
        config = PipelineConfig.from_dict(
            {
                "pairs": [{"pair_id": "s", "synthetic": {"kind": "fgn"}}],
                "scales": {"spacing": "linear"},
            }
        )
        with pytest.raises(ValidationError, match="scales.spacing must be one of"):
            config.validate()

    def test_output_directory_collision(self):
        config = PipelineConfig.from_dict(
            {
                "pairs": [
                    {"pair_id": "eth/usdc", "synthetic": {"kind": "fgn"}},
                    {"pair_id": "eth:usdc", "synthetic": {"kind": "fgn", "seed": 1}},
                ]
            }
        )
        with pytest.raises(ValidationError, match="share output directory 'eth_usdc'"):
            config.validate()

    def test_cross_label_collision(self):
        config = PipelineConfig.from_dict(
            {
                "pairs": [
                    {"pair_id": "a", "synthetic": {"kind": "fgn"}},
                    {"pair_id": "a_volume_a_volume", "synthetic": {"kind": "fgn"}},
                ],
                "cross": [{"x": "a:volume", "y": "a:volume"}],
            }
        )
        with pytest.raises(ValidationError, match="'a:volume~a:volume' and"):
            config.validate()

    def test_bad_q(self):
        config = PipelineConfig.from_dict(
            {"pairs": [{"pair_id": "s", "synthetic": {"kind": "fgn"}}], "q": "a:b"}
        )
        with pytest.raises(ValidationError, match="Invalid config"):
            config.validate()


class TestParts:
    def test_cross_split(self):
        assert CrossConfig.split("eth-usdc:volume") == ("eth-usdc", "volume")
        assert CrossConfig.split("a:b:volatility") == ("a:b", "volatility")

    @pytest.mark.parametrize("ref", ["volume", ":volume"])
    def test_cross_split_invalid(self, ref):
        with pytest.raises(ValidationError, match="<pair_id>:<kind>"):
            CrossConfig.split(ref)

    def test_pair_string_tick(self):
        pair = PairConfig.from_dict({"pair_id": "eth", "ticks": ["a.csv"]})
        assert pair.to_dict() == {
            "pair_id": "eth",
            "ticks": [{"path": "a.csv", "dialect": "generic"}],
        }

    def test_scale_grid_default_max(self):
        grid = ScaleConfig(s_min=16, count=10).grid(4096)
        assert grid.s_max == 1024
        assert grid.s_min == 16

    def test_scale_grid_too_large(self):
        with pytest.raises(ValidationError, match="exceeds series length"):
            ScaleConfig(s_max=5000).grid(4096)

    def test_scale_grid_dyadic(self):
        grid = ScaleConfig(s_min=16, spacing="dyadic").grid(4096)
        assert grid.scales == (16, 32, 64, 128, 256, 512, 1024)

    def test_scale_spacing_round_trip(self):
        scales = ScaleConfig.from_dict({"s_min": 32, "spacing": "dyadic"})
        assert scales.spacing == "dyadic"
        assert ScaleConfig.from_dict(scales.to_dict()) == scales
        assert ScaleConfig.from_dict({}).spacing == "log"
