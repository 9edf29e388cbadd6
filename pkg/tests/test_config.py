import pytest

from videoloom.config import DEFAULTS, apply_override, load_config
from videoloom.errors import ConfigError


def test_defaults_load_without_a_file():
    config = load_config()
    assert config == DEFAULTS
    assert config is not DEFAULTS  # callers may mutate their copy


def test_file_values_override_defaults(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[tracker]\nmax_lost_frames = 5\n\n[sampler]\ncount = 24\n")
    config = load_config(str(path))
    assert config["tracker"]["max_lost_frames"] == 5
    assert config["sampler"]["count"] == 24
    assert config["tracker"]["motion"] == "constant-velocity"


def test_set_overrides_parse_json_then_string():
    config = load_config(None, ("tracker.max_lost_frames=7", "tracker.motion=static"))
    assert config["tracker"]["max_lost_frames"] == 7
    assert config["tracker"]["motion"] == "static"


def test_nested_override_reaches_kind_weights():
    config = load_config(None, ("taskgen.kind_weights.location=5.0",))
    assert config["taskgen"]["kind_weights"]["location"] == 5.0
    assert config["taskgen"]["kind_weights"]["action"] == 1.0


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="unknown config key 'tracker.bogus'"):
        apply_override(load_config(), "tracker.bogus=1")
    with pytest.raises(ConfigError, match="unknown config key 'nosuch'"):
        apply_override(load_config(), "nosuch.key=1")


def test_unknown_file_key_is_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[tracker]\ntypo_threshold = 0.5\n")
    with pytest.raises(ConfigError, match="tracker.typo_threshold"):
        load_config(str(path))


def test_malformed_override_shape():
    with pytest.raises(ConfigError, match="stage.key=value"):
        apply_override(load_config(), "justakey")
    with pytest.raises(ConfigError, match="stage and a key"):
        apply_override(load_config(), "flat=1")


def test_missing_config_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.toml")
