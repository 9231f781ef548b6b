import pytest

from fedpoison.config import CONFIG_FIELDS, DATA_ROOT_ENV, parse_bool, parse_config
from fedpoison.errors import ConfigError


class TestParseConfig:
    def test_defaults(self):
        config = parse_config()
        assert config.J == 5 and config.T_L == 10 and config.T_FL == 50
        assert config.eta == 0.01 and config.attack == "none"

    def test_file_plus_override_precedence(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("J=5\nT_L=10\n")
        config = parse_config(path, {"seed": "7"})
        assert config.J == 5 and config.T_L == 10 and config.seed == 7

    def test_override_beats_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("J=8\n")
        assert parse_config(path, {"J": "3"}).J == 3

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# a comment\n\nJ=6  # trailing comment\n")
        assert parse_config(path).J == 6

    def test_unknown_key_cites_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("J=5\nbogus=1\n")
        with pytest.raises(ConfigError, match=r":2"):
            parse_config(path)

    def test_unparsable_value_cites_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("J=five\n")
        with pytest.raises(ConfigError, match=r":1"):
            parse_config(path)

    def test_missing_equals_sign(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(tmp_path / "none.cfg")

    def test_zero_clients_violates_invariant(self):
        with pytest.raises(ConfigError, match="J >= 1"):
            parse_config(None, {"J": "0"})

    def test_eavesdrop_beyond_clients(self):
        with pytest.raises(ConfigError, match="eavesdrop_count"):
            parse_config(None, {"J": "5", "eavesdrop_count": "9"})

    def test_bad_choice_value(self):
        with pytest.raises(ConfigError, match="one of"):
            parse_config(None, {"attack": "banana"})

    def test_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(None, {"nope": "1"})

    def test_every_field_accepts_its_default_as_override(self):
        overrides = {}
        for field in CONFIG_FIELDS:
            default = field.default
            if isinstance(default, bool):
                overrides[field.name] = "true" if default else "false"
            else:
                overrides[field.name] = str(default)
        config = parse_config(None, overrides)
        assert config.J == 5

    def test_snapshot_round_trips(self, tmp_path):
        config = parse_config(None, {"J": "7", "attack": "gae", "exclude_flagged": "true"})
        path = tmp_path / "snap.cfg"
        path.write_text("\n".join(config.snapshot_lines()) + "\n")
        assert parse_config(path) == config

    def test_typed_overrides_pass_through(self):
        assert parse_config(None, {"J": 9}).J == 9

    def test_none_overrides_ignored(self):
        assert parse_config(None, {"J": None}).J == 5


class TestHelpers:
    def test_parse_bool(self):
        assert parse_bool("true") and parse_bool("Yes") and parse_bool("1")
        assert not parse_bool("false") and not parse_bool("off")
        with pytest.raises(ValueError):
            parse_bool("maybe")

    def test_data_root_resolution(self, tmp_path, monkeypatch):
        config = parse_config(None, {"data_root": str(tmp_path)})
        assert config.resolve_data_path("x").parent == tmp_path
        monkeypatch.setenv(DATA_ROOT_ENV, str(tmp_path / "env"))
        config = parse_config()
        assert config.resolve_data_path("x").parent == tmp_path / "env"
        assert config.resolve_data_path("/abs/file").as_posix() == "/abs/file"
