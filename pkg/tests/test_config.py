import json

import pytest

from wong_zakai_lab.config import DEFAULTS, SEED_VARIABLE, load_config_file, resolve_config, write_config
from wong_zakai_lab.errors import ConfigError


def _write(tmp_path, text):
    path = tmp_path / "run.json"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults():
    config = resolve_config("wong-zakai", environ={})
    assert config.levels == [2, 4, 6, 8]
    assert (config.delta, config.M, config.L, config.seed) == (0.25, 500, 12, 0)
    assert config.model == "cubic"
    assert sorted(config.to_dict()) == sorted(list(DEFAULTS) + ["command"])


def test_command_defaults():
    upper = resolve_config("support-upper", environ={})
    assert (upper.levels, upper.M) == ([3, 5, 7], 300)
    lower = resolve_config("support-lower", environ={})
    assert lower.h_slope == 1.0
    assert resolve_config("truncation", environ={}).n == 4


def test_precedence(tmp_path):
    path = _write(tmp_path, json.dumps({"seed": 5, "M": 200, "delta": 0.5}))
    values, text = load_config_file(path)
    config = resolve_config("wong-zakai", values, {"M": 150}, {SEED_VARIABLE: "9"}, path, text)
    assert config.seed == 5
    assert config.M == 150
    assert config.delta == 0.5


def test_environment_seed():
    assert resolve_config("simulate", environ={SEED_VARIABLE: "17"}).seed == 17
    assert resolve_config("simulate", {}, {"seed": 3}, {SEED_VARIABLE: "17"}).seed == 3
    with pytest.raises(ConfigError, match=SEED_VARIABLE):
        resolve_config("simulate", environ={SEED_VARIABLE: "abc"})


def test_unknown_key_names_its_line(tmp_path):
    path = _write(tmp_path, '{\n  "seed": 1,\n  "sead": 2\n}\n')
    values, text = load_config_file(path)
    with pytest.raises(ConfigError) as info:
        resolve_config("simulate", values, environ={}, source=path, text=text)
    assert str(info.value).startswith("%s:3: " % path)
    assert info.value.line == 3


def test_syntax_error_names_line_and_column(tmp_path):
    path = _write(tmp_path, '{\n  "seed": 1,\n  "M": }\n')
    with pytest.raises(ConfigError) as info:
        load_config_file(path)
    assert (info.value.line, info.value.column) == (3, 8)
    assert str(info.value).startswith("%s:3:8: " % path)


def test_config_must_be_an_object(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(_write(tmp_path, "[1, 2]"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "absent.json"))


@pytest.mark.parametrize(
    "key, value",
    [
        ("M", 0),
        ("M", 2.5),
        ("L", "12"),
        ("seed", -1),
        ("delta", -0.1),
        ("levels", []),
        ("levels", [1, "x"]),
        ("variant", "sideways"),
        ("target", "both"),
        ("plot", "yes"),
        ("params", [1]),
        ("h", {"breakpoints": [0, 1]}),
        ("model", ""),
    ],
)
def test_bad_values(tmp_path, key, value):
    path = _write(tmp_path, json.dumps({key: value}, indent=1))
    values, text = load_config_file(path)
    with pytest.raises(ConfigError) as info:
        resolve_config("wong-zakai", values, environ={}, source=path, text=text)
    assert info.value.line == 2


def test_command_mismatch(tmp_path):
    path = _write(tmp_path, json.dumps({"command": "simulate"}))
    values, text = load_config_file(path)
    with pytest.raises(ConfigError, match="simulate"):
        resolve_config("wong-zakai", values, environ={}, source=path, text=text)


def test_control_given_twice():
    h = {"breakpoints": [0.0, 1.0], "slopes": [[1.0]]}
    with pytest.raises(ConfigError):
        resolve_config("support-lower", {"h": h, "h_slope": 2.0}, environ={})
    assert resolve_config("support-lower", {"h": h}, environ={}).h_slope is None


def test_integers_are_normalised():
    config = resolve_config("wong-zakai", {"M": 200.0, "levels": [1.0, 2]}, environ={})
    assert config.M == 200 and isinstance(config.M, int)
    assert config.levels == [1, 2]


def test_written_config_resolves_to_itself(tmp_path):
    config = resolve_config("support-upper", {"model": "sir", "params": {"beta": 0.3}}, {"seed": 8}, environ={})
    path = str(tmp_path / "config.json")
    write_config(config, path)
    values, text = load_config_file(path)
    assert resolve_config("support-upper", values, environ={SEED_VARIABLE: "1"}, source=path, text=text) == config
