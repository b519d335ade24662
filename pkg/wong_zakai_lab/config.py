"""Run configuration: defaults, environment, ``--config`` files and flags.

Values are layered in increasing precedence: built-in defaults, the
``WZ_LAB_SEED`` environment variable (seed only), the JSON file given with
``--config`` and finally flags given explicitly on the command line.  The
result is validated once, before anything is computed.
"""

import json
import logging
import os
import re
from dataclasses import asdict, dataclass

from .coefficients import VARIANTS
from .errors import ConfigError
from .reporting import write_json

log = logging.getLogger(__name__)

SEED_VARIABLE = "WZ_LAB_SEED"

COMMANDS = ("simulate", "skeleton", "wong-zakai", "support-upper", "support-lower", "truncation", "lyapunov", "plot")

DEFAULTS = {
    "model": "cubic",
    "params": {},
    "x0": None,
    "variant": "skeleton",
    "levels": [2, 4, 6, 8],
    "n": None,
    "delta": 0.25,
    "epsilon": 0.3,
    "M": 500,
    "L": 12,
    "seed": 0,
    "h": None,
    "h_slope": None,
    "R": [1.0, 2.0, 4.0],
    "V": None,
    "theta": None,
    "eta": None,
    "bound_C": None,
    "bound_M": None,
    "domain": "box:-10:10",
    "samples": 2000,
    "target": "model",
    "report": None,
    "out": None,
    "plot": False,
    "workers": 1,
}
"""dict: Every accepted key with its default.  Any other key is rejected."""

COMMAND_DEFAULTS = {
    "support-upper": {"levels": [3, 5, 7], "M": 300},
    "support-lower": {"levels": [3, 5, 7], "M": 300, "h_slope": 1.0},
    "truncation": {"M": 100, "n": 4},
}


@dataclass(frozen=True)
class RunConfig(object):
    """A fully resolved and validated run configuration."""

    command: str
    model: str
    params: dict
    x0: list
    variant: str
    levels: list
    n: int
    delta: float
    epsilon: float
    M: int
    L: int
    seed: int
    h: dict
    h_slope: float
    R: list
    V: str
    theta: float
    eta: float
    bound_C: float
    bound_M: float
    domain: str
    samples: int
    target: str
    report: str
    out: str
    plot: bool
    workers: int

    def to_dict(self):
        return asdict(self)

    def model_document(self):
        return {"model": self.model, "params": dict(self.params), "x0": self.x0}


def _locate(text, key):
    if text is None:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def load_config_file(path):
    """Read a JSON configuration file.

    Returns:
      tuple: ``(values, text)``; the text is kept to point errors at lines.

    Raises:
      ConfigError: If the file cannot be read, is not valid JSON or is not an
        object.
    """
    try:
        with open(path, "r", encoding="utf-8") as stream:
            text = stream.read()
    except IOError as exc:
        raise ConfigError(str(exc.strerror or exc), source=path)
    try:
        values = json.loads(text)
    except ValueError as exc:
        raise ConfigError(exc.msg, source=path, line=exc.lineno, column=exc.colno)
    if not isinstance(values, dict):
        raise ConfigError("configuration must be a JSON object", source=path, line=1)
    return values, text


def _number(key, value, integer=False, positive=False, nonnegative=False, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("%s must be a number, got %r" % (key, value))
    if integer:
        if int(value) != value:
            raise ValueError("%s must be an integer, got %r" % (key, value))
        value = int(value)
    else:
        value = float(value)
    if positive and not value > 0:
        raise ValueError("%s must be positive, got %r" % (key, value))
    if nonnegative and value < 0:
        raise ValueError("%s must be non-negative, got %r" % (key, value))
    return value


def _numbers(key, value, integer=False):
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError("%s must be a non-empty list, got %r" % (key, value))
    return [_number(key, v, integer=integer) for v in value]


def _check(key, value):
    if key in ("model", "domain"):
        if not isinstance(value, str) or not value:
            raise ValueError("%s must be a non-empty string" % key)
        return value
    if key in ("V", "report", "out"):
        if value is not None and not isinstance(value, str):
            raise ValueError("%s must be a string" % key)
        return value
    if key == "params":
        if not isinstance(value, dict):
            raise ValueError("params must be an object")
        return dict(value)
    if key == "x0":
        return None if value is None else [float(v) for v in _numbers(key, value)]
    if key == "variant":
        if value not in VARIANTS:
            raise ValueError("variant must be one of %s, got %r" % (", ".join(VARIANTS), value))
        return value
    if key == "target":
        if value not in ("model", "system"):
            raise ValueError("target must be 'model' or 'system', got %r" % (value,))
        return value
    if key == "levels":
        return _numbers(key, value, integer=True)
    if key == "R":
        return [float(v) for v in _numbers(key, value)]
    if key == "h":
        if value is None:
            return None
        if not isinstance(value, dict) or set(value) != {"breakpoints", "slopes"}:
            raise ValueError("h must be an object with exactly the keys 'breakpoints' and 'slopes'")
        return {"breakpoints": _numbers("h.breakpoints", value["breakpoints"]), "slopes": value["slopes"]}
    if key in ("n",):
        return _number(key, value, integer=True, positive=True, optional=True)
    if key in ("M", "L", "samples", "workers"):
        return _number(key, value, integer=True, positive=True)
    if key == "seed":
        return _number(key, value, integer=True, nonnegative=True)
    if key in ("delta", "epsilon"):
        return _number(key, value, positive=True)
    if key in ("theta", "eta", "bound_C", "bound_M"):
        return _number(key, value, positive=True, optional=True)
    if key == "h_slope":
        return _number(key, value, optional=True)
    if key == "plot":
        if not isinstance(value, bool):
            raise ValueError("plot must be true or false")
        return value
    raise ValueError("unknown key %r" % (key,))


def resolve_config(command, file_values=None, cli_values=None, environ=None, source=None, text=None):
    """Layer and validate the configuration of one run.

    Args:
      command (str): The subcommand.
      file_values (dict): Values read from a ``--config`` file.
      cli_values (dict): Flags given explicitly on the command line.
      environ (mapping): Environment; ``os.environ`` by default.
      source (str): Name of the configuration file, for error messages.
      text (str): Raw text of the configuration file, for line numbers.

    Returns:
      RunConfig

    Raises:
      ConfigError: On unknown keys or invalid values.
    """
    if command not in COMMANDS:
        raise ConfigError("unknown command %r" % (command,))
    environ = os.environ if environ is None else environ
    values = dict(DEFAULTS)
    values.update(COMMAND_DEFAULTS.get(command, {}))
    if environ.get(SEED_VARIABLE):
        try:
            values["seed"] = _check("seed", int(environ[SEED_VARIABLE]))
        except ValueError:
            raise ConfigError("%s must be a non-negative integer, got %r" % (SEED_VARIABLE, environ[SEED_VARIABLE]))
    origin = {}
    file_values = dict(file_values or {})
    stated = file_values.pop("command", command)
    if stated != command:
        raise ConfigError("configuration is for command %r, not %r" % (stated, command), source=source, line=_locate(text, "command"))
    for key, value in file_values.items():
        if key not in DEFAULTS:
            raise ConfigError("unknown key %r" % (key,), source=source, line=_locate(text, key))
        values[key] = value
        origin[key] = (source, _locate(text, key))
    for key, value in (cli_values or {}).items():
        if key not in DEFAULTS:
            raise ConfigError("unknown option %r" % (key,))
        values[key] = value
        origin[key] = (None, None)
    if values["h"] is not None and values["h_slope"] is not None and "h_slope" not in origin:
        values["h_slope"] = None
    for key in DEFAULTS:
        try:
            values[key] = _check(key, values[key])
        except ValueError as exc:
            where, line = origin.get(key, (None, None))
            raise ConfigError(str(exc), source=where, line=line)
    if values["h"] is not None and values["h_slope"] is not None:
        raise ConfigError("give either h or h_slope, not both")
    config = RunConfig(command=command, **values)
    log.debug("Resolved configuration %r", config)
    return config


def write_config(config, path):
    """Write the resolved configuration as JSON, ready for ``--config``."""
    write_json(config.to_dict(), path)
