"""The ``wz-lab`` command line.

Exit codes: 0 on success, 1 on invalid input, 2 when an experiment is
inconclusive because too many samples escaped, 3 when an experiment or
audit fails its pass criterion.
"""

import argparse
import json
import logging
import os
import sys

from . import __version__
from .coefficients import reduce_to_wz_form
from .config import load_config_file, resolve_config, write_config
from .errors import ConfigError, LabError
from .experiments import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    ConvergenceReport,
    support_lower,
    support_upper,
    truncation_consistency,
    wong_zakai_convergence,
)
from .integrators import DriverBundle, integrate_mixed, integrate_sde, solve_skeleton
from .lyapunov import LyapunovData, audit
from .models.registry import builtin, list_models
from .paths import CameronMartinPath, sample_wiener
from .reporting import dumps_json, emit_plot, write_json, write_outputs

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INCONCLUSIVE = 2
EXIT_FAILED = 3

_VERDICT_CODES = {PASS: EXIT_OK, INCONCLUSIVE: EXIT_INCONCLUSIVE, FAIL: EXIT_FAILED}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got %r" % (text,))


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % (text,))


def _param(text):
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("expected KEY=VALUE, got %r" % (text,))
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return key.strip(), value


def _common(parser):
    parser.add_argument("--config", help="JSON file with run settings; explicit flags take precedence")
    parser.add_argument("--model", help="builtin model (%s)" % ", ".join(list_models()))
    parser.add_argument("--param", dest="params", action="append", type=_param, metavar="KEY=VALUE", help="model parameter, value parsed as JSON")
    parser.add_argument("--x0", type=_floats, help="initial state, comma separated")
    parser.add_argument("--seed", type=int, help="seed of the Wiener streams (default $WZ_LAB_SEED or 0)")
    parser.add_argument("--L", type=int, help="dyadic level of the time grid")
    parser.add_argument("--workers", type=int, help="threads running sample chunks; results do not depend on it")
    parser.add_argument("--out", help="output file or directory")
    parser.add_argument("-v", "--verbose", action="count", help="log more (-v info, -vv debug)")


def _experiment(parser, threshold="delta"):
    parser.add_argument("--levels", type=_ints, help="strictly increasing interpolation levels, comma separated")
    parser.add_argument("--M", type=int, help="number of Monte Carlo samples")
    parser.add_argument("--%s" % threshold, type=float, help="distance threshold")
    parser.add_argument("--plot", action="store_true", help="also write report.svg into --out")


def _control(parser):
    parser.add_argument("--h-slope", dest="h_slope", type=float, help="control h(t) = c t in every noise coordinate")


def _variant(parser):
    parser.add_argument("--variant", help="coefficient form: skeleton, shifted or direct")


def build_parser():
    parser = _Parser(prog="wz-lab", description="Wong-Zakai approximation and support-theorem experiments for SDEs.", argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    sub = commands.add_parser("simulate", help="simulate one trajectory of X, or of Y^n with --n", argument_default=argparse.SUPPRESS)
    _common(sub)
    _variant(sub)
    _control(sub)
    sub.add_argument("--n", type=int, help="interpolation level; integrates the mixed equation of --variant")

    sub = commands.add_parser("skeleton", help="solve the skeleton S(h)", argument_default=argparse.SUPPRESS)
    _common(sub)
    _control(sub)

    sub = commands.add_parser("wong-zakai", help="estimate P(|Y^n - Z| > delta) over levels", argument_default=argparse.SUPPRESS)
    _common(sub)
    _variant(sub)
    _control(sub)
    _experiment(sub)

    sub = commands.add_parser("support-upper", help="estimate P(|X - S(w^n)| > delta) over levels", argument_default=argparse.SUPPRESS)
    _common(sub)
    _experiment(sub)

    sub = commands.add_parser("support-lower", help="estimate P(|X(w - w^n + h) - S(h)| < epsilon) over levels", argument_default=argparse.SUPPRESS)
    _common(sub)
    _control(sub)
    _experiment(sub, threshold="epsilon")

    sub = commands.add_parser("truncation", help="check that truncation leaves paths inside the ball untouched", argument_default=argparse.SUPPRESS)
    _common(sub)
    _variant(sub)
    _control(sub)
    sub.add_argument("--n", type=int, help="interpolation level")
    sub.add_argument("--M", type=int, help="number of seeds")
    sub.add_argument("--R", type=_floats, help="increasing radii, comma separated")

    sub = commands.add_parser("lyapunov", help="audit the Lyapunov conditions on a sampled domain", argument_default=argparse.SUPPRESS)
    _common(sub)
    _variant(sub)
    sub.add_argument("--V", help="Lyapunov function, e.g. 'x1^2 + x2^2'; the model's own when omitted")
    sub.add_argument("--theta", type=float)
    sub.add_argument("--eta", type=float)
    sub.add_argument("--bound-C", dest="bound_C", type=float, help="growth constant C")
    sub.add_argument("--bound-M", dest="bound_M", type=float, help="trace constant M")
    sub.add_argument("--domain", help="box:LOW:HIGH, ball:R or logradial:RMIN:RMAX")
    sub.add_argument("--samples", type=int, help="number of sample points")
    sub.add_argument("--target", help="'model' for the SDE conditions, 'system' for the coefficient system of --variant")

    sub = commands.add_parser("plot", help="draw the SVG chart of a saved report", argument_default=argparse.SUPPRESS)
    sub.add_argument("--report", help="report.json written by an experiment")
    sub.add_argument("--out", help="SVG file to write")
    sub.add_argument("-v", "--verbose", action="count")
    return parser


def _setup_logging(verbosity):
    level = logging.WARNING if not verbosity else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_control(config, dim):
    """The Cameron-Martin control described by ``config``, or ``None``."""
    if config.h is not None:
        return CameronMartinPath(config.h["breakpoints"], config.h["slopes"])
    if config.h_slope is not None:
        return CameronMartinPath.constant(dim, config.h_slope)
    return None


def _write_trajectory(trajectory, config, stdout):
    if config.out is None:
        trajectory.write_csv(stdout)
        return
    with open(config.out, "w", encoding="utf-8", newline="") as stream:
        trajectory.write_csv(stream)
    write_config(config, os.path.splitext(config.out)[0] + ".config.json")


def _finish(report, config, stdout):
    if config.out is None:
        stdout.write(dumps_json(report.to_dict()))
    else:
        write_outputs(report, config.out, config, config.plot)
    return _VERDICT_CODES[report.verdict]


def _simulate(config, model, stdout):
    W = sample_wiener(model.noise_dim, config.L, config.seed)
    if config.n is None:
        trajectory = integrate_sde(model, DriverBundle(W))
    else:
        drivers = DriverBundle.coupled(W, config.n, build_control(config, model.noise_dim))
        trajectory = integrate_mixed(reduce_to_wz_form(model, config.variant), drivers, model.x0)
    if trajectory.status_name != "completed":
        log.warning("trajectory stopped early: %s at t=%r", trajectory.status_name, float(trajectory.event_time))
    _write_trajectory(trajectory, config, stdout)
    return EXIT_OK


def _skeleton(config, model, stdout):
    h = build_control(config, model.noise_dim) or CameronMartinPath.zero(model.noise_dim)
    trajectory = solve_skeleton(model, h, level=config.L)
    _write_trajectory(trajectory, config, stdout)
    return EXIT_OK


def _wong_zakai(config, model, stdout):
    report = wong_zakai_convergence(
        reduce_to_wz_form(model, config.variant),
        build_control(config, model.noise_dim),
        model.x0,
        config.levels,
        config.delta,
        config.M,
        config.L,
        config.seed,
        config.workers,
        variant=config.variant,
    )
    return _finish(report, config, stdout)


def _support_upper(config, model, stdout):
    report = support_upper(model, config.levels, config.delta, config.M, config.L, config.seed, config.workers)
    return _finish(report, config, stdout)


def _support_lower(config, model, stdout):
    h = build_control(config, model.noise_dim) or CameronMartinPath.zero(model.noise_dim)
    report = support_lower(model, h, config.levels, config.epsilon, config.M, config.L, config.seed, config.workers)
    return _finish(report, config, stdout)


def _truncation(config, model, stdout):
    W = sample_wiener(model.noise_dim, config.L, config.seed, samples=range(config.M))
    drivers = DriverBundle.coupled(W, config.n, build_control(config, model.noise_dim))
    report = truncation_consistency(reduce_to_wz_form(model, config.variant), drivers, model.x0, config.R)
    return _finish(report, config, stdout)


def _lyapunov(config, model, stdout):
    if config.V is not None:
        lyap = LyapunovData.from_expression(
            config.V,
            model.dim,
            theta=config.theta or 1.0,
            eta=config.eta or 1.0,
            C=config.bound_C or 1.0,
            M=config.bound_M or 1.0,
        )
    else:
        lyap = model.lyapunov(config.theta, config.eta).with_constants(C=config.bound_C, M=config.bound_M)
    target = model if config.target == "model" else reduce_to_wz_form(model, config.variant)
    report = audit(target, lyap, config.domain, config.samples, config.seed)
    if config.out is None:
        stdout.write(dumps_json(report.to_dict()))
    else:
        os.makedirs(config.out, exist_ok=True)
        write_json(report.to_dict(), os.path.join(config.out, "audit.json"))
        write_config(config, os.path.join(config.out, "config.json"))
    return EXIT_OK if report.passed else EXIT_FAILED


def _plot(config, model, stdout):
    if config.report is None or config.out is None:
        raise ConfigError("plot needs --report and --out")
    try:
        with open(config.report, "r", encoding="utf-8") as stream:
            document = json.load(stream)
    except ValueError as exc:
        raise ConfigError(str(exc), source=config.report)
    emit_plot(ConvergenceReport.from_dict(document), config.out)
    return EXIT_OK


_HANDLERS = {
    "simulate": _simulate,
    "skeleton": _skeleton,
    "wong-zakai": _wong_zakai,
    "support-upper": _support_upper,
    "support-lower": _support_lower,
    "truncation": _truncation,
    "lyapunov": _lyapunov,
    "plot": _plot,
}


def run(argv=None, stdout=None, stderr=None, environ=None):
    """Run one ``wz-lab`` command and return its exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        try:
            options = vars(build_parser().parse_args(argv))
        except SystemExit as exc:
            return int(exc.code or 0)
        command = options.pop("command")
        _setup_logging(options.pop("verbose", 0))
        file_values, text, source = {}, None, options.pop("config", None)
        if source is not None:
            file_values, text = load_config_file(source)
        if "params" in options:
            options["params"] = dict(options["params"])
        config = resolve_config(command, file_values, options, environ, source, text)
        model = None if command == "plot" else builtin(config.model, config.params, config.x0)
        return _HANDLERS[command](config, model, stdout)
    except LabError as exc:
        stderr.write("wz-lab: error: %s\n" % exc)
        return EXIT_INVALID
    except OSError as exc:
        stderr.write("wz-lab: error: %s\n" % exc)
        return EXIT_INVALID


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
