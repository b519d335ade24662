"""Report persistence: JSON documents, CSV tables and the SVG convergence chart.

Serialisation is fixed so that equal inputs give equal bytes: JSON keys are
sorted, floats are written by ``repr`` (shortest round trip), non-finite
floats become ``null`` in JSON and empty cells in CSV, and every file uses
LF line endings.
"""

import csv
import io
import json
import logging
import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParameterError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "delta", "M", "escaped", "p_hat", "ci_low", "ci_high")
TRUNCATION_COLUMNS = ("R", "samples", "covered", "equal", "failures", "coverage")

WIDTH = 640
HEIGHT = 400
MARGIN = {"top": 50, "right": 30, "bottom": 60, "left": 70}


def plain(value):
    """Convert numpy values, tuples and non-finite floats to JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(document):
    return json.dumps(plain(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(document, path):
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(dumps_json(document))
    log.debug("Wrote %s", path)


def _cell(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def report_rows(report):
    """The CSV rows of a convergence report, one per level."""
    rows = []
    for estimate in report.estimates:
        values = estimate.to_dict()
        rows.append([_cell(values[column]) for column in CSV_COLUMNS])
    return rows


def write_report_csv(report, stream):
    """Write the per-level table of a convergence report.

    Columns: ``n, delta, M, escaped, p_hat, ci_low, ci_high``.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(report_rows(report))


def write_truncation_csv(report, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRUNCATION_COLUMNS)
    for result in report.results:
        values = result.to_dict()
        writer.writerow([_cell(values[column]) for column in TRUNCATION_COLUMNS])


def _fmt(value):
    return "%.3f" % value


def render_plot(report):
    """The SVG chart of a convergence report as a string.

    One marker per level at ``p_hat`` with a whisker spanning the confidence
    interval.  Each marker is labelled by a ``<text class="p-hat">`` element
    holding ``repr(p_hat)``.

    Raises:
      ParameterError: If the report has fewer than two levels.
    """
    estimates = list(report.estimates)
    if len(estimates) < 2:
        raise ParameterError("a chart needs at least two levels, got %d" % len(estimates))
    left, top = MARGIN["left"], MARGIN["top"]
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    first, last = estimates[0].n, estimates[-1].n

    def x_of(n):
        return left + plot_w * (n - first) / float(last - first)

    def y_of(p):
        return top + plot_h * (1.0 - p)

    title = "%s: P(%s) on %s" % (report.kind, report.event, report.model)
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write('<svg width="%d" height="%d" xmlns="http://www.w3.org/2000/svg">\n' % (WIDTH, HEIGHT))
    out.write('  <rect x="0" y="0" width="%d" height="%d" fill="white"/>\n' % (WIDTH, HEIGHT))
    out.write('  <text x="%s" y="25" text-anchor="middle" font-size="16" font-weight="bold">%s</text>\n' % (_fmt(WIDTH / 2.0), escape(title)))
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _fmt(y_of(tick))
        out.write('  <line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#ddd"/>\n' % (left, y, left + plot_w, y))
        out.write('  <text x="%d" y="%s" text-anchor="end" font-size="12" fill="#666">%s</text>\n' % (left - 8, y, tick))
    out.write('  <line x1="%d" y1="%d" x2="%d" y2="%d" stroke="#333"/>\n' % (left, top + plot_h, left + plot_w, top + plot_h))
    out.write('  <line x1="%d" y1="%d" x2="%d" y2="%d" stroke="#333"/>\n' % (left, top, left, top + plot_h))
    out.write('  <text x="%s" y="%d" text-anchor="middle" font-size="13">n</text>\n' % (_fmt(left + plot_w / 2.0), HEIGHT - 15))
    out.write('  <text x="18" y="%s" text-anchor="middle" font-size="13" transform="rotate(-90 18 %s)">p_hat</text>\n' % (_fmt(top + plot_h / 2.0), _fmt(top + plot_h / 2.0)))
    points = []
    for estimate in estimates:
        if not math.isfinite(estimate.p_hat):
            continue
        x = _fmt(x_of(estimate.n))
        points.append("%s,%s" % (x, _fmt(y_of(estimate.p_hat))))
    if len(points) > 1:
        out.write('  <polyline points="%s" fill="none" stroke="#1f77b4" stroke-width="2"/>\n' % " ".join(points))
    for estimate in estimates:
        x = x_of(estimate.n)
        out.write('  <text x="%s" y="%d" text-anchor="middle" font-size="12" fill="#666">%d</text>\n' % (_fmt(x), top + plot_h + 20, estimate.n))
        if not math.isfinite(estimate.p_hat):
            continue
        low, high = _fmt(y_of(estimate.ci_low)), _fmt(y_of(estimate.ci_high))
        out.write('  <line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#333" stroke-width="1.5"/>\n' % (_fmt(x), low, _fmt(x), high))
        out.write('  <line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#333" stroke-width="1.5"/>\n' % (_fmt(x - 5), low, _fmt(x + 5), low))
        out.write('  <line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#333" stroke-width="1.5"/>\n' % (_fmt(x - 5), high, _fmt(x + 5), high))
        y = _fmt(y_of(estimate.p_hat))
        out.write('  <circle class="marker" cx="%s" cy="%s" r="4" fill="#1f77b4"/>\n' % (_fmt(x), y))
        out.write('  <text class="p-hat" x="%s" y="%s" font-size="11" fill="#333">%s</text>\n' % (_fmt(x + 8), y, repr(float(estimate.p_hat))))
    out.write('  <text x="%d" y="%d" font-size="11" fill="#666">verdict: %s</text>\n' % (left + 10, top + 15, escape(report.verdict)))
    out.write("</svg>\n")
    return out.getvalue()


def emit_plot(report, path):
    """Write the SVG chart of ``report`` to ``path``.

    Raises:
      ParameterError: If the report has fewer than two levels.
      OSError: If ``path`` cannot be written.
    """
    text = render_plot(report)
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)
    log.debug("Wrote chart %s", path)
    return path


def write_outputs(report, directory, config=None, plot=False):
    """Write ``report.json``, a CSV table and optionally ``report.svg``.

    The resolved configuration, when given, is written as ``config.json``.

    Returns:
      list: The paths written.
    """
    os.makedirs(directory, exist_ok=True)
    written = []
    path = os.path.join(directory, "report.json")
    write_json(report.to_dict(), path)
    written.append(path)
    path = os.path.join(directory, "report.csv")
    with open(path, "w", encoding="utf-8", newline="") as stream:
        if hasattr(report, "estimates"):
            write_report_csv(report, stream)
        else:
            write_truncation_csv(report, stream)
    written.append(path)
    if plot and hasattr(report, "estimates") and len(report.estimates) > 1:
        written.append(emit_plot(report, os.path.join(directory, "report.svg")))
    if config is not None:
        path = os.path.join(directory, "config.json")
        write_json(config.to_dict(), path)
        written.append(path)
    log.info("Wrote %s", ", ".join(written))
    return written
