"""Monte Carlo estimates of the Wong-Zakai and support-theorem limits.

Each experiment draws ``M`` coupled samples: within a sample every process
being compared is driven by one :class:`~wong_zakai_lab.paths.DyadicWienerPath`.
Samples are processed in fixed-size chunks whose Wiener paths come from
per-sample Philox streams, so a report does not depend on how many worker
threads ran the chunks.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import ParameterError
from .integrators import (
    DriverBundle,
    integrate_ito_limit,
    integrate_mixed,
    integrate_reference,
    integrate_shifted,
    integrate_truncated,
    solve_skeleton,
    solve_skeleton_wn,
    sup_distance,
)
from .paths import MAX_LEVEL, PolygonalPath, sample_wiener

log = logging.getLogger(__name__)

WONG_ZAKAI = "wong_zakai"
SUPPORT_UPPER = "support_upper"
SUPPORT_LOWER = "support_lower"
TRUNCATION = "truncation"

ABOVE = "distance > delta"
BELOW = "distance < epsilon"

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

DEFAULT_DELTA = 0.25
DEFAULT_EPSILON = 0.3
DEFAULT_SAMPLES = 500
DEFAULT_LEVEL = 12
DEFAULT_LEVELS = (2, 4, 6, 8)

MIN_SAMPLES = 100
CHUNK_SIZE = 50
"""int: Samples per work item.  Fixed, so results never depend on the worker count."""

CONFIDENCE = 0.95
ESCAPE_LIMIT = 0.2
"""float: A level whose escape fraction exceeds this makes the experiment inconclusive."""

MIN_DECAY = 0.5
DECAY_FLOOR = 0.1


def wilson_interval(count, total, confidence=CONFIDENCE):
    """Wilson score interval for ``count`` successes out of ``total`` trials.

    At ``count == 0`` and ``count == total`` the interval is one-sided: the
    bound at the observed proportion is exact and the other uses the
    one-sided quantile.

    Returns:
      tuple: ``(low, high)`` with ``0 <= low <= count / total <= high <= 1``.
    """
    count, total = int(count), int(total)
    if total < 0 or not 0 <= count <= total:
        raise ParameterError("need 0 <= count <= total, got %d of %d" % (count, total))
    if total == 0:
        return 0.0, 1.0
    if count == 0:
        z = norm.ppf(confidence)
        return 0.0, float(z * z / (total + z * z))
    if count == total:
        z = norm.ppf(confidence)
        return float(total / (total + z * z)), 1.0
    z = norm.ppf(0.5 + confidence / 2.0)
    p = count / float(total)
    z2n = z * z / total
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * np.sqrt(p * (1.0 - p) / total + z2n / (4.0 * total)) / (1.0 + z2n)
    return float(max(0.0, min(p, centre - half))), float(min(1.0, max(p, centre + half)))


@dataclass(frozen=True)
class ExceedanceEstimate(object):
    """Estimated probability of one event at one dyadic level.

    For the closeness event of the lower support bound ``delta`` holds
    ``epsilon`` and ``exceed_count`` counts samples with distance below it.
    """

    n: int
    delta: float
    samples: int
    exceed_count: int
    escaped_count: int
    p_hat: float
    """float: ``exceed_count`` over the valid samples; NaN when every sample escaped."""
    ci_low: float
    ci_high: float
    median_distance: float

    @classmethod
    def from_distances(cls, n, threshold, distances, event=ABOVE, confidence=CONFIDENCE):
        """Summarise sup distances; ``inf`` marks a sample that did not complete."""
        distances = np.asarray(distances, dtype=float)
        valid = np.isfinite(distances)
        kept = distances[valid]
        count = int(np.sum(kept > threshold) if event == ABOVE else np.sum(kept < threshold))
        total = int(kept.size)
        low, high = wilson_interval(count, total, confidence)
        return cls(
            n=int(n),
            delta=float(threshold),
            samples=int(distances.size),
            exceed_count=count,
            escaped_count=int(distances.size - total),
            p_hat=count / float(total) if total else float("nan"),
            ci_low=low,
            ci_high=high,
            median_distance=float(np.median(kept)) if total else float("nan"),
        )

    @property
    def valid(self):
        return self.samples - self.escaped_count

    @property
    def escape_fraction(self):
        return self.escaped_count / float(self.samples) if self.samples else 0.0

    def to_dict(self):
        return {
            "n": self.n,
            "delta": self.delta,
            "M": self.samples,
            "exceed_count": self.exceed_count,
            "escaped": self.escaped_count,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "median_distance": self.median_distance,
        }


def judge(kind, estimates):
    """The verdict of an experiment from its per-level estimates.

    * ``inconclusive`` if any level has more than :data:`ESCAPE_LIMIT` of its
      samples escaped.
    * For the lower support bound: ``pass`` iff the lower confidence bound at
      the largest level is positive.
    * Otherwise ``pass`` iff consecutive estimates never increase beyond
      overlapping confidence intervals and, when the first estimate is at
      least :data:`DECAY_FLOOR`, the last is below :data:`MIN_DECAY` times it.
    """
    if any(e.escape_fraction > ESCAPE_LIMIT for e in estimates):
        return INCONCLUSIVE
    if kind == SUPPORT_LOWER:
        return PASS if estimates[-1].ci_low > 0.0 else FAIL
    for before, after in zip(estimates, estimates[1:]):
        if after.ci_low > before.ci_high:
            return FAIL
    first, last = estimates[0].p_hat, estimates[-1].p_hat
    if first >= DECAY_FLOOR and not last < MIN_DECAY * first:
        return FAIL
    return PASS


@dataclass(frozen=True)
class ConvergenceReport(object):
    """Per-level estimates of one experiment and their verdict."""

    kind: str
    model: str
    event: str
    estimates: tuple
    verdict: str
    metadata: dict = field(default_factory=dict)
    """dict: Grid level, seed, sample count, control and model description."""

    @property
    def levels(self):
        return [e.n for e in self.estimates]

    @property
    def p_hats(self):
        return [e.p_hat for e in self.estimates]

    @property
    def escape_fraction(self):
        total = sum(e.samples for e in self.estimates)
        return sum(e.escaped_count for e in self.estimates) / float(total) if total else 0.0

    @classmethod
    def from_dict(cls, document):
        """Rebuild a report from its :meth:`to_dict` form, as read back from JSON."""

        def real(value):
            return float("nan") if value is None else float(value)

        try:
            estimates = tuple(
                ExceedanceEstimate(
                    n=int(e["n"]),
                    delta=float(e["delta"]),
                    samples=int(e["M"]),
                    exceed_count=int(e["exceed_count"]),
                    escaped_count=int(e["escaped"]),
                    p_hat=real(e["p_hat"]),
                    ci_low=float(e["ci_low"]),
                    ci_high=float(e["ci_high"]),
                    median_distance=real(e.get("median_distance")),
                )
                for e in document["estimates"]
            )
            return cls(document["experiment"], document["model"], document["event"], estimates, document["verdict"], document.get("metadata", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError("not a convergence report: %s" % (exc,))

    def to_dict(self):
        return {
            "experiment": self.kind,
            "model": self.model,
            "event": self.event,
            "estimates": [e.to_dict() for e in self.estimates],
            "verdict": self.verdict,
            "escape_fraction": self.escape_fraction,
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class TruncationResult(object):
    R: float
    samples: int
    covered: int
    """int: Samples whose untruncated trajectory stayed within radius ``R``."""
    equal: int
    failures: int

    @property
    def coverage(self):
        return self.covered / float(self.samples) if self.samples else 0.0

    def to_dict(self):
        return {
            "R": self.R,
            "samples": self.samples,
            "covered": self.covered,
            "equal": self.equal,
            "failures": self.failures,
            "coverage": self.coverage,
        }


@dataclass(frozen=True)
class TruncationReport(object):
    """Outcome of the localization check for every radius."""

    model: str
    results: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def failures(self):
        return sum(r.failures for r in self.results)

    @property
    def verdict(self):
        return PASS if self.failures == 0 else FAIL

    def to_dict(self):
        return {
            "experiment": TRUNCATION,
            "model": self.model,
            "results": [r.to_dict() for r in self.results],
            "failures": self.failures,
            "verdict": self.verdict,
            "metadata": self.metadata,
        }


def _check_run(levels, threshold, samples, L, seed, name="delta"):
    levels = [int(n) for n in levels]
    if not levels:
        raise ParameterError("at least one level is required")
    if any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ParameterError("levels must be positive and strictly increasing, got %r" % (levels,))
    if int(L) != L or not 1 <= L <= MAX_LEVEL:
        raise ParameterError("grid level L must be an integer in [1, %d], got %r" % (MAX_LEVEL, L))
    if max(levels) + 4 > L:
        raise ParameterError("grid level L=%d is too coarse for n=%d; need L >= n + 4" % (L, max(levels)))
    if int(samples) != samples or samples < MIN_SAMPLES:
        raise ParameterError("need at least %d samples, got %r" % (MIN_SAMPLES, samples))
    if not threshold > 0:
        raise ParameterError("%s must be positive, got %r" % (name, threshold))
    if int(seed) != seed or seed < 0:
        raise ParameterError("seed must be a non-negative integer, got %r" % (seed,))
    return levels


def chunks(samples, size=CHUNK_SIZE):
    """Consecutive sample-index ranges of at most ``size`` samples."""
    return [range(start, min(start + size, samples)) for start in range(0, samples, size)]


def run_chunks(work, samples, workers=1):
    """Apply ``work`` to every chunk of sample indices and gather by chunk.

    ``work`` maps a range of sample indices to an array whose last axis runs
    over those samples.  The pieces are joined along that axis in chunk
    order, whatever order the threads finish in.
    """
    pieces = chunks(samples)
    if workers is None or workers <= 1:
        results = [work(chunk) for chunk in pieces]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, pieces))
    return np.concatenate(results, axis=-1)


def _coupled(W, n, h=None):
    drivers = DriverBundle(W, PolygonalPath(W, n), h)
    if drivers.Wn.source is not drivers.W:
        raise ParameterError("coupling broken: W^n is not built from W")
    return drivers


def _report(kind, model, event, levels, threshold, distances, metadata):
    estimates = []
    for n, row in zip(levels, distances):
        estimate = ExceedanceEstimate.from_distances(n, threshold, row, event)
        log.info("%s n=%d p_hat=%r escaped=%d", kind, n, estimate.p_hat, estimate.escaped_count)
        estimates.append(estimate)
    verdict = judge(kind, estimates)
    log.info("%s on %s: %s", kind, model, verdict)
    return ConvergenceReport(kind, model, event, tuple(estimates), verdict, metadata)


def _describe_h(h):
    return None if h is None else h.to_dict()


def wong_zakai_convergence(system, h, x0, levels=DEFAULT_LEVELS, delta=DEFAULT_DELTA, M=DEFAULT_SAMPLES, L=DEFAULT_LEVEL, seed=0, workers=1, variant=None):
    """Estimate ``P(|Y^n - Z|_inf > delta)`` over the given levels.

    For every sample the limit ``Z`` is integrated once from ``W`` and each
    ``Y^n`` from ``(W, W^n, h)`` with the same ``W``.

    Args:
      system (CoefficientSystem): The coefficients.
      h (CameronMartinPath): The control, or ``None`` for zero.
      x0 (array_like): Initial state.
      levels (sequence of int): Strictly increasing interpolation levels.
      delta (float): Threshold.
      M (int): Number of samples, at least :data:`MIN_SAMPLES`.
      L (int): Grid level, at least ``max(levels) + 4``.
      seed (int): Seed of the Wiener streams.
      workers (int): Threads to run sample chunks on.
      variant (str): Recorded in the metadata when ``system`` came from a model.

    Returns:
      ConvergenceReport
    """
    levels = _check_run(levels, delta, M, L, seed)

    def work(chunk):
        W = sample_wiener(system.d, L, seed, samples=chunk)
        Z = integrate_ito_limit(system, DriverBundle(W, h=h), x0)
        rows = []
        for n in levels:
            Y = integrate_mixed(system, _coupled(W, n, h), x0)
            rows.append(sup_distance(Y, Z))
        log.debug("wong_zakai chunk %d..%d done", chunk.start, chunk.stop - 1)
        return np.array(rows)

    distances = run_chunks(work, M, workers)
    metadata = {"L": L, "seed": seed, "M": M, "levels": levels, "h": _describe_h(h), "x0": np.asarray(x0, dtype=float).tolist(), "variant": variant}
    return _report(WONG_ZAKAI, system.name, ABOVE, levels, delta, distances, metadata)


def support_upper(model, levels=(3, 5, 7), delta=DEFAULT_DELTA, M=DEFAULT_SAMPLES, L=DEFAULT_LEVEL, seed=0, workers=1, x0=None):
    """Estimate ``P(|X - S(w^n)|_inf > delta)``.

    ``X`` is the closed-form solution when the model has one (single-regime
    ``threshold_ou``) and Euler-Maruyama on ``(b, sigma)`` otherwise.
    ``S(w^n)`` is the skeleton driven by the interpolation of the same
    Wiener path.
    """
    levels = _check_run(levels, delta, M, L, seed)
    x0 = model.x0 if x0 is None else x0

    def work(chunk):
        W = sample_wiener(model.noise_dim, L, seed, samples=chunk)
        X = integrate_reference(model, DriverBundle(W), x0)
        rows = []
        for n in levels:
            drivers = _coupled(W, n)
            rows.append(sup_distance(X, solve_skeleton_wn(model, drivers.Wn, x0)))
        log.debug("support_upper chunk %d..%d done", chunk.start, chunk.stop - 1)
        return np.array(rows)

    distances = run_chunks(work, M, workers)
    metadata = {"L": L, "seed": seed, "M": M, "levels": levels, "h": None, "x0": np.asarray(x0, dtype=float).tolist(), "params": model.describe()["params"]}
    return _report(SUPPORT_UPPER, model.name, ABOVE, levels, delta, distances, metadata)


def support_lower(model, h, levels=(3, 5, 7), epsilon=DEFAULT_EPSILON, M=DEFAULT_SAMPLES, L=DEFAULT_LEVEL, seed=0, workers=1, x0=None):
    """Estimate ``P(|X(w - w^n + h) - S(h)|_inf < epsilon)``.

    The verdict passes when the lower confidence bound at the largest level
    is positive.
    """
    levels = _check_run(levels, epsilon, M, L, seed, name="epsilon")
    x0 = model.x0 if x0 is None else x0
    skeleton = solve_skeleton(model, h, x0, L)

    def work(chunk):
        W = sample_wiener(model.noise_dim, L, seed, samples=chunk)
        rows = []
        for n in levels:
            rows.append(sup_distance(integrate_shifted(model, _coupled(W, n, h), x0), skeleton))
        log.debug("support_lower chunk %d..%d done", chunk.start, chunk.stop - 1)
        return np.array(rows)

    distances = run_chunks(work, M, workers)
    metadata = {"L": L, "seed": seed, "M": M, "levels": levels, "h": _describe_h(h), "x0": np.asarray(x0, dtype=float).tolist(), "params": model.describe()["params"]}
    return _report(SUPPORT_LOWER, model.name, BELOW, levels, epsilon, distances, metadata)


def truncation_consistency(system, drivers, x0, R_list, ito_limit=False):
    """Check that truncation at ``R`` leaves paths inside the ball untouched.

    For every sample in ``drivers`` and every radius, a sample whose
    untruncated trajectory stays within ``R`` must be reproduced exactly,
    state for state, by the truncated run.

    Args:
      system (CoefficientSystem): The untruncated system.
      drivers (DriverBundle): Stacked drivers, one sample per seed.
      x0 (array_like): Initial state.
      R_list (sequence of float): Strictly increasing radii.
      ito_limit (bool): Check the limit equation instead of the mixed one.

    Returns:
      TruncationReport
    """
    radii = [float(R) for R in R_list]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ParameterError("radii must be strictly increasing, got %r" % (list(R_list),))
    integrate = integrate_ito_limit if ito_limit else integrate_mixed
    plain = integrate(system, drivers, x0)
    norms = plain.sup_norm()
    count = int(np.size(norms))
    results = []
    for R in radii:
        cut = integrate_truncated(system, R, drivers, x0, ito_limit=ito_limit)
        held = plain.completed & (norms <= R)
        same = np.all(plain.states == cut.states, axis=(-2, -1))
        covered = int(np.sum(held))
        equal = int(np.sum(held & same))
        results.append(TruncationResult(R, count, covered, equal, covered - equal))
        log.info("truncation R=%r covered=%d failures=%d", R, covered, covered - equal)
    metadata = {
        "L": drivers.level,
        "seed": drivers.W.seed,
        "samples": count,
        "n": None if drivers.Wn is None else drivers.Wn.n,
        "h": _describe_h(drivers.h),
        "ito_limit": bool(ito_limit),
    }
    return TruncationReport(system.name, tuple(results), metadata)
