"""Brownian paths on dyadic grids and the controls built from them.

Three path objects live here:

* :class:`DyadicWienerPath` holds Brownian increments on the grid
  ``k / 2**level`` and is the single source of randomness for every driver.
* :class:`PolygonalPath` is the delayed piecewise-linear interpolation
  ``W^n`` of a Wiener path at a coarser level ``n``.  On
  ``[k/2^n, (k+1)/2^n)`` it runs from ``W((k-1)/2^n)`` to ``W(k/2^n)``, so its
  derivative there only depends on the path up to ``k/2^n``.
* :class:`CameronMartinPath` is a continuous piecewise-linear control ``h``
  with piecewise-constant derivative.

All objects are immutable.  Array attributes are flagged read-only and
the classes can be shared freely between worker threads.
"""

import csv
import logging

import numpy as np

from .errors import ParameterError

log = logging.getLogger(__name__)

MAX_LEVEL = 30
"""int: Finest dyadic level :func:`sample_wiener` accepts."""

_SEED_LIMIT = 1 << 64


def _frozen(array):
    array.flags.writeable = False
    return array


def _stream(seed, sample):
    # Philox is counter based: the key selects the stream, the counter walks
    # the increment index.
    return np.random.Generator(np.random.Philox(key=(int(sample) << 64) | int(seed)))


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ParameterError("times must lie in [0, 1]")
    return t


def _locate(breakpoints, t):
    """Find the interval holding ``t`` with half-open ``[a, b)`` intervals.

    Returns the index of the last breakpoint ``<= t``, the interval index
    (the last interval also owns ``t == 1``) and whether ``t`` sits exactly
    on a breakpoint.
    """
    right = np.searchsorted(breakpoints, t, side="right") - 1
    interval = np.minimum(right, len(breakpoints) - 2)
    on_knot = breakpoints[right] == t
    return right, interval, on_knot


def _interpolate(breakpoints, knots, slopes, t):
    t = _check_times(t)
    right, interval, on_knot = _locate(breakpoints, t)
    offset = t - breakpoints[interval]
    inside = np.take(knots, interval, axis=-2) + np.take(slopes, interval, axis=-2) * offset[..., None]
    return np.where(on_knot[..., None], np.take(knots, right, axis=-2), inside)


def _slope_at(breakpoints, slopes, t):
    t = _check_times(t)
    __, interval, __ = _locate(breakpoints, t)
    return np.take(slopes, interval, axis=-2)


class DyadicWienerPath(object):
    """Brownian increments on the dyadic grid of a given level.

    A path either holds a single sample (``increments`` of shape
    ``(2**level, dim)``) or a stack of independent samples along a leading
    axis (shape ``(len(samples), 2**level, dim)``).  Indexing a stacked path
    returns the single-sample path for that position.

    Args:
      increments (array_like): Brownian increments, one row per grid step.
      level (int): Dyadic level ``L`` of the grid.
      seed (int): Seed of the stream the increments were drawn from.
      samples (sequence of int): Sample indices of the stacked rows, or of the
        single path.
    """

    def __init__(self, increments, level, seed=0, samples=None):
        increments = np.array(increments, dtype=float)
        if increments.ndim not in (2, 3):
            raise ParameterError("increments must have shape (2**level, dim) or (samples, 2**level, dim)")
        if not 1 <= level <= MAX_LEVEL or increments.shape[-2] != 1 << level:
            raise ParameterError("increments do not match level %r" % (level,))
        if increments.shape[-1] < 1:
            raise ParameterError("dim must be at least 1")
        if samples is None:
            samples = tuple(range(increments.shape[0])) if increments.ndim == 3 else (0,)
        samples = tuple(int(s) for s in samples)
        expected = increments.shape[0] if increments.ndim == 3 else 1
        if len(samples) != expected:
            raise ParameterError("expected %d sample indices, got %d" % (expected, len(samples)))
        self.level = int(level)
        self.dim = increments.shape[-1]
        self.seed = int(seed)
        self.samples = samples
        self.increments = _frozen(increments)
        values = np.zeros(increments.shape[:-2] + ((1 << level) + 1, self.dim))
        np.cumsum(increments, axis=-2, out=values[..., 1:, :])
        self.values = _frozen(values)
        """numpy.ndarray: ``W(k / 2**level)`` for ``k = 0 .. 2**level``; row 0 is zero."""

    @classmethod
    def from_increments(cls, increments, seed=0):
        """Build a path from explicit increments, inferring the level."""
        increments = np.asarray(increments, dtype=float)
        if increments.ndim == 1:
            increments = increments[:, None]
        steps = increments.shape[-2] if increments.ndim >= 2 else 0
        level = steps.bit_length() - 1
        if steps < 2 or 1 << level != steps:
            raise ParameterError("number of increments must be a power of two, got %d" % steps)
        return cls(increments, level, seed=seed)

    @property
    def is_batch(self):
        return self.increments.ndim == 3

    @property
    def steps(self):
        return 1 << self.level

    @property
    def dt(self):
        return 2.0 ** -self.level

    @property
    def grid(self):
        """numpy.ndarray: The times ``k / 2**level``."""
        return np.arange(self.steps + 1) / float(self.steps)

    def coarsen(self, level):
        """The same Brownian path seen on the coarser grid of ``level``.

        Increments are summed in blocks of ``2**(self.level - level)``.
        """
        if int(level) != level or not 1 <= level <= self.level:
            raise ParameterError("level must be in [1, %d], got %r" % (self.level, level))
        block = 1 << (self.level - int(level))
        shape = self.increments.shape[:-2] + (1 << int(level), block, self.dim)
        return DyadicWienerPath(self.increments.reshape(shape).sum(axis=-2), int(level), seed=self.seed, samples=self.samples)

    def __len__(self):
        if not self.is_batch:
            raise TypeError("a single-sample path has no len()")
        return self.increments.shape[0]

    def __getitem__(self, index):
        if not self.is_batch:
            raise TypeError("a single-sample path cannot be indexed")
        return DyadicWienerPath(self.increments[index], self.level, seed=self.seed, samples=(self.samples[index],))

    def __repr__(self):
        return "<DyadicWienerPath dim=%d level=%d seed=%d samples=%d>" % (
            self.dim,
            self.level,
            self.seed,
            len(self.samples),
        )


def sample_wiener(dim, level, seed, samples=None):
    """Sample a ``dim``-dimensional Brownian path on the grid ``k / 2**level``.

    Increments are ``N(0, 2**-level I)`` drawn from a Philox stream keyed by
    ``(seed, sample index)``.  The same sample index always reproduces the
    same increments, whether it is drawn alone or inside a batch.

    Args:
      dim (int): Noise dimension ``d``.
      level (int): Dyadic level ``L``, at most :data:`MAX_LEVEL`.
      seed (int): 64-bit non-negative seed.
      samples (sequence of int): Sample indices to draw.  ``None`` draws the
        single path of sample index 0.

    Returns:
      DyadicWienerPath: A single path, or a stacked path when ``samples`` is
      given.

    Raises:
      ParameterError: If ``dim``, ``level`` or ``seed`` are out of range.
    """
    if int(dim) != dim or dim < 1:
        raise ParameterError("dim must be a positive integer, got %r" % (dim,))
    if int(level) != level or not 1 <= level <= MAX_LEVEL:
        raise ParameterError("level must be an integer in [1, %d], got %r" % (MAX_LEVEL, level))
    if int(seed) != seed or not 0 <= seed < _SEED_LIMIT:
        raise ParameterError("seed must be a 64-bit non-negative integer, got %r" % (seed,))
    dim, level, seed = int(dim), int(level), int(seed)
    indices = (0,) if samples is None else tuple(int(s) for s in samples)
    if not indices:
        raise ParameterError("at least one sample index is required")
    if any(i < 0 for i in indices):
        raise ParameterError("sample indices must be non-negative")
    scale = 2.0 ** (-0.5 * level)
    blocks = [_stream(seed, i).standard_normal((1 << level, dim)) * scale for i in indices]
    increments = blocks[0] if samples is None else np.stack(blocks)
    log.debug("Sampled %d Wiener path(s) dim=%d level=%d seed=%d", len(indices), dim, level, seed)
    return DyadicWienerPath(increments, level, seed=seed, samples=indices)


class PolygonalPath(object):
    """The delayed polygonal interpolation ``W^n`` of a Wiener path.

    ``W^n(t) = W(underline t) + 2^n (t - uwave t) [W(uwave t) - W(underline t)]``
    with ``uwave t = k / 2^n`` and ``underline t = (k - 1) / 2^n v 0`` for
    ``t`` in ``[k/2^n, (k+1)/2^n)``.

    Args:
      source (DyadicWienerPath): The fine path being interpolated.
      n (int): Interpolation level, ``1 <= n <= source.level``.
    """

    def __init__(self, source, n):
        if int(n) != n or not 1 <= n <= source.level:
            raise ParameterError("interpolation level n=%r must be in [1, %d]" % (n, source.level))
        self.source = source
        self.n = int(n)
        stride = 1 << (source.level - self.n)
        coarse = source.values[..., ::stride, :]
        # knots[k] = W^n(k / 2^n) = W((k - 1) / 2^n v 0), a selection from coarse.
        knots = np.concatenate([coarse[..., :1, :], coarse[..., :-1, :]], axis=-2)
        self.knots = _frozen(knots)
        self.slopes = _frozen(float(1 << self.n) * np.diff(knots, axis=-2))
        """numpy.ndarray: ``2^n (W(k/2^n) - W((k-1)/2^n v 0))`` on interval ``k``."""
        self.breakpoints = _frozen(np.arange((1 << self.n) + 1) / float(1 << self.n))

    @property
    def dim(self):
        return self.source.dim

    def evaluate(self, t):
        """``W^n(t)`` for a time or array of times in ``[0, 1]``."""
        return _interpolate(self.breakpoints, self.knots, self.slopes, t)

    def derivative(self, t):
        """``dW^n/dt`` at ``t``, right-continuous at breakpoints."""
        return _slope_at(self.breakpoints, self.slopes, t)

    def fine_derivative(self):
        """The derivative at every left endpoint of the source grid.

        Returns:
          numpy.ndarray: Shape ``(..., 2**L, d)`` with ``L = source.level``.
        """
        return np.repeat(self.slopes, 1 << (self.source.level - self.n), axis=-2)

    def __repr__(self):
        return "<PolygonalPath n=%d of %r>" % (self.n, self.source)


def linearize(W, n):
    """Build the delayed polygonal interpolation ``W^n`` of ``W``.

    Raises:
      ParameterError: If ``n`` exceeds the level of ``W``.
    """
    return PolygonalPath(W, n)


class CameronMartinPath(object):
    """A piecewise-linear control ``h`` with ``h(0) = 0``.

    Args:
      breakpoints (array_like): Strictly increasing times from 0 to 1.
      slopes (array_like): One derivative vector per interval, shape
        ``(..., len(breakpoints) - 1, d)``.  A 1-d array is read as a scalar
        control.
      knots (array_like): Values of ``h`` at the breakpoints.  Computed from
        the slopes when omitted.
    """

    def __init__(self, breakpoints, slopes, knots=None):
        breakpoints = np.array(breakpoints, dtype=float)
        slopes = np.array(slopes, dtype=float)
        if breakpoints.ndim != 1 or len(breakpoints) < 2:
            raise ParameterError("breakpoints must be a sequence of at least two times")
        if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
            raise ParameterError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise ParameterError("breakpoints must be strictly increasing")
        if slopes.ndim == 1:
            slopes = slopes[:, None]
        if slopes.ndim < 2 or slopes.shape[-2] != len(breakpoints) - 1:
            raise ParameterError("expected one slope per interval (%d), got shape %r" % (len(breakpoints) - 1, slopes.shape))
        if not np.all(np.isfinite(slopes)):
            raise ParameterError("slopes must be finite")
        if knots is None:
            knots = np.zeros(slopes.shape[:-2] + (len(breakpoints), slopes.shape[-1]))
            np.cumsum(slopes * np.diff(breakpoints)[:, None], axis=-2, out=knots[..., 1:, :])
        else:
            knots = np.array(knots, dtype=float)
        self.breakpoints = _frozen(breakpoints)
        self.slopes = _frozen(slopes)
        self.knots = _frozen(knots)

    @classmethod
    def constant(cls, dim, slope):
        """The control ``h(t) = slope * t`` on a single interval."""
        slope = np.broadcast_to(np.asarray(slope, dtype=float), (dim,))
        return cls([0.0, 1.0], slope[None, :])

    @classmethod
    def zero(cls, dim):
        return cls.constant(dim, 0.0)

    @property
    def dim(self):
        return self.slopes.shape[-1]

    def evaluate(self, t):
        return _interpolate(self.breakpoints, self.knots, self.slopes, t)

    def derivative(self, t):
        return _slope_at(self.breakpoints, self.slopes, t)

    def on_grid(self, level):
        """``dh/dt`` at the left endpoints ``i / 2**level``, shape ``(..., 2**level, d)``."""
        return self.derivative(np.arange(1 << level) / float(1 << level))

    def energy(self):
        """``int_0^1 |dh/dt|^2 dt``."""
        return np.sum(np.sum(self.slopes ** 2, axis=-1) * np.diff(self.breakpoints), axis=-1)

    def to_dict(self):
        if self.slopes.ndim != 2:
            raise ParameterError("only single controls can be serialised")
        return {"breakpoints": self.breakpoints.tolist(), "slopes": self.slopes.tolist()}

    def __repr__(self):
        return "<CameronMartinPath dim=%d intervals=%d>" % (self.dim, len(self.breakpoints) - 1)


def evaluate_h(h, t):
    """``h(t)``; raises :class:`ParameterError` for ``t`` outside ``[0, 1]``."""
    return h.evaluate(t)


def derivative_h(h, t):
    """``dh/dt`` at ``t``, taking the slope of the interval that starts at ``t``."""
    return h.derivative(t)


def wn_as_cameron_martin(Wn):
    """View ``W^n`` as a Cameron-Martin control.

    The result shares the knots and slopes of ``Wn``, so both evaluate to
    bit-identical values everywhere.
    """
    return CameronMartinPath(Wn.breakpoints, Wn.slopes, knots=Wn.knots)


def write_path_csv(W, stream):
    """Write a single Wiener path as CSV with columns ``t, w_1 .. w_d``.

    Args:
      W (DyadicWienerPath): A single-sample path.
      stream: A text file opened with ``newline=""``.
    """
    if W.is_batch:
        raise ParameterError("only single-sample paths can be exported")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t"] + ["w_%d" % (j + 1) for j in range(W.dim)])
    for t, row in zip(W.grid, W.values):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
