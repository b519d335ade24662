"""Time stepping for the mixed-driver equation, its Ito limit and the skeletons.

Stochastic equations use Euler-Maruyama on the grid of the Wiener path,
deterministic skeletons use the classical fourth-order Runge-Kutta method
with the control frozen on each fine step.  Controls (``dh/dt`` and
``dW^n/dt``) are read at left endpoints.

Integration never raises on blow-up.  A sample whose state stops being
finite, grows beyond :data:`BLOWUP` or leaves the admissible region is
frozen, its remaining states are filled with NaN and the event is recorded
in :attr:`Trajectory.status`.
"""

import csv
import logging

import numpy as np

from .coefficients import SHIFTED, DIRECT, SKELETON, apply_gradient, reduce_to_wz_form, truncate_system
from .errors import ParameterError
from .paths import PolygonalPath, wn_as_cameron_martin

log = logging.getLogger(__name__)

COMPLETED = 0
ESCAPED = 1
NONFINITE = 2
STATUS_NAMES = ("completed", "escaped", "nonfinite")

BLOWUP = 1e150
"""float: Any state component beyond this magnitude marks the sample nonfinite."""

MIN_LEVEL_GAP = 4
"""int: The Wiener grid must be at least this many levels finer than ``W^n``."""


class Trajectory(object):
    """Simulated states on the uniform grid ``t_i = i / 2**level``.

    Args:
      states (numpy.ndarray): Shape ``(2**level + 1, m)`` or
        ``(samples, 2**level + 1, m)``.
      status (numpy.ndarray): One of :data:`COMPLETED`, :data:`ESCAPED`,
        :data:`NONFINITE` per sample.
      event_time (numpy.ndarray): Time of the escape or failure, NaN for
        completed samples.
      level (int): Dyadic level of the grid.
    """

    def __init__(self, states, status, event_time, level):
        self.states = states
        self.status = np.asarray(status)
        self.event_time = np.asarray(event_time, dtype=float)
        self.level = int(level)

    @property
    def is_batch(self):
        return self.states.ndim == 3

    @property
    def dim(self):
        return self.states.shape[-1]

    @property
    def grid(self):
        steps = 1 << self.level
        return np.arange(steps + 1) / float(steps)

    @property
    def completed(self):
        """numpy.ndarray: Whether each sample ran to ``t = 1``."""
        return self.status == COMPLETED

    @property
    def status_name(self):
        if self.is_batch:
            raise TypeError("a batch of trajectories has one status per sample")
        return STATUS_NAMES[int(self.status)]

    @property
    def final(self):
        return self.states[..., -1, :]

    def sup_norm(self):
        """``max_i |x_i|``, or ``inf`` where the sample did not complete."""
        norms = np.max(np.linalg.norm(self.states, axis=-1), axis=-1)
        return np.where(self.completed, norms, np.inf)

    def __len__(self):
        if not self.is_batch:
            raise TypeError("a single trajectory has no len()")
        return self.states.shape[0]

    def __getitem__(self, index):
        if not self.is_batch:
            raise TypeError("a single trajectory cannot be indexed")
        return Trajectory(self.states[index], self.status[index], self.event_time[index], self.level)

    def write_csv(self, stream):
        """Write ``t, x_1 .. x_m`` rows followed by a ``status`` footer row.

        The footer holds the status name and the event time (empty when the
        trajectory completed).
        """
        if self.is_batch:
            raise ParameterError("only single trajectories can be exported")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["t"] + ["x_%d" % (j + 1) for j in range(self.dim)])
        for t, row in zip(self.grid, self.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        event = "" if np.isnan(self.event_time) else repr(float(self.event_time))
        writer.writerow(["status", self.status_name, event])

    def __repr__(self):
        if self.is_batch:
            counts = np.bincount(self.status.ravel(), minlength=3)
            return "<Trajectory samples=%d level=%d completed=%d escaped=%d nonfinite=%d>" % (
                len(self),
                self.level,
                counts[COMPLETED],
                counts[ESCAPED],
                counts[NONFINITE],
            )
        return "<Trajectory level=%d %s>" % (self.level, self.status_name)


class DriverBundle(object):
    """The drivers of one (batch of) integration(s).

    Args:
      W (DyadicWienerPath): The Brownian source.
      Wn (PolygonalPath): Its delayed interpolation, built from ``W`` itself.
      h (CameronMartinPath): A deterministic control.

    Raises:
      ParameterError: If ``Wn`` was built from a different path or the
        dimensions disagree.
    """

    def __init__(self, W, Wn=None, h=None):
        self.W = W
        self.Wn = Wn
        self.h = h
        self.check_coupling()
        if h is not None and h.dim != W.dim:
            raise ParameterError("control has dimension %d but the noise has %d" % (h.dim, W.dim))

    def check_coupling(self):
        """Raise :class:`ParameterError` unless ``Wn`` interpolates ``W`` itself."""
        if self.Wn is not None and self.Wn.source is not self.W:
            raise ParameterError("W^n must be derived from the same Wiener path W")

    @classmethod
    def coupled(cls, W, n=None, h=None):
        """Bundle ``W`` with its own interpolation at level ``n``."""
        return cls(W, None if n is None else PolygonalPath(W, n), h)

    @property
    def level(self):
        return self.W.level

    def __repr__(self):
        return "<DriverBundle W=%r n=%s h=%r>" % (self.W, None if self.Wn is None else self.Wn.n, self.h)


def _initial(m, x0, batch):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1:] != (m,):
        raise ParameterError("initial state must have dimension %d, got shape %r" % (m, x0.shape))
    return np.array(np.broadcast_to(x0, batch + (m,)), dtype=float)


def _apply(A, v):
    return np.einsum("...ij,...j->...i", A, v)


def _control_on_grid(h, level):
    if h is None:
        return None
    scaled = h.breakpoints * float(1 << level)
    if np.any(scaled != np.round(scaled)):
        raise ParameterError("control breakpoints must lie on the grid of level %d" % level)
    return h.on_grid(level)


class _Events(object):
    """Per-sample status bookkeeping for one integration."""

    def __init__(self, batch, region, dt, escape_radius=None):
        self.region = region
        self.dt = dt
        self.escape_radius = escape_radius
        self.status = np.full(batch, COMPLETED)
        self.time = np.full(batch, np.nan)

    def record(self, i, x, states, restart):
        running = self.status == COMPLETED
        bad = ~np.all(np.isfinite(x), axis=-1) | np.any(np.abs(x) > BLOWUP, axis=-1)
        out = ~self.region.contains(np.where(bad[..., None], 0.0, x))
        if self.escape_radius is not None:
            out |= np.linalg.norm(x, axis=-1) > self.escape_radius
        failed = running & bad
        escaped = running & ~bad & out
        states[..., i, :] = np.where(running[..., None], x, np.nan)
        self.status = np.where(failed, NONFINITE, np.where(escaped, ESCAPED, self.status))
        self.time = np.where(failed | escaped, i * self.dt, self.time)
        still = self.status == COMPLETED
        return np.where(still[..., None], x, restart)

    def trajectory(self, states, level):
        return Trajectory(states, self.status, self.time, level)


def _euler(system, W, x0, hdot=None, wdot=None, ito=False, escape_radius=None):
    if system.d != W.dim:
        raise ParameterError("system has noise dimension %d but W has %d" % (system.d, W.dim))
    batch = W.increments.shape[:-2]
    steps, dt = W.steps, W.dt
    x = _initial(system.m, x0, batch)
    start = x.copy()
    if hdot is None:
        hdot = np.zeros((steps, system.d))
    if wdot is None:
        wdot = np.zeros((steps, system.d))
    states = np.empty(batch + (steps + 1, system.m))
    states[..., 0, :] = x
    events = _Events(batch, system.region, dt, escape_radius)
    with np.errstate(all="ignore"):
        for i in range(steps):
            dw = W.increments[..., i, :]
            if ito:
                G, F = system.G(x), system.F(x)
                drift = system.B(x) + _apply(system.H(x), hdot[..., i, :]) + apply_gradient(system.gradG(x), F + 0.5 * G)
                x = x + drift * dt + _apply(F + G, dw)
            else:
                # H dh + G dW^n is summed before B is added, so that opposite
                # H and G cancel exactly when dh = dW^n.
                drift = system.B(x) + (_apply(system.H(x), hdot[..., i, :]) + _apply(system.G(x), wdot[..., i, :]))
                x = x + drift * dt + _apply(system.F(x), dw)
            x = events.record(i + 1, x, states, start)
    return events.trajectory(states, W.level)


def integrate_mixed(system, drivers, x0, escape_radius=None):
    """Euler-Maruyama for ``dY = B dt + H dh + G dW^n + F dW``.

    ``x_{i+1} = x_i + [B(x_i) + H(x_i) h'(t_i) + G(x_i) W^n'(t_i)] dt + F(x_i) dW_i``
    on the grid of ``drivers.W``.  A missing ``h`` is the zero control.

    Args:
      system (CoefficientSystem): The coefficients.
      drivers (DriverBundle): Must carry ``Wn``.
      x0 (array_like): Initial state, or one per sample.
      escape_radius (float): Samples whose state norm exceeds this radius are
        marked escaped.

    Returns:
      Trajectory

    Raises:
      ParameterError: If ``Wn`` is missing, not coupled to ``W`` or too coarse
        a grid is used.
    """
    if drivers.Wn is None:
        raise ParameterError("the mixed-driver equation needs W^n")
    drivers.check_coupling()
    if drivers.W.level < drivers.Wn.n + MIN_LEVEL_GAP:
        raise ParameterError("grid level %d must be at least n + %d = %d" % (drivers.W.level, MIN_LEVEL_GAP, drivers.Wn.n + MIN_LEVEL_GAP))
    hdot = _control_on_grid(drivers.h, drivers.level)
    return _euler(system, drivers.W, x0, hdot, drivers.Wn.fine_derivative(), escape_radius=escape_radius)


def integrate_ito_limit(system, drivers, x0, escape_radius=None):
    """Euler-Maruyama for the limit equation.

    Drift ``B + H h' + grad G [F + G/2]``, diffusion ``F + G``; ``drivers.Wn``
    is ignored.
    """
    if drivers.W is None:
        raise ParameterError("the limit equation needs W")
    hdot = _control_on_grid(drivers.h, drivers.level)
    return _euler(system, drivers.W, x0, hdot, ito=True, escape_radius=escape_radius)


def integrate_truncated(system, R, drivers, x0, ito_limit=False, escape_radius=None):
    """Integrate the system truncated at radius ``R``.

    Runs :func:`integrate_ito_limit` when ``ito_limit`` is set and
    :func:`integrate_mixed` otherwise.
    """
    truncated = truncate_system(system, R)
    if ito_limit:
        return integrate_ito_limit(truncated, drivers, x0, escape_radius)
    return integrate_mixed(truncated, drivers, x0, escape_radius)


def integrate_sde(model, drivers, x0=None, escape_radius=None):
    """Plain Euler-Maruyama for ``dX = b(X) dt + sigma(X) dW``.

    Shares its arithmetic with :func:`integrate_shifted`, which therefore
    reproduces it bit for bit when ``h = W^n``.
    """
    system = reduce_to_wz_form(model, DIRECT)
    return _euler(system, drivers.W, model.x0 if x0 is None else x0, escape_radius=escape_radius)


def integrate_reference(model, drivers, x0=None):
    """``X`` driven by ``drivers.W``: the model's closed form if it has one, else :func:`integrate_sde`."""
    x0 = model.x0 if x0 is None else x0
    states = model.exact_states(drivers.W, x0)
    if states is None:
        return integrate_sde(model, drivers, x0)
    batch = states.shape[:-2]
    log.debug("%s: using the closed-form solution", model.name)
    return Trajectory(states, np.full(batch, COMPLETED), np.full(batch, np.nan), drivers.W.level)


def _rk4(system, x0, control, level, escape_radius=None):
    batch = control.shape[:-2]
    steps = 1 << level
    dt = 2.0 ** -level
    x = _initial(system.m, x0, batch)
    start = x.copy()
    states = np.empty(batch + (steps + 1, system.m))
    states[..., 0, :] = x
    events = _Events(batch, system.region, dt, escape_radius)
    with np.errstate(all="ignore"):
        for i in range(steps):
            u = control[..., i, :]

            def field(y):
                return system.B(y) + _apply(system.G(y), u)

            k1 = field(x)
            k2 = field(x + 0.5 * dt * k1)
            k3 = field(x + 0.5 * dt * k2)
            k4 = field(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            x = events.record(i + 1, x, states, start)
    return events.trajectory(states, level)


def solve_skeleton(model, h, x0=None, level=12, escape_radius=None):
    """Solve the skeleton ``S(h)' = b(S) - (grad sigma) sigma (S) / 2 + sigma(S) h'``.

    Args:
      model (SdeModel): The model.
      h (CameronMartinPath): The control; its breakpoints must lie on the
        grid of ``level``.  A control with stacked slopes gives a batch.
      x0 (array_like): Initial state, ``model.x0`` by default.
      level (int): Dyadic level of the time grid.

    Returns:
      Trajectory
    """
    if h.dim != model.noise_dim:
        raise ParameterError("control has dimension %d but %s has noise dimension %d" % (h.dim, model.name, model.noise_dim))
    control = _control_on_grid(h, level)
    system = reduce_to_wz_form(model, SKELETON)
    return _rk4(system, model.x0 if x0 is None else x0, control, level, escape_radius)


def solve_skeleton_wn(model, Wn, x0=None, escape_radius=None):
    """The skeleton driven by ``W^n`` itself, on the grid of ``Wn.source``."""
    return solve_skeleton(model, wn_as_cameron_martin(Wn), x0, Wn.source.level, escape_radius)


def integrate_shifted(model, drivers, x0=None, escape_radius=None):
    """Euler-Maruyama for the shifted equation ``X(w - w^n + h)``.

    Drift ``b + sigma h' - sigma W^n'`` and diffusion ``sigma``.

    Raises:
      ParameterError: If a driver is missing or ``Wn`` is not built from ``W``.
    """
    if drivers.Wn is None or drivers.h is None:
        raise ParameterError("the shifted equation needs W, W^n and h")
    return integrate_mixed(reduce_to_wz_form(model, SHIFTED), drivers, model.x0 if x0 is None else x0, escape_radius)


def sup_distance(a, b):
    """``max_i |a_i - b_i|`` over the common grid.

    Samples where either trajectory did not complete get ``inf``.  Returns a
    float for single trajectories and an array for batches.

    Raises:
      ParameterError: If the grids or dimensions differ.
    """
    if a.level != b.level or a.dim != b.dim:
        raise ParameterError("trajectories live on different grids (level %d vs %d)" % (a.level, b.level))
    with np.errstate(invalid="ignore"):
        gaps = np.max(np.linalg.norm(a.states - b.states, axis=-1), axis=-1)
    result = np.where(a.completed & b.completed, gaps, np.inf)
    if result.ndim == 0:
        return float(result)
    return result