import logging

import numpy as np

from ..coefficients import AdmissibleRegion
from ..errors import ModelError

log = logging.getLogger(__name__)


class SdeModel(object):
    """The base model ``dX = b(X) dt + sigma(X) dW``.
    Most functionality is found in child classes.
    If wishing to add a builtin model, it might be helpful to take a look at an existing one to see how everything works.

    Args:
      x0 (sequence of float): Initial state; ``default_x0`` when omitted.
      **params: Model parameters overriding ``defaults``.

    Raises:
      ModelError: If a parameter is unknown or violates its constraint.
    """

    name = "unnamed"
    """str: Identifier of the model. Builtin models are looked up by this name."""

    dim = 1
    """int: State dimension ``m``."""

    noise_dim = 1
    """int: Noise dimension ``d``."""

    defaults = {}
    """dict: Parameter names mapped to their default values. Only these names are accepted."""

    default_x0 = (0.5,)
    """tuple: Initial state used when none is given."""

    priority = 100
    """int: Position of the model when builtin models are listed. Lower values come first."""

    non_lipschitz_drift = False
    """bool: The drift is discontinuous somewhere, so checks that rely on a locally Lipschitz drift do not apply."""

    fd_tolerance = 1e-6
    """float: Largest relative mismatch allowed between ``diffusion_gradient`` and central differences of ``diffusion``."""

    def __init__(self, x0=None, **params):
        unknown = sorted(set(params) - set(self.defaults))
        if unknown:
            raise ModelError("unknown parameter(s) for %s: %s" % (self.name, ", ".join(unknown)))
        values = dict(self.defaults)
        values.update(params)
        self.params = self.validate(values)
        x0 = self.default_x0 if x0 is None else x0
        x0 = np.array(x0, dtype=float).reshape(-1)
        if x0.shape != (self.dim,):
            raise ModelError("%s expects an initial state of dimension %d, got %d" % (self.name, self.dim, x0.size))
        if not self.region.contains(x0):
            raise ModelError("initial state %r is outside the %s" % (x0.tolist(), self.region.description))
        x0.flags.writeable = False
        self.x0 = x0

    @property
    def region(self):
        """AdmissibleRegion: Where the model is defined. All of ``R^m`` unless overridden."""
        return AdmissibleRegion.everywhere()

    def validate(self, params):
        """Check and normalise ``params``; return the dict to store.

        Raises:
          ModelError: On invalid values.
        """
        return params

    def drift(self, x):
        """``b(x)`` for states of shape ``(..., m)``."""
        raise NotImplementedError

    def diffusion(self, x):
        """``sigma(x)`` with shape ``(..., m, d)``."""
        raise NotImplementedError

    def diffusion_gradient(self, x):
        """``d sigma_ij / d x_k`` with shape ``(..., m, d, m)``."""
        raise NotImplementedError

    def lyapunov(self, theta=None, eta=None):
        """The Lyapunov data the model is known to satisfy.

        Args:
          theta (float): Overrides the model's ``theta``.
          eta (float): Overrides the model's ``eta``.

        Returns:
          LyapunovData
        """
        raise NotImplementedError

    def exact_states(self, W, x0):
        """States of the strong solution driven by ``W``, when known in closed form.

        Returns:
          numpy.ndarray: Shape ``W.increments.shape[:-2] + (W.steps + 1, m)``,
          or ``None`` when the model has no closed form.
        """
        return None

    def describe(self):
        return {"model": self.name, "params": _plain(self.params), "x0": self.x0.tolist()}

    def __repr__(self):
        return "<%s %s x0=%r>" % (type(self).__name__, self.name, self.x0.tolist())


def _plain(params):
    out = {}
    for key, value in params.items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        if callable(value):
            value = getattr(value, "__name__", repr(value))
        out[key] = value
    return out


def positive(params, *names):
    """Raise :class:`ModelError` unless every named parameter is a positive real."""
    for name in names:
        value = params[name]
        if not np.all(np.isfinite(value)) or not np.all(np.asarray(value, dtype=float) > 0):
            raise ModelError("parameter %s must be positive, got %r" % (name, value))


class FunctionModel(SdeModel):
    """A model assembled from plain callables, for ad-hoc experiments.

    Args:
      drift: ``b``, batch-aware.
      diffusion: ``sigma``, batch-aware.
      diffusion_gradient: ``grad sigma``, batch-aware.
      dim (int): State dimension.
      noise_dim (int): Noise dimension.
      x0 (sequence of float): Initial state.
      name (str): Label used in reports.
      region (AdmissibleRegion): Where the model is defined.
      lyapunov (LyapunovData): Returned by :meth:`lyapunov`, if given.
    """

    def __init__(self, drift, diffusion, diffusion_gradient, dim=1, noise_dim=1, x0=None, name="custom", region=None, lyapunov=None):
        self.dim = dim
        self.noise_dim = noise_dim
        self.name = name
        self._region = region or AdmissibleRegion.everywhere()
        self._drift = drift
        self._diffusion = diffusion
        self._diffusion_gradient = diffusion_gradient
        self._lyapunov = lyapunov
        super(FunctionModel, self).__init__(x0=np.zeros(dim) if x0 is None else x0)

    @property
    def region(self):
        return self._region

    def drift(self, x):
        return self._drift(np.asarray(x, dtype=float))

    def diffusion(self, x):
        return self._diffusion(np.asarray(x, dtype=float))

    def diffusion_gradient(self, x):
        return self._diffusion_gradient(np.asarray(x, dtype=float))

    def lyapunov(self, theta=None, eta=None):
        if self._lyapunov is None:
            raise ModelError("model %s has no Lyapunov data" % self.name)
        return self._lyapunov.with_constants(theta=theta, eta=eta)
