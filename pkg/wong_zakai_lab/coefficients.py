"""Coefficient systems ``(B, H, G, F, grad G)`` and the maps that build them.

Every coefficient is a batch-aware callable: a state array of shape
``(..., m)`` goes to ``(..., m)`` for ``B``, ``(..., m, d)`` for ``H``, ``G``
and ``F``, and ``(..., m, d, m)`` for ``grad G`` with
``gradG[..., i, j, k] = d G_ij / d x_k``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

log = logging.getLogger(__name__)

SKELETON = "skeleton"
SHIFTED = "shifted"
DIRECT = "direct"
VARIANTS = (SKELETON, SHIFTED, DIRECT)


@dataclass(frozen=True)
class AdmissibleRegion(object):
    """The part of ``R^m`` a model is defined on."""

    kind: str = "everywhere"
    """str: One of ``everywhere``, ``positive_orthant``, ``nonnegative_orthant``, ``half_space``."""

    description: str = "all of R^m"

    normal: tuple = ()
    """tuple: Normal vector of a half-space ``{x : <normal, x> > offset}``."""

    offset: float = 0.0

    KINDS = ("everywhere", "positive_orthant", "nonnegative_orthant", "half_space")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError("unknown region kind %r" % (self.kind,))
        if self.kind == "half_space" and not self.normal:
            raise ParameterError("a half-space needs a normal vector")

    @classmethod
    def everywhere(cls):
        return cls()

    @classmethod
    def positive_orthant(cls):
        return cls("positive_orthant", "open positive orthant (0, inf)^m")

    @classmethod
    def nonnegative_orthant(cls):
        return cls("nonnegative_orthant", "closed orthant [0, inf)^m")

    @classmethod
    def half_space(cls, normal, offset=0.0):
        normal = tuple(float(v) for v in normal)
        return cls("half_space", "half-space <%r, x> > %r" % (normal, offset), normal, float(offset))

    def contains(self, x):
        """Membership of each state in ``x``; a boolean array over the leading axes."""
        x = np.asarray(x, dtype=float)
        if self.kind == "everywhere":
            return np.ones(x.shape[:-1], dtype=bool)
        if self.kind == "positive_orthant":
            return np.all(x > 0.0, axis=-1)
        if self.kind == "nonnegative_orthant":
            return np.all(x >= 0.0, axis=-1)
        return x @ np.asarray(self.normal) > self.offset


class TruncationBump(object):
    """Radial cutoff ``theta_R`` with ``theta_R = 1`` on ``|x| <= R+1`` and 0 on ``|x| >= 2(R+1)``.

    Between the plateaus the profile is the quintic smoothstep
    ``q(s) = 1 - s^3 (10 - 15 s + 6 s^2)`` of ``s = (|x| - (R+1)) / (R+1)``,
    which is ``C^2``.

    Args:
      R (float): Positive radius.
    """

    def __init__(self, R):
        if not R > 0:
            raise ParameterError("truncation radius must be positive, got %r" % (R,))
        self.R = float(R)
        self.inner = self.R + 1.0
        self.outer = 2.0 * (self.R + 1.0)

    def profile(self, r):
        """The cutoff as a function of the radius ``r``."""
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.inner) / self.inner, 0.0, 1.0)
        q = 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)
        return np.where(r <= self.inner, 1.0, np.where(r >= self.outer, 0.0, q))

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.inner) / self.inner, 0.0, 1.0)
        dq = -30.0 * s ** 2 * (1.0 - s) ** 2 / self.inner
        return np.where((r > self.inner) & (r < self.outer), dq, 0.0)

    def __call__(self, x):
        return self.profile(np.linalg.norm(x, axis=-1))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0.0, r, 1.0)
        return (self.profile_derivative(r) / safe)[..., None] * x


def zeros_like_matrix(m, d):
    """A coefficient returning the zero ``m x d`` matrix."""

    def zero(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (m, d))

    return zero


def zeros_like_gradient(m, d):
    def zero(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (m, d, m))

    return zero


def apply_gradient(grad, A):
    """Contract ``grad G`` with a matrix field: ``(grad G[A])_i = sum_{k,j} d_k G_ij A_kj``."""
    return np.einsum("...ijk,...kj->...i", grad, A)


@dataclass(frozen=True)
class CoefficientSystem(object):
    """The coefficients of the mixed-driver equation.

    ``dY = B(Y) dt + H(Y) dh + G(Y) dW^n + F(Y) dW`` and its Ito limit, which
    adds ``grad G [F + G/2]`` to the drift and uses ``F + G`` as diffusion.
    """

    m: int
    d: int
    B: object
    H: object
    G: object
    F: object
    gradG: object
    region: AdmissibleRegion = field(default_factory=AdmissibleRegion.everywhere)
    name: str = ""
    """str: Free-form label used in reports."""

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1 or int(self.d) != self.d or self.d < 1:
            raise ParameterError("dimensions must be positive integers, got m=%r d=%r" % (self.m, self.d))

    @classmethod
    def build(cls, m, d, B=None, H=None, G=None, F=None, gradG=None, region=None, name=""):
        """Build a system, filling omitted coefficients with zeros.

        ``B`` defaults to the zero vector field and ``gradG`` to zero, which is
        only consistent when ``G`` is constant.
        """
        if B is None:
            def B(x):
                x = np.asarray(x, dtype=float)
                return np.zeros(x.shape[:-1] + (m,))
        return cls(
            m,
            d,
            B,
            H or zeros_like_matrix(m, d),
            G or zeros_like_matrix(m, d),
            F or zeros_like_matrix(m, d),
            gradG or zeros_like_gradient(m, d),
            region or AdmissibleRegion.everywhere(),
            name,
        )

    def ito_correction(self, x):
        """``grad G(x)[F(x) + G(x)/2]``."""
        return apply_gradient(self.gradG(x), self.F(x) + 0.5 * self.G(x))


def truncate_system(system, R):
    """Multiply every coefficient by the cutoff ``theta_R``.

    ``grad G_R`` follows the product rule ``(d theta_R) G + theta_R d G``.  On
    the closed ball of radius ``R + 1`` the cutoff is exactly 1 and its
    gradient exactly 0, so the truncated system reproduces the original
    values bit for bit there.

    Args:
      system (CoefficientSystem): The system to truncate.
      R (float): Positive radius.

    Returns:
      CoefficientSystem: The truncated system.
    """
    bump = TruncationBump(R)

    def B(x):
        return bump(x)[..., None] * system.B(x)

    def scaled(coefficient):
        def truncated(x):
            return bump(x)[..., None, None] * coefficient(x)

        return truncated

    def gradG(x):
        return bump.gradient(x)[..., None, None, :] * system.G(x)[..., None] + bump(x)[..., None, None, None] * system.gradG(x)

    name = "%s truncated at R=%r" % (system.name or "system", float(R))
    return CoefficientSystem(system.m, system.d, B, scaled(system.H), scaled(system.G), scaled(system.F), gradG, system.region, name)


def _correction(model, x):
    return apply_gradient(model.diffusion_gradient(x), model.diffusion(x))


def stratonovich_correction(model, x):
    """``((grad sigma) sigma)(x)`` with ``(.)_i = sum_{k,j} d_k sigma_ij sigma_kj``.

    The factor one half is left to the caller.

    Raises:
      DomainError: If ``x`` lies outside the model's admissible region.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(model.region.contains(x)):
        raise DomainError("state %r is outside the %s" % (x.tolist(), model.region.description))
    return _correction(model, x)


def reduce_to_wz_form(model, variant=SKELETON):
    """Express an ``(b, sigma)`` model as a coefficient system.

    * ``skeleton``: ``(b - (grad sigma) sigma / 2, 0, sigma, 0)``; its
      mixed equation is the skeleton driven by ``W^n``.
    * ``shifted``: ``(b, sigma, -sigma, sigma)``; its mixed equation is the
      shifted equation ``X(w - w^n + h)``.
    * ``direct``: ``(b, 0, 0, sigma)``; the equation itself.

    Raises:
      ParameterError: For an unknown variant.
    """
    m, d = model.dim, model.noise_dim
    name = "%s/%s" % (model.name, variant)
    if variant == SKELETON:
        def B(x):
            return model.drift(x) - 0.5 * _correction(model, x)

        return CoefficientSystem(
            m, d, B, zeros_like_matrix(m, d), model.diffusion, zeros_like_matrix(m, d), model.diffusion_gradient, model.region, name
        )
    if variant == SHIFTED:
        def negated(x):
            return -model.diffusion(x)

        def negated_gradient(x):
            return -model.diffusion_gradient(x)

        return CoefficientSystem(m, d, model.drift, model.diffusion, negated, model.diffusion, negated_gradient, model.region, name)
    if variant == DIRECT:
        return CoefficientSystem(
            m, d, model.drift, zeros_like_matrix(m, d), zeros_like_matrix(m, d), model.diffusion, zeros_like_gradient(m, d), model.region, name
        )
    raise ParameterError("unknown variant %r, expected one of %s" % (variant, ", ".join(VARIANTS)))


def _steps(x, step):
    return step * (1.0 + np.linalg.norm(x, axis=-1))


def finite_difference_jacobian(fn, x, step=1e-5):
    """Central differences of ``fn`` along every state coordinate.

    The step along each axis is ``step * (1 + |x|)``.

    Returns:
      numpy.ndarray: Shape ``fn(x).shape + (m,)``.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    h = _steps(x, step)
    columns = []
    for k in range(m):
        shift = np.zeros_like(x)
        shift[..., k] = h
        diff = np.asarray(fn(x + shift)) - np.asarray(fn(x - shift))
        scale = (2.0 * h).reshape(h.shape + (1,) * (diff.ndim - h.ndim))
        columns.append(diff / scale)
    return np.stack(columns, axis=-1)


def check_gradient(fn, grad, x, step=1e-5):
    """Largest relative mismatch between ``grad`` and central differences of ``fn``.

    The mismatch of each entry is ``|fd - grad| / (1 + |grad|)``.
    """
    analytic = np.asarray(grad(x))
    numeric = finite_difference_jacobian(fn, x, step)
    return float(np.max(np.abs(numeric - analytic) / (1.0 + np.abs(analytic))))
