"""Lyapunov functionals and their numerical audit.

Two families of conditions are evaluated.  For a coefficient system
``(B, H, G, F)``:

* ``J1 = <B, grad V> + theta/2 tr(H* D2V H + G* D2V G + F* D2V F) + |(H+G+F)* grad V|^2 / (eta V)``
* ``trace_c = tr(H* D2V H + G* D2V G + F* D2V F)``
* ``J2 = <B + grad G[F + G/2], grad V> + theta/2 tr(H* D2V H + (F+G)* D2V (F+G)) + |(H+G+F)* grad V|^2 / (eta V)``
* ``trace_e = tr(H* D2V H + (F+G)* D2V (F+G))``

and for a model ``(b, sigma)``:

* ``J1 = <b, grad V> + theta/2 tr(sigma* D2V sigma) + |sigma* grad V|^2 / (eta V)``
* ``J2`` as ``J1`` with ``b`` replaced by ``b - (grad sigma) sigma / 2``
* ``trace = tr(sigma* D2V sigma)``

The growth conditions ask ``J <= C (1 + V)``, the trace conditions
``trace >= -M - C V``.  Where ``V = 0`` the quotient term is taken as 0 if
its numerator vanishes too; otherwise the point is singular.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSystem, _correction, apply_gradient, finite_difference_jacobian
from .errors import DomainError, LyapunovError, ParameterError
from .expression import Expression

log = logging.getLogger(__name__)

MIN_AUDIT_SAMPLES = 1000
MAX_VIOLATIONS = 25
_SLACK = 1e-12


@dataclass(frozen=True)
class LyapunovData(object):
    """A Lyapunov function with its derivatives and the constants it is audited against."""

    V: object
    gradV: object
    hessV: object
    theta: float = 1.0
    eta: float = 1.0
    C: float = 1.0
    M: float = 1.0
    description: str = ""

    def __post_init__(self):
        for name in ("theta", "eta", "C", "M"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError("%s must be a positive real, got %r" % (name, value))

    @classmethod
    def from_expression(cls, text, dim, theta=1.0, eta=1.0, C=1.0, M=1.0, step=1e-5):
        """Build ``V`` from an arithmetic expression.

        The gradient uses central differences with step ``step * (1 + |x|)``
        and the Hessian second differences with ten times that step; the
        Hessian is symmetric by construction.
        """
        V = Expression(text, dim)

        def gradV(x):
            return finite_difference_jacobian(V, x, step)

        def hessV(x):
            return _hessian(V, x, 10.0 * step)

        return cls(V, gradV, hessV, theta, eta, C, M, text)

    def with_constants(self, **changes):
        values = dict(theta=self.theta, eta=self.eta, C=self.C, M=self.M)
        values.update({k: v for k, v in changes.items() if v is not None})
        return LyapunovData(self.V, self.gradV, self.hessV, description=self.description, **values)


def _hessian(fn, x, step):
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    h = step * (1.0 + np.linalg.norm(x, axis=-1))
    out = np.zeros(x.shape[:-1] + (m, m))
    for k in range(m):
        for l in range(k, m):
            ek = np.zeros_like(x)
            el = np.zeros_like(x)
            ek[..., k] = h
            el[..., l] = h
            value = (fn(x + ek + el) - fn(x + ek - el) - fn(x - ek + el) + fn(x - ek - el)) / (4.0 * h * h)
            out[..., k, l] = value
            out[..., l, k] = value
    return out


def _scalar(value):
    value = np.asarray(value)
    return value[()] if value.ndim == 0 else value


def _trace(A, hess):
    return np.einsum("...ij,...ik,...kj->...", A, hess, A)


def _quotient(S, gradV, V, eta):
    numerator = np.sum(np.einsum("...ij,...i->...j", S, gradV) ** 2, axis=-1)
    V = np.asarray(V, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numerator / (eta * V)
    return np.where(V > 0.0, ratio, np.where((V == 0.0) & (numerator == 0.0), 0.0, np.nan))


def _strict(value, x):
    if np.any(np.isnan(value)):
        bad = np.asarray(x)[np.isnan(value)] if np.ndim(value) else np.asarray(x)
        raise LyapunovError("quotient term is singular (V = 0 with non-zero numerator) at %r" % (bad.tolist(),))
    return _scalar(value)


def _inner(u, v):
    return np.sum(u * v, axis=-1)


def _general_parts(system, lyap, x):
    x = np.asarray(x, dtype=float)
    H, G, F = system.H(x), system.G(x), system.F(x)
    return x, H, G, F, lyap.V(x), lyap.gradV(x), lyap.hessV(x)


def _J1_general(system, lyap, x):
    x, H, G, F, V, gV, hV = _general_parts(system, lyap, x)
    trace = _trace(H, hV) + _trace(G, hV) + _trace(F, hV)
    return _inner(system.B(x), gV) + 0.5 * lyap.theta * trace + _quotient(H + G + F, gV, V, lyap.eta)


def _J2_general(system, lyap, x):
    x, H, G, F, V, gV, hV = _general_parts(system, lyap, x)
    drift = system.B(x) + apply_gradient(system.gradG(x), F + 0.5 * G)
    trace = _trace(H, hV) + _trace(F + G, hV)
    return _inner(drift, gV) + 0.5 * lyap.theta * trace + _quotient(H + G + F, gV, V, lyap.eta)


def _trace_c(system, lyap, x):
    x, H, G, F, __, __, hV = _general_parts(system, lyap, x)
    return _trace(H, hV) + _trace(G, hV) + _trace(F, hV)


def _trace_e(system, lyap, x):
    x, H, G, F, __, __, hV = _general_parts(system, lyap, x)
    return _trace(H, hV) + _trace(F + G, hV)


def _sde_tail(model, lyap, x):
    sigma = model.diffusion(x)
    hV, gV = lyap.hessV(x), lyap.gradV(x)
    return 0.5 * lyap.theta * _trace(sigma, hV) + _quotient(sigma, gV, lyap.V(x), lyap.eta), gV


def _J1_sde(model, lyap, x):
    x = np.asarray(x, dtype=float)
    tail, gV = _sde_tail(model, lyap, x)
    return _inner(model.drift(x), gV) + tail


def _J2_sde(model, lyap, x):
    x = np.asarray(x, dtype=float)
    tail, gV = _sde_tail(model, lyap, x)
    return _inner(model.drift(x) - 0.5 * _correction(model, x), gV) + tail


def _trace_sde(model, lyap, x):
    x = np.asarray(x, dtype=float)
    return _trace(model.diffusion(x), lyap.hessV(x))


def eval_J1_general(system, lyap, x):
    """``J1`` of a coefficient system at ``x`` (a state or a stack of states).

    Raises:
      LyapunovError: If ``V(x) = 0`` while ``|(H+G+F)* grad V(x)| > 0``.
    """
    return _strict(_J1_general(system, lyap, x), x)


def eval_J2_general(system, lyap, x):
    """``J2`` of a coefficient system; drift ``B + grad G[F + G/2]``, trace over ``H`` and ``F + G``."""
    return _strict(_J2_general(system, lyap, x), x)


def eval_trace_general(system, lyap, x, which="c"):
    """The trace term of condition (c) (``which="c"``) or (e) (``which="e"``)."""
    if which not in ("c", "e"):
        raise ParameterError("which must be 'c' or 'e'")
    return _scalar((_trace_c if which == "c" else _trace_e)(system, lyap, x))


def eval_J1_sde(model, lyap, x):
    return _strict(_J1_sde(model, lyap, x), x)


def eval_J2_sde(model, lyap, x):
    return _strict(_J2_sde(model, lyap, x), x)


def eval_trace_sde(model, lyap, x):
    """``tr(sigma* D2V sigma)`` at ``x``."""
    return _scalar(_trace_sde(model, lyap, x))


def _random_directions(rng, count, dim):
    z = rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


@dataclass(frozen=True)
class BoxDomain(object):
    """Uniform samples from ``[low, high]^m``."""

    low: float
    high: float

    def sample(self, dim, count, rng):
        return rng.uniform(self.low, self.high, size=(count, dim))

    def describe(self):
        return "box:%r:%r" % (self.low, self.high)


@dataclass(frozen=True)
class BallDomain(object):
    """Uniform samples from the centred ball of a given radius."""

    radius: float

    def sample(self, dim, count, rng):
        radii = self.radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / dim)
        return radii[:, None] * _random_directions(rng, count, dim)

    def describe(self):
        return "ball:%r" % (self.radius,)


@dataclass(frozen=True)
class LogRadialDomain(object):
    """Uniform directions with log-uniform radii in ``[rmin, rmax]``."""

    rmin: float = 1e-2
    rmax: float = 1e2

    def sample(self, dim, count, rng):
        radii = np.exp(rng.uniform(np.log(self.rmin), np.log(self.rmax), size=count))
        return radii[:, None] * _random_directions(rng, count, dim)

    def describe(self):
        return "logradial:%r:%r" % (self.rmin, self.rmax)


def parse_domain(text):
    """Parse ``box:LOW:HIGH``, ``ball:RADIUS`` or ``logradial[:RMIN:RMAX]``.

    Raises:
      DomainError: If the description is malformed or the domain is empty.
    """
    parts = str(text).split(":")
    kind, args = parts[0].strip().lower(), parts[1:]
    try:
        values = [float(a) for a in args]
    except ValueError:
        raise DomainError("cannot parse domain %r" % (text,))
    if kind == "box" and len(values) == 2:
        if not values[0] < values[1]:
            raise DomainError("empty box domain %r" % (text,))
        return BoxDomain(*values)
    if kind == "ball" and len(values) == 1:
        if not values[0] > 0:
            raise DomainError("empty ball domain %r" % (text,))
        return BallDomain(values[0])
    if kind == "logradial" and len(values) in (0, 2):
        domain = LogRadialDomain(*values)
        if not 0 < domain.rmin < domain.rmax:
            raise DomainError("empty log-radial domain %r" % (text,))
        return domain
    raise DomainError("unknown domain %r; expected box:LOW:HIGH, ball:R or logradial:RMIN:RMAX" % (text,))


@dataclass(frozen=True)
class ConditionResult(object):
    """Outcome of one audited condition.

    For growth conditions ``sup_ratio`` is the largest ``J / (1 + V)`` and is
    compared with ``C``.  For trace conditions it is the largest
    ``(-trace - M) / (C V)`` over samples with ``V > 0`` and is compared with 1.
    """

    name: str
    kind: str
    sup_ratio: float
    bound: float
    empirical_C: float
    empirical_M: float
    passed: bool
    violation_count: int = 0
    singular_count: int = 0
    violations: tuple = ()

    def to_dict(self):
        return {
            "kind": self.kind,
            "sup_ratio": self.sup_ratio,
            "bound": self.bound,
            "empirical_C": self.empirical_C,
            "empirical_M": self.empirical_M,
            "passed": self.passed,
            "violation_count": self.violation_count,
            "singular_count": self.singular_count,
            "violations": [{"x": list(x), "value": v} for x, v in self.violations],
        }


@dataclass(frozen=True)
class AuditReport(object):
    """Worst-case ratios and violations of every condition over a sampled domain.

    :attr:`passed` covers the sampled growth and trace conditions only.  The
    coercivity of ``V`` (``V(x) -> inf`` as ``|x| -> inf``) is a heuristic
    reported in :attr:`coercive` and never changes :attr:`passed`, so a
    passing audit does not establish the full set of Lyapunov assumptions.
    """

    target: str
    domain: str
    samples: int
    seed: int
    theta: float
    eta: float
    C: float
    M: float
    conditions: dict = field(default_factory=dict)
    coercive: bool = True
    """bool: Whether V on the outermost decile of radii exceeds V on the innermost decile."""

    @property
    def passed(self):
        """bool: Every sampled condition holds; :attr:`coercive` is not consulted."""
        return all(c.passed for c in self.conditions.values())

    @property
    def violations(self):
        return [v for c in self.conditions.values() for v in c.violations]

    def to_dict(self):
        return {
            "target": self.target,
            "domain": self.domain,
            "samples": self.samples,
            "seed": self.seed,
            "constants": {"theta": self.theta, "eta": self.eta, "C": self.C, "M": self.M},
            "coercive": self.coercive,
            "passed": self.passed,
            "conditions": {name: c.to_dict() for name, c in self.conditions.items()},
        }


def _worst(points, values, excess, mask):
    order = np.argsort(-np.where(mask, excess, -np.inf), kind="stable")[: min(MAX_VIOLATIONS, int(mask.sum()))]
    return tuple((tuple(float(v) for v in points[i]), float(values[i])) for i in order)


def _growth(name, points, values, V, C):
    singular = np.isnan(values)
    ratio = np.where(singular, -np.inf, values / (1.0 + V))
    sup = float(np.max(ratio)) if not singular.all() else float("nan")
    violated = ~singular & (ratio > C + _SLACK * max(1.0, C))
    return ConditionResult(
        name=name,
        kind="growth",
        sup_ratio=sup,
        bound=C,
        empirical_C=max(sup, 0.0) if np.isfinite(sup) else sup,
        empirical_M=0.0,
        passed=not violated.any() and not singular.any(),
        violation_count=int(violated.sum()),
        singular_count=int(singular.sum()),
        violations=_worst(points, values, ratio - C, violated),
    )


def _trace_condition(name, points, values, V, C, M):
    deficit = -values
    positive = V > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        normalised = np.where(positive, (deficit - M) / (C * V), -np.inf)
        per_unit = np.where(positive, (deficit - M) / V, -np.inf)
    sup = float(np.max(normalised))
    violated = deficit > M + C * V + _SLACK * (1.0 + np.abs(M + C * V))
    return ConditionResult(
        name=name,
        kind="trace",
        sup_ratio=sup if np.isfinite(sup) else 0.0,
        bound=1.0,
        empirical_C=max(float(np.max(per_unit)), 0.0),
        empirical_M=max(float(np.max(deficit - C * V)), 0.0),
        passed=not violated.any(),
        violation_count=int(violated.sum()),
        violations=_worst(points, values, deficit - M - C * V, violated),
    )


def _admissible_points(target, points):
    region = target.region
    if region.kind in ("positive_orthant", "nonnegative_orthant"):
        points = np.abs(points)
    inside = region.contains(points)
    if not inside.all():
        raise DomainError("%d sampled points fall outside the %s" % (int((~inside).sum()), region.description))
    return points


def audit(target, lyap, domain, samples=2000, seed=0):
    """Sample a domain and check every Lyapunov condition on it.

    Orthant-valued targets are sampled by reflecting the domain samples into
    the orthant.

    Args:
      target: An :class:`~wong_zakai_lab.models.base.SdeModel` (three
        conditions) or a :class:`~wong_zakai_lab.coefficients.CoefficientSystem`
        (four conditions).
      lyap (LyapunovData): The Lyapunov function and constants.
      domain: A domain object or a string accepted by :func:`parse_domain`.
      samples (int): Number of sample points, at least 1000.
      seed (int): Seed of the sampling stream.

    Returns:
      AuditReport: Deterministic given ``seed`` and ``samples``.

    Raises:
      ParameterError: If fewer than 1000 samples are requested.
      DomainError: If the domain is empty or leaves the admissible region.
    """
    if isinstance(domain, str):
        domain = parse_domain(domain)
    if int(samples) != samples or samples < MIN_AUDIT_SAMPLES:
        raise ParameterError("an audit needs at least %d samples, got %r" % (MIN_AUDIT_SAMPLES, samples))
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if isinstance(target, CoefficientSystem):
        dim, name = target.m, target.name or "system"
        checks = (("J1", _J1_general, "growth"), ("trace_c", _trace_c, "trace"), ("J2", _J2_general, "growth"), ("trace_e", _trace_e, "trace"))
    else:
        dim, name = target.dim, target.name
        checks = (("J1", _J1_sde, "growth"), ("J2", _J2_sde, "growth"), ("trace", _trace_sde, "trace"))
    points = _admissible_points(target, domain.sample(dim, int(samples), rng))
    V = np.asarray(lyap.V(points), dtype=float)
    conditions = {}
    for label, fn, kind in checks:
        values = np.asarray(fn(target, lyap, points), dtype=float)
        if kind == "growth":
            result = _growth(label, points, values, V, lyap.C)
        else:
            result = _trace_condition(label, points, values, V, lyap.C, lyap.M)
        if not result.passed:
            log.warning("%s: condition %s fails on %s (sup ratio %r, %d violations)", name, label, domain.describe(), result.sup_ratio, result.violation_count)
        conditions[label] = result
    radii = np.linalg.norm(points, axis=-1)
    order = np.argsort(radii, kind="stable")
    decile = max(1, len(order) // 10)
    coercive = bool(np.min(V[order[-decile:]]) > np.max(V[order[:decile]]))
    return AuditReport(name, domain.describe(), int(samples), int(seed), lyap.theta, lyap.eta, lyap.C, lyap.M, conditions, coercive)
