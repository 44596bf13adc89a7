"""Consumption utilities and generation costs.

Two families ship: isoelastic utility

    u(z) = (z**(1 - eta) - 1) / (1 - eta),   eta != 1
    u(z) = ln(z),                            eta == 1

and quadratic generation cost ``c(y) = alpha * y**2 + beta * y`` on
``[y_min, y_max]``. Every function dispatches on the spec's ``kind`` tag so
further families can be registered in ``UTILITY_KINDS`` / ``COST_KINDS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Isoelastic:
    """Isoelastic (CRRA) utility with risk-aversion ``eta > 0``."""

    eta: float
    kind = "isoelastic"


@dataclass(frozen=True)
class Quadratic:
    """Quadratic cost ``alpha*y^2 + beta*y`` with output bounds."""

    alpha: float
    beta: float
    y_min: float = 0.0
    y_max: float = math.inf
    kind = "quadratic"


UtilitySpec = Isoelastic
CostSpec = Quadratic

UTILITY_KINDS = {"isoelastic": Isoelastic}
COST_KINDS = {"quadratic": Quadratic}


def _unknown(spec):
    return TypeError(f"unsupported function family: {type(spec).__name__}")


def _positive(name, value):
    if not value > 0:
        raise DomainError(f"{name} must be > 0, got {value}")


def u_value(spec: UtilitySpec, z: float) -> float:
    """Utility of consuming ``z > 0``."""
    _positive("z", z)
    if isinstance(spec, Isoelastic):
        if spec.eta == 1.0:
            return math.log(z)
        return (z ** (1.0 - spec.eta) - 1.0) / (1.0 - spec.eta)
    raise _unknown(spec)


def u_marginal(spec: UtilitySpec, z: float) -> float:
    """Marginal utility ``u'(z) = z**-eta``; strictly decreasing in ``z``."""
    _positive("z", z)
    if isinstance(spec, Isoelastic):
        return z ** (-spec.eta)
    raise _unknown(spec)


def u_inverse_marginal(spec: UtilitySpec, m: float) -> float:
    """Consumption level at which marginal utility equals ``m > 0``."""
    _positive("marginal utility", m)
    if isinstance(spec, Isoelastic):
        return m ** (-1.0 / spec.eta)
    raise _unknown(spec)


def u_inverse_marginal_slope(spec: UtilitySpec, m: float) -> float:
    """Derivative of :func:`u_inverse_marginal` with respect to ``m`` (negative)."""
    _positive("marginal utility", m)
    if isinstance(spec, Isoelastic):
        return -(m ** (-1.0 / spec.eta - 1.0)) / spec.eta
    raise _unknown(spec)


def c_value(spec: CostSpec, y: float) -> float:
    if isinstance(spec, Quadratic):
        return spec.alpha * y * y + spec.beta * y
    raise _unknown(spec)


def c_marginal(spec: CostSpec, y: float) -> float:
    if isinstance(spec, Quadratic):
        return 2.0 * spec.alpha * y + spec.beta
    raise _unknown(spec)


def c_inverse_marginal(spec: CostSpec, m: float) -> float:
    """Output at which marginal cost equals ``m``, *not* clipped to the bounds."""
    if isinstance(spec, Quadratic):
        return (m - spec.beta) / (2.0 * spec.alpha)
    raise _unknown(spec)


def c_inverse_marginal_slope(spec: CostSpec, m: float) -> float:
    if isinstance(spec, Quadratic):
        return 1.0 / (2.0 * spec.alpha)
    raise _unknown(spec)


def utility_violations(spec) -> list[str]:
    """Invariant violations of a utility spec, as short field messages."""
    if isinstance(spec, Isoelastic):
        if not (math.isfinite(spec.eta) and spec.eta > 0):
            return [f"eta must be > 0 (strict concavity), got {spec.eta}"]
        return []
    return [f"unsupported utility type {type(spec).__name__}"]


def cost_violations(spec) -> list[str]:
    if not isinstance(spec, Quadratic):
        return [f"unsupported cost type {type(spec).__name__}"]
    out = []
    if not (math.isfinite(spec.alpha) and spec.alpha > 0):
        out.append(f"alpha must be > 0 (strict convexity), got {spec.alpha}")
    if not (math.isfinite(spec.beta) and spec.beta >= 0):
        out.append(f"beta must be >= 0, got {spec.beta}")
    if not (math.isfinite(spec.y_min) and math.isfinite(spec.y_max)):
        out.append("y_min and y_max must be finite")
    elif not 0 <= spec.y_min <= spec.y_max:
        out.append(f"bounds must satisfy 0 <= y_min <= y_max, got [{spec.y_min}, {spec.y_max}]")
    return out
