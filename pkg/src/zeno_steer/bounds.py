"""Closed-form success-probability bound for measurement steering and its inversion.

With ``a = K + h`` (generator norm plus noise norm), duration ``tau`` and
``N`` equally spaced measurements::

    eps   = 4 a^2 tau^2 / N * exp(2 a tau / N)
    P    >= 1 - eps * exp(eps)

Requiring ``eps * exp(eps) <= delta`` and solving for the rate ``N / tau``
gives ``lambda >= 2a / W(W(delta) / (2 a tau))`` with W the principal
branch of the Lambert W function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError

__all__ = [
    "BoundInputs",
    "epsilon",
    "success_bound",
    "lambert_w0",
    "required_measurement_rate",
    "OMEGA",
]

#: root of w e^w = 1
OMEGA = 0.56714329040978387299996866221035554975381578718651

_W_STEP_TOL = 1e-14
_W_MAX_ITER = 100


@dataclass(frozen=True)
class BoundInputs:
    """Norms and timing that enter the bound.

    ``h_norm`` is either the full noise norm or, when a bath-internal part
    is known, the norm of the noise with that part removed.
    """

    k_norm: float
    h_norm: float
    tau: float
    n_steps: int

    def __post_init__(self):
        for name in ("k_norm", "h_norm", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.k_norm < 0 or self.h_norm < 0:
            raise DomainError("norms must be nonnegative")
        if self.tau <= 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def strength(self) -> float:
        return self.k_norm + self.h_norm


def epsilon(inputs: BoundInputs) -> float:
    a = inputs.strength
    if a == 0.0:
        return 0.0
    x = a * inputs.tau / inputs.n_steps
    return 4.0 * a * a * inputs.tau * inputs.tau / inputs.n_steps * math.exp(2.0 * x)


def success_bound(eps: float) -> float:
    """``1 - eps e^eps``; negative once ``eps`` exceeds the omega constant."""
    if eps < 0 or math.isnan(eps):
        raise DomainError(f"epsilon must be nonnegative, got {eps}")
    return 1.0 - eps * math.exp(eps)


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function on ``[0, inf)``.

    Halley iteration, seeded with ``log x - log log x`` above ``e`` and
    ``x / (1 + x)`` below.
    """
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError(f"lambert_w0 is only defined here for x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x > math.e:
        lx = math.log(x)
        w = lx - math.log(lx)
    else:
        w = x / (1.0 + x)
    for _ in range(_W_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= _W_STEP_TOL * (1.0 + abs(w)):
            return w
    raise NumericalError(f"Halley iteration for W({x}) did not converge")


def required_measurement_rate(delta: float, k_norm: float, h_norm: float, tau: float) -> float:
    """Smallest measurement rate ``N / tau`` with ``eps e^eps <= delta``.

    Returns 0 when both norms vanish. The caller picks
    ``N = ceil(rate * tau)``.
    """
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if k_norm < 0 or h_norm < 0 or not (math.isfinite(k_norm) and math.isfinite(h_norm)):
        raise DomainError("norms must be finite and nonnegative")
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be positive, got {tau}")
    a = k_norm + h_norm
    if a == 0.0:
        return 0.0
    return 2.0 * a / lambert_w0(lambert_w0(delta) / (2.0 * a * tau))
