"""Weighted phase sums ``sum_n f(n/N) exp(i n phi)`` and log-log rate fits.

For ``phi != 0 (mod 2 pi)`` and analytic ``f`` these sums stay bounded as
``N`` grows; for ``f(x) = x^k`` their magnitude tends to
``1 / |1 - exp(i phi)|``. The functions here evaluate the sums with
compensated (exactly rounded) summation so that growth or decay can be
measured reliably at ``N`` up to ``2**20``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import constants as C
from .errors import CapacityError, DomainError, UnsupportedWeightError

__all__ = [
    "AnalyticWeight",
    "Polynomial",
    "Exp",
    "Sin",
    "Product",
    "parse_weight",
    "ErgodicSumResult",
    "ConvergenceFit",
    "compensated_sum",
    "phase_power_sum",
    "analytic_phase_sum",
    "lemma1_limit",
    "convergence_fit",
]


class AnalyticWeight:
    """Base of the closed family of entire weight functions.

    Instances are callable on float arrays and multiply into Products.
    """

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __mul__(self, other: "AnalyticWeight") -> "Product":
        if not isinstance(other, AnalyticWeight):
            return NotImplemented
        left = self.factors if isinstance(self, Product) else (self,)
        right = other.factors if isinstance(other, Product) else (other,)
        return Product(tuple(left) + tuple(right))


@dataclass(frozen=True)
class Polynomial(AnalyticWeight):
    """``sum_p coeffs[p] x^p``."""

    coeffs: tuple[float, ...]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    @property
    def label(self) -> str:
        return "poly:" + ",".join(repr(float(c)) for c in self.coeffs)


@dataclass(frozen=True)
class Exp(AnalyticWeight):
    """``exp(rate x)``."""

    rate: float = 1.0

    def __call__(self, x):
        return np.exp(self.rate * np.asarray(x, dtype=float))

    @property
    def label(self) -> str:
        return f"exp:{self.rate!r}"


@dataclass(frozen=True)
class Sin(AnalyticWeight):
    """``sin(freq x + shift)``."""

    freq: float = 1.0
    shift: float = 0.0

    def __call__(self, x):
        return np.sin(self.freq * np.asarray(x, dtype=float) + self.shift)

    @property
    def label(self) -> str:
        return f"sin:{self.freq!r},{self.shift!r}"


@dataclass(frozen=True)
class Product(AnalyticWeight):
    factors: tuple[AnalyticWeight, ...]

    def __post_init__(self):
        for f in self.factors:
            if not isinstance(f, AnalyticWeight):
                raise UnsupportedWeightError(f"unsupported weight factor {f!r}")

    def __call__(self, x):
        out = np.ones_like(np.asarray(x, dtype=float))
        for f in self.factors:
            out = out * f(x)
        return out

    @property
    def label(self) -> str:
        return "*".join(f.label for f in self.factors)


_FACTOR = re.compile(r"^(poly|exp|sin):?([-+0-9.eE,]*)$")


def parse_weight(text: str) -> AnalyticWeight:
    """Parse ``poly:c0,c1,..``, ``exp:a``, ``sin:a,b`` and ``*``-products thereof.

    Also accepts the shorthands ``x^k`` and ``1``.
    """
    factors: list[AnalyticWeight] = []
    for part in text.replace(" ", "").split("*"):
        if re.fullmatch(r"x\^?(\d+)", part):
            k = int(re.fullmatch(r"x\^?(\d+)", part).group(1))
            factors.append(Polynomial((0.0,) * k + (1.0,)))
            continue
        if part == "x":
            factors.append(Polynomial((0.0, 1.0)))
            continue
        if re.fullmatch(r"[-+0-9.eE]+", part):
            factors.append(Polynomial((float(part),)))
            continue
        m = _FACTOR.match(part)
        if not m:
            raise UnsupportedWeightError(f"unsupported weight {part!r}")
        kind, args = m.groups()
        vals = [float(a) for a in args.split(",") if a]
        if kind == "poly":
            if not vals:
                raise UnsupportedWeightError("poly needs at least one coefficient")
            factors.append(Polynomial(tuple(vals)))
        elif kind == "exp":
            factors.append(Exp(*vals[:1]))
        else:
            factors.append(Sin(*vals[:2]))
    if not factors:
        raise UnsupportedWeightError(f"empty weight expression {text!r}")
    return factors[0] if len(factors) == 1 else Product(tuple(factors))


@dataclass(frozen=True)
class ErgodicSumResult:
    n: int
    value: complex
    predicted_limit: float | None = None

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class ConvergenceFit:
    """Least-squares line through ``(log N, log value)``."""

    slope: float
    intercept: float
    r_squared: float

    def predict(self, n: float) -> float:
        return math.exp(self.intercept + self.slope * math.log(n))


def compensated_sum(terms: np.ndarray) -> complex:
    """Exactly rounded sum of complex terms (real and imaginary parts separately)."""
    terms = np.asarray(terms, dtype=complex)
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n}")
    if n > C.MAX_SUM_TERMS:
        raise CapacityError(f"N = {n} exceeds the cap {C.MAX_SUM_TERMS}")
    return int(n)


def _phases(idx: np.ndarray, phi: float) -> np.ndarray:
    return np.exp(1j * (idx * phi))


def phase_power_sum(k: int, phi: float, n: int) -> complex:
    """``sum_{n=0}^{N-1} (n/N)^k exp(i n phi)``."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    n = _check_n(n)
    k = int(k)
    idx = np.arange(n, dtype=float)
    # 0**0 == 1 keeps the k = 0 case a plain geometric sum
    if k * math.log2(max(n, 2)) < 900:
        # integer numerators keep exact cancellations exact; scale once at the end
        s = compensated_sum(idx**k * _phases(idx, phi))
        scale = float(n) ** k
        return complex(s.real / scale, s.imag / scale)
    return compensated_sum((idx / n) ** k * _phases(idx, phi))


def analytic_phase_sum(f: AnalyticWeight, phi: float, lo: int, hi: int, n: int) -> complex:
    """``sum_{j=lo}^{hi} f(j/N) exp(i j phi)`` for a weight from the supported family."""
    if not isinstance(f, AnalyticWeight):
        raise UnsupportedWeightError(
            f"weight must be Polynomial, Exp, Sin or a Product of them, got {type(f).__name__}"
        )
    n = _check_n(n)
    if not (0 <= lo <= hi <= n - 1):
        raise DomainError(f"need 0 <= L <= M <= N-1, got L={lo}, M={hi}, N={n}")
    idx = np.arange(lo, hi + 1, dtype=float)
    return compensated_sum(f(idx / n) * _phases(idx, phi))


def lemma1_limit(phi: float) -> float:
    """``1 / |1 - exp(i phi)|``, the large-N magnitude of the power-weighted sums."""
    gap = abs(1.0 - complex(math.cos(phi), math.sin(phi)))
    if gap < 1e-15:
        raise DomainError(f"phi = {phi} is 0 mod 2 pi: the limit has a pole there")
    return 1.0 / gap


def convergence_fit(points: Sequence[tuple[float, float]]) -> ConvergenceFit:
    """Ordinary least squares of ``log value`` on ``log N``."""
    if len(points) < 3:
        raise DomainError(f"need at least 3 points, got {len(points)}")
    ns = np.array([p[0] for p in points], dtype=float)
    vals = np.array([p[1] for p in points], dtype=float)
    if np.any(ns <= 0) or np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("convergence fit needs positive N and positive finite values")
    x, y = np.log(ns), np.log(vals)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DomainError("convergence fit needs at least two distinct N")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ConvergenceFit(slope, intercept, r2)
