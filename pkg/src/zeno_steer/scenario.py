"""Steering scenarios: operators from Pauli expressions, generator schedules, noise.

Discretization convention, shared by both engines: a run of ``N`` steps over
duration ``tau`` uses ``dt = tau / N`` and samples the generator at the left
end point of every interval, ``K_j = K(j dt)`` for ``j = 0 .. N-1``.

Scenario documents are JSON objects::

    {
      "schema_version": 1,
      "name": "qubit_pi_rotation",
      "mode": "measure",              # or "pulse"
      "sys_qubits": 1,
      "bath_qubits": 0,               # optional, default 0
      "tau": 1.0,
      "schedule": {"kind": "constant", "value": "1.5707963267948966 * Y"},
      "noise": {"h_sb": "0.05 * XZ", "h_b": "0.3 * IZ"},   # optional
      "initial": {"projector": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
                  "state": {"vector": [[1, 0], [0, 0]]}},   # state optional
      "pulse": {"unitary": "Z", "nu": 0}                     # pulse mode
    }

An operator entry is either a Pauli expression string or a row-major nested
list of ``[re, im]`` pairs. Schedule kinds: ``constant`` (``value``),
``polynomial`` (``coefficients``: ``K(t) = sum_p A_p t^p``),
``piecewise_linear`` (``knots`` and ``values``) and ``table`` (``values``,
one per step of a run with ``N = len(values)``).
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Any, Iterable

import numpy as np

from . import constants as C
from .errors import (
    DimensionError,
    DomainError,
    PreconditionError,
    ScenarioError,
    ValidationError,
    ZenoSteerError,
)
from .linalg import (
    DensityOperator,
    HermitianOperator,
    Projector,
    StateVector,
    UnitaryOperator,
    as_matrix,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    schatten_inf_norm,
)

__all__ = [
    "PAULI",
    "pauli_string",
    "GeneratorSchedule",
    "sample_generator",
    "k_max_norm",
    "NoiseModel",
    "SteeringScenario",
    "parse_scenario",
    "scenario_to_dict",
    "dump_scenario",
    "load_scenario",
    "digest",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TERM = re.compile(rf"([-+]?)({_NUMBER})?(\*)?([A-Za-z]*)")


def _word_matrix(word: str) -> np.ndarray:
    return reduce(np.kron, (PAULI[c] for c in word))


def pauli_string(expr: str, n_qubits: int | None = None) -> HermitianOperator:
    """Hermitian operator from an expression such as ``"0.5 * XX + 0.1 * ZI"``.

    Terms are ``[sign][coefficient][*]WORD`` with WORD over ``IXYZ``; a bare
    number stands for a multiple of the identity (``n_qubits`` must then be
    known). Whitespace is ignored.
    """
    s = re.sub(r"\s+", "", expr)
    if not s:
        raise ValidationError("empty Pauli expression")
    if re.search(r"[0-9.][ij]", s) or "(" in s:
        raise ValidationError(f"non-real coefficient in {expr!r}")
    pos = 0
    terms: list[tuple[float, str]] = []
    while pos < len(s):
        m = _TERM.match(s, pos)
        sign, num, star, word = m.groups()
        if m.end() == pos or (not num and not word):
            raise ValidationError(f"cannot parse Pauli expression at {s[pos:]!r}")
        if terms and not sign:
            raise ValidationError(f"missing '+' or '-' before {s[pos:]!r}")
        if star and not word:
            raise ValidationError(f"dangling '*' in {expr!r}")
        bad = set(word) - set("IXYZ")
        if bad:
            raise ValidationError(f"unknown Pauli letter(s) {''.join(sorted(bad))!r} in {word!r}")
        coeff = float(num) if num else 1.0
        if sign == "-":
            coeff = -coeff
        terms.append((coeff, word))
        pos = m.end()

    lengths = {len(w) for _, w in terms if w}
    if len(lengths) > 1:
        raise ValidationError(f"inconsistent word lengths {sorted(lengths)} in {expr!r}")
    n = lengths.pop() if lengths else n_qubits
    if n is None:
        raise ValidationError(f"cannot infer qubit count from {expr!r}")
    if n_qubits is not None and n != n_qubits:
        raise DimensionError(f"expression acts on {n} qubits, expected {n_qubits}")
    if 2**n > C.MAX_DIM:
        raise DimensionError(f"{n} qubits exceed the dimension cap {C.MAX_DIM}")
    out = np.zeros((2**n, 2**n), dtype=complex)
    for coeff, word in terms:
        out += coeff * (_word_matrix(word) if word else np.eye(2**n))
    return HermitianOperator(out)


_KINDS = ("constant", "polynomial", "piecewise_linear", "table")


@dataclass(frozen=True, eq=False)
class GeneratorSchedule:
    """Time-dependent Hermitian generator ``K(t)`` on the system.

    ``values`` holds the payload matrices: one for ``constant``, the
    coefficients ``A_p`` for ``polynomial``, one per knot for
    ``piecewise_linear`` and one per step for ``table``. ``span`` is the
    duration a ``table`` covers.
    """

    kind: str
    values: tuple[HermitianOperator, ...]
    knots: tuple[float, ...] | None = None
    span: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown schedule kind {self.kind!r}; expected one of {_KINDS}")
        vals = tuple(v if isinstance(v, HermitianOperator) else HermitianOperator(v) for v in self.values)
        if not vals:
            raise ValidationError("schedule needs at least one matrix")
        if len({v.dim for v in vals}) != 1:
            raise DimensionError("schedule matrices have different dimensions")
        if self.kind == "constant" and len(vals) != 1:
            raise ValidationError("constant schedule takes exactly one matrix")
        object.__setattr__(self, "values", vals)
        if self.kind == "piecewise_linear":
            if self.knots is None or len(self.knots) != len(vals) or len(vals) < 2:
                raise ValidationError("piecewise_linear needs >= 2 knots, one matrix per knot")
            knots = tuple(float(t) for t in self.knots)
            if any(b <= a for a, b in zip(knots, knots[1:])):
                raise ValidationError(f"knot times must be strictly increasing, got {knots}")
            if knots[0] != 0.0:
                raise ValidationError(f"first knot must be at t = 0, got {knots[0]}")
            object.__setattr__(self, "knots", knots)
            object.__setattr__(self, "span", knots[-1])
        if self.kind == "table":
            if self.span is None or not self.span > 0:
                raise ValidationError("table schedule needs a positive span (the run duration)")
        # the stacked payload is what sampling uses
        stack = np.stack([v.matrix for v in vals])
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    # constructors
    @classmethod
    def constant(cls, k) -> "GeneratorSchedule":
        return cls("constant", (k,))

    @classmethod
    def zero(cls, dim: int) -> "GeneratorSchedule":
        return cls("constant", (np.zeros((dim, dim)),))

    @classmethod
    def polynomial(cls, coefficients: Iterable) -> "GeneratorSchedule":
        return cls("polynomial", tuple(coefficients))

    @classmethod
    def piecewise_linear(cls, knots: Iterable[float], values: Iterable) -> "GeneratorSchedule":
        return cls("piecewise_linear", tuple(values), knots=tuple(knots))

    @classmethod
    def table(cls, values: Iterable, span: float) -> "GeneratorSchedule":
        return cls("table", tuple(values), span=float(span))

    @property
    def dim(self) -> int:
        return self.values[0].dim

    @property
    def is_analytic(self) -> bool:
        """True for schedules with polynomial entries (constant or polynomial)."""
        return self.kind in ("constant", "polynomial")

    @property
    def is_zero(self) -> bool:
        return all(not np.any(v.matrix) for v in self.values)

    def at(self, t: float) -> np.ndarray:
        """``K(t)`` as a bare array (see sample_generator)."""
        stack = self._stack
        if self.kind == "constant":
            return stack[0]
        if self.kind == "polynomial":
            out = np.zeros_like(stack[0])
            for a in stack[::-1]:
                out = out * t + a
            return out
        if self.span is not None and not (-1e-12 * self.span <= t <= self.span * (1 + 1e-12)):
            raise DomainError(f"t = {t} outside the schedule span [0, {self.span}]")
        if self.kind == "piecewise_linear":
            knots = self.knots
            i = min(max(int(np.searchsorted(knots, t, side="right")) - 1, 0), len(knots) - 2)
            w = (t - knots[i]) / (knots[i + 1] - knots[i])
            w = min(max(w, 0.0), 1.0)
            return (1.0 - w) * stack[i] + w * stack[i + 1]
        dt = self.span / len(stack)
        x = t / dt
        j = int(round(x))
        if abs(x - j) > 1e-9 * max(1.0, abs(x)):
            raise DomainError(
                f"table schedule queried off-grid at t = {t} (grid spacing {dt})"
            )
        return stack[min(j, len(stack) - 1)]

    def samples(self, tau: float, n: int) -> np.ndarray:
        """Left-end-point samples ``K(j tau/N)``, shape ``(N, d, d)``."""
        if self.kind == "constant":
            return np.broadcast_to(self._stack[0], (n,) + self._stack[0].shape)
        dt = tau / n
        return np.stack([self.at(j * dt) for j in range(n)])


def sample_generator(schedule: GeneratorSchedule, t: float, tau: float | None = None) -> HermitianOperator:
    """Generator at time ``t``.

    ``tau`` bounds the admissible range ``0 <= t <= tau`` for schedules that
    carry no span of their own.
    """
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"t must be finite and nonnegative, got {t}")
    if tau is not None and t > tau * (1 + 1e-12):
        raise DomainError(f"t = {t} beyond the run duration {tau}")
    return HermitianOperator(schedule.at(t))


def k_max_norm(schedule: GeneratorSchedule, tau: float, n: int) -> float:
    """``max_j ||K(j tau/N)||_inf`` over the ``N`` left-end-point samples."""
    if schedule.kind == "constant":
        return schatten_inf_norm(schedule.values[0].matrix)
    samples = schedule.samples(tau, n)
    return float(max(np.linalg.norm(k, 2) for k in samples))


def _bath_factor(h_b: np.ndarray, sys_dim: int) -> np.ndarray:
    bath_dim = h_b.shape[0] // sys_dim
    b = np.einsum("iaib->ab", h_b.reshape(sys_dim, bath_dim, sys_dim, bath_dim)) / sys_dim
    return b


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Joint Hamiltonian ``h_sb`` on system (x) bath.

    ``h_b``, when given, names the bath-internal part of ``h_sb`` (an
    operator of the form ``I_S (x) B``). It does not change the dynamics,
    but the bound may use ``||h_sb - h_b||`` in place of ``||h_sb||``.
    """

    h_sb: HermitianOperator
    h_b: HermitianOperator | None = None
    sys_dim: int = 1

    def __post_init__(self):
        h_sb = self.h_sb if isinstance(self.h_sb, HermitianOperator) else HermitianOperator(self.h_sb)
        object.__setattr__(self, "h_sb", h_sb)
        if h_sb.dim % self.sys_dim:
            raise DimensionError(f"noise dim {h_sb.dim} not divisible by system dim {self.sys_dim}")
        if self.h_b is not None:
            h_b = self.h_b if isinstance(self.h_b, HermitianOperator) else HermitianOperator(self.h_b)
            if h_b.dim != h_sb.dim:
                raise DimensionError("h_b and h_sb must act on the same joint space")
            b = _bath_factor(h_b.matrix, self.sys_dim)
            dev = max_abs(h_b.matrix - np.kron(np.eye(self.sys_dim), b))
            if dev > C.BATH_FACTOR_TOL:
                raise ValidationError(f"h_b is not of the form I_S (x) B (deviation {dev:.3g})")
            object.__setattr__(self, "h_b", h_b)

    @classmethod
    def none(cls, sys_dim: int, bath_dim: int = 1) -> "NoiseModel":
        d = sys_dim * bath_dim
        return cls(HermitianOperator(np.zeros((d, d))), None, sys_dim)

    @property
    def coupling(self) -> np.ndarray:
        """``h_sb - h_b``: the part the measurements can feel."""
        if self.h_b is None:
            return self.h_sb.matrix
        return self.h_sb.matrix - self.h_b.matrix

    def norm(self, exclude_bath: bool = True) -> float:
        return schatten_inf_norm(self.coupling if exclude_bath else self.h_sb.matrix)


def _first_unit_eigvec(p: np.ndarray) -> np.ndarray:
    w, v = hermitian_eig(HermitianOperator(p))
    rank = int(round(float(np.trace(p).real)))
    return np.array(v.matrix[:, p.shape[0] - rank])


def _bath_ground(bath_dim: int) -> np.ndarray:
    e = np.zeros(bath_dim, dtype=complex)
    e[0] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class SteeringScenario:
    """Full problem statement for a measurement- or pulse-steering run.

    When ``initial_state`` is omitted it defaults to the first unit
    eigenvector of the initial projector (measurement mode) or of the
    target spectral projector (pulse mode), tensored with the bath state
    ``|0...0>``.
    """

    sys_dim: int
    tau: float
    schedule: GeneratorSchedule
    bath_dim: int = 1
    noise: NoiseModel | None = None
    initial_projector: Projector | None = None
    initial_state: StateVector | DensityOperator | None = None
    pulse_unitary: UnitaryOperator | None = None
    target_index: int | None = None
    mode: str = "measure"
    group_tol: float = C.DEFAULT_GROUP_TOL
    name: str = ""

    def __post_init__(self):
        errs: list[tuple[str, str]] = []
        setv = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.mode not in ("measure", "pulse"):
            errs.append(("mode", f"must be 'measure' or 'pulse', got {self.mode!r}"))
        if int(self.sys_dim) != self.sys_dim or self.sys_dim < 1:
            errs.append(("sys_dim", "must be a positive integer"))
        if int(self.bath_dim) != self.bath_dim or self.bath_dim < 1:
            errs.append(("bath_dim", "must be a positive integer"))
        if errs:
            raise ScenarioError(errs)
        d = self.sys_dim * self.bath_dim
        if d > C.MAX_DIM:
            raise ScenarioError([("bath_dim", f"joint dimension {d} exceeds {C.MAX_DIM}")])
        if not (isinstance(self.tau, (int, float)) and math.isfinite(self.tau) and self.tau > 0):
            errs.append(("tau", f"must be a positive finite number, got {self.tau!r}"))
        if self.schedule.dim != self.sys_dim:
            errs.append(("schedule", f"generator dim {self.schedule.dim} != system dim {self.sys_dim}"))
        if self.schedule.kind == "piecewise_linear" and abs(self.schedule.span - self.tau) > 1e-12 * self.tau:
            errs.append(("schedule.knots", f"knots must span [0, tau={self.tau}], last knot {self.schedule.span}"))
        if self.schedule.kind == "table" and abs(self.schedule.span - self.tau) > 1e-12 * self.tau:
            errs.append(("schedule", f"table span {self.schedule.span} != tau {self.tau}"))
        noise = self.noise if self.noise is not None else NoiseModel.none(self.sys_dim, self.bath_dim)
        if noise.h_sb.dim != d:
            errs.append(("noise.h_sb", f"dimension {noise.h_sb.dim} != joint dimension {d}"))
        elif noise.sys_dim != self.sys_dim:
            noise = NoiseModel(noise.h_sb, noise.h_b, self.sys_dim)
        setv("noise", noise)

        if self.initial_projector is not None:
            if not isinstance(self.initial_projector, Projector):
                setv("initial_projector", Projector(self.initial_projector))
            if self.initial_projector.dim != self.sys_dim:
                errs.append(("initial.projector", f"dimension {self.initial_projector.dim} != system dim"))
        if self.mode == "measure" and self.initial_projector is None:
            errs.append(("initial.projector", "required in measurement mode"))

        decomposition = None
        if self.pulse_unitary is not None:
            if not isinstance(self.pulse_unitary, UnitaryOperator):
                setv("pulse_unitary", UnitaryOperator(self.pulse_unitary))
            if self.pulse_unitary.dim != self.sys_dim:
                errs.append(("pulse.unitary", f"dimension {self.pulse_unitary.dim} != system dim"))
            else:
                from .spectral import decompose_unitary

                try:
                    decomposition = decompose_unitary(self.pulse_unitary, self.group_tol)
                except ZenoSteerError as exc:
                    errs.append(("pulse.unitary", str(exc)))
        if self.mode == "pulse":
            if self.pulse_unitary is None:
                errs.append(("pulse.unitary", "required in pulse mode"))
            if self.target_index is None:
                errs.append(("pulse.nu", "required in pulse mode"))
            elif decomposition is not None and not (0 <= self.target_index < decomposition.m):
                errs.append(("pulse.nu", f"index {self.target_index} outside 0..{decomposition.m - 1}"))
        if errs:
            raise ScenarioError(errs)
        setv("_decomposition", decomposition)

        if self.initial_state is None:
            if self.mode == "measure":
                sys_vec = _first_unit_eigvec(self.initial_projector.matrix)
            else:
                sys_vec = _first_unit_eigvec(decomposition.projectors[self.target_index].matrix)
            setv("initial_state", StateVector(np.kron(sys_vec, _bath_ground(self.bath_dim))))
        elif not isinstance(self.initial_state, (StateVector, DensityOperator)):
            arr = np.asarray(self.initial_state)
            setv("initial_state", StateVector(arr) if arr.ndim == 1 else DensityOperator(arr))
        if self.initial_state.dim != d:
            raise ScenarioError([("initial.state", f"dimension {self.initial_state.dim} != joint dimension {d}")])
        self._check_preconditions()

    def _check_preconditions(self):
        rho = self.initial_density()
        if self.mode == "measure":
            p0 = self.embed(self.initial_projector.matrix)
            dev = max_abs(p0 @ rho @ p0 - rho)
            if dev > C.INITIAL_SUPPORT_TOL:
                raise PreconditionError([(
                    "initial.state",
                    "initial state must lie in the initial projector's range, "
                    f"rho(0) = P0 rho(0) P0 (max deviation {dev:.3g})",
                )])
        else:
            p = self.embed(self.decomposition.projectors[self.target_index].matrix)
            weight = float(np.trace(p @ rho).real)
            if weight < 1.0 - C.PULSE_WEIGHT_TOL:
                raise PreconditionError([(
                    "initial.state",
                    f"initial state must lie in pulse eigenspace nu={self.target_index} "
                    f"(weight {weight:.12g} < 1)",
                )])

    @property
    def joint_dim(self) -> int:
        return self.sys_dim * self.bath_dim

    @property
    def decomposition(self):
        """Spectral decomposition of the pulse unitary (None without one)."""
        return self._decomposition

    def embed(self, op: np.ndarray) -> np.ndarray:
        """``op (x) I_B``."""
        if self.bath_dim == 1:
            return np.asarray(op, dtype=complex)
        return np.kron(op, np.eye(self.bath_dim))

    def initial_density(self) -> np.ndarray:
        s = self.initial_state
        return s.density() if isinstance(s, StateVector) else np.array(s.matrix)

    def initial_ensemble(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights and pure states (rows) whose mixture is the initial state."""
        s = self.initial_state
        if isinstance(s, StateVector):
            return np.ones(1), np.array(s.amplitudes)[None, :]
        w, v = np.linalg.eigh(s.matrix)
        keep = w > C.DENSITY_EIG_TOL
        w = w[keep] / w[keep].sum()
        return w, v[:, keep].T.copy()

    def replace(self, **changes) -> "SteeringScenario":
        fields = dict(
            sys_dim=self.sys_dim, tau=self.tau, schedule=self.schedule, bath_dim=self.bath_dim,
            noise=self.noise, initial_projector=self.initial_projector,
            initial_state=self.initial_state, pulse_unitary=self.pulse_unitary,
            target_index=self.target_index, mode=self.mode, group_tol=self.group_tol,
            name=self.name,
        )
        fields.update(changes)
        return SteeringScenario(**fields)


# ----------------------------------------------------------------------------
# documents

def _qubits(dim: int) -> int | None:
    n = dim.bit_length() - 1
    return n if 2**n == dim else None


def _operator(entry: Any, path: str, dim: int, errs: list, hermitian: bool = True):
    try:
        if isinstance(entry, str):
            n = _qubits(dim)
            if n is None:
                raise ValidationError(f"Pauli expressions need a qubit space, dimension is {dim}")
            m = pauli_string(entry, n).matrix if n > 0 else np.array([[float(entry)]], dtype=complex)
        elif isinstance(entry, list):
            m = matrix_from_json(entry)
        else:
            raise ValidationError(f"expected a Pauli string or a nested [re, im] matrix, got {type(entry).__name__}")
        if m.shape != (dim, dim):
            raise DimensionError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[1]}")
        return HermitianOperator(m) if hermitian else as_matrix(m)
    except ZenoSteerError as exc:
        errs.append((path, str(exc)))
        return None


def _number(doc: dict, key: str, errs: list, kind=float, default=None, required=True):
    if key not in doc:
        if required:
            errs.append((key, "missing required field"))
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v):
        errs.append((key, f"expected {kind.__name__}, got {v!r}"))
        return default
    return kind(v)


def _parse_schedule(doc: Any, sys_dim: int, tau: float | None, errs: list) -> GeneratorSchedule | None:
    if not isinstance(doc, dict):
        errs.append(("schedule", "missing or not an object"))
        return None
    kind = doc.get("kind")
    if kind not in _KINDS:
        errs.append(("schedule.kind", f"must be one of {_KINDS}, got {kind!r}"))
        return None
    n0 = len(errs)
    try:
        if kind == "constant":
            k = _operator(doc.get("value"), "schedule.value", sys_dim, errs)
            return None if len(errs) > n0 else GeneratorSchedule.constant(k)
        key = "coefficients" if kind == "polynomial" else "values"
        items = doc.get(key)
        if not isinstance(items, list) or not items:
            errs.append((f"schedule.{key}", "must be a non-empty list of operators"))
            return None
        mats = [_operator(e, f"schedule.{key}[{i}]", sys_dim, errs) for i, e in enumerate(items)]
        if len(errs) > n0:
            return None
        if kind == "polynomial":
            return GeneratorSchedule.polynomial(mats)
        if kind == "table":
            return GeneratorSchedule.table(mats, tau if tau else 1.0)
        knots = doc.get("knots")
        if not isinstance(knots, list):
            errs.append(("schedule.knots", "must be a list of times"))
            return None
        return GeneratorSchedule.piecewise_linear(knots, mats)
    except ZenoSteerError as exc:
        errs.append(("schedule", str(exc)))
        return None


def _dims(doc: dict, errs: list) -> tuple[int | None, int]:
    if "sys_dim" in doc:
        sys_dim = _number(doc, "sys_dim", errs, int)
    else:
        nq = _number(doc, "sys_qubits", errs, int)
        sys_dim = 2**nq if nq is not None and nq >= 0 else None
    if "bath_dim" in doc:
        bath_dim = _number(doc, "bath_dim", errs, int, default=1)
    else:
        nb = _number(doc, "bath_qubits", errs, int, default=0, required=False)
        bath_dim = 2**nb if nb is not None and nb >= 0 else 1
    if sys_dim is not None and sys_dim < 1:
        errs.append(("sys_qubits", "must be positive"))
        sys_dim = None
    if sys_dim is not None and sys_dim * bath_dim > C.MAX_DIM:
        errs.append(("bath_qubits", f"joint dimension {sys_dim * bath_dim} exceeds {C.MAX_DIM}"))
        sys_dim = None
    return sys_dim, bath_dim


def parse_scenario(text: str | bytes | dict) -> SteeringScenario:
    """Validate a scenario document and build the scenario.

    Raises ScenarioError listing every violation found, each with its field
    path; PreconditionError (a subclass) when only the physical
    preconditions fail.
    """
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([("<document>", f"not valid JSON: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise ScenarioError([("<document>", "top level must be an object")])
    errs: list[tuple[str, str]] = []
    version = doc.get("schema_version")
    if version != C.SCHEMA_VERSION:
        errs.append(("schema_version", f"expected {C.SCHEMA_VERSION}, got {version!r}"))
    mode = doc.get("mode", "measure")
    if mode not in ("measure", "pulse"):
        errs.append(("mode", f"must be 'measure' or 'pulse', got {mode!r}"))
    sys_dim, bath_dim = _dims(doc, errs)
    tau = _number(doc, "tau", errs)
    if tau is not None and not (math.isfinite(tau) and tau > 0):
        errs.append(("tau", f"must be positive, got {tau}"))
    if sys_dim is None:
        raise ScenarioError(errs)
    joint = sys_dim * bath_dim

    schedule = _parse_schedule(doc.get("schedule"), sys_dim, tau, errs)

    noise = None
    ndoc = doc.get("noise")
    if ndoc is not None:
        if not isinstance(ndoc, dict):
            errs.append(("noise", "must be an object"))
        else:
            h_sb = _operator(ndoc.get("h_sb", [[[0.0, 0.0]] * joint] * joint), "noise.h_sb", joint, errs)
            h_b = _operator(ndoc["h_b"], "noise.h_b", joint, errs) if ndoc.get("h_b") is not None else None
            if h_sb is not None and "noise.h_b" not in {p for p, _ in errs}:
                try:
                    noise = NoiseModel(h_sb, h_b, sys_dim)
                except ZenoSteerError as exc:
                    errs.append(("noise.h_b", str(exc)))

    projector = state = None
    idoc = doc.get("initial", {})
    if not isinstance(idoc, dict):
        errs.append(("initial", "must be an object"))
        idoc = {}
    if idoc.get("projector") is not None:
        m = _operator(idoc["projector"], "initial.projector", sys_dim, errs)
        if m is not None:
            try:
                projector = Projector(m.matrix)
            except ZenoSteerError as exc:
                errs.append(("initial.projector", str(exc)))
    sdoc = idoc.get("state")
    if sdoc is not None:
        try:
            if isinstance(sdoc, dict) and "vector" in sdoc:
                arr = np.asarray(sdoc["vector"], dtype=float)
                if arr.ndim != 2 or arr.shape[1] != 2:
                    raise ValidationError("vector must be a list of [re, im] pairs")
                state = StateVector(arr[:, 0] + 1j * arr[:, 1])
            elif isinstance(sdoc, dict) and "density" in sdoc:
                state = DensityOperator(matrix_from_json(sdoc["density"]))
            else:
                raise ValidationError("state must be {'vector': ...} or {'density': ...}")
            if state.dim != joint:
                raise DimensionError(f"state dimension {state.dim} != joint dimension {joint}")
        except (ZenoSteerError, ValueError, TypeError) as exc:
            errs.append(("initial.state", str(exc)))
            state = None

    unitary = nu = None
    group_tol = C.DEFAULT_GROUP_TOL
    pdoc = doc.get("pulse")
    if pdoc is not None:
        if not isinstance(pdoc, dict):
            errs.append(("pulse", "must be an object"))
        else:
            m = _operator(pdoc.get("unitary"), "pulse.unitary", sys_dim, errs, hermitian=False)
            if m is not None:
                try:
                    unitary = UnitaryOperator(m)
                except ZenoSteerError as exc:
                    errs.append(("pulse.unitary", str(exc)))
            if "nu" in pdoc:
                nu = _number(pdoc, "nu", errs, int)
            if "group_tol" in pdoc:
                group_tol = _number(pdoc, "group_tol", errs)

    if errs or schedule is None:
        raise ScenarioError(errs or [("schedule", "invalid")])
    return SteeringScenario(
        sys_dim=sys_dim, tau=float(tau), schedule=schedule, bath_dim=bath_dim, noise=noise,
        initial_projector=projector, initial_state=state, pulse_unitary=unitary,
        target_index=nu, mode=mode, group_tol=group_tol, name=str(doc.get("name", "")),
    )


def _dims_doc(sys_dim: int, bath_dim: int) -> dict:
    ns, nb = _qubits(sys_dim), _qubits(bath_dim)
    if ns is not None and nb is not None:
        return {"sys_qubits": ns, "bath_qubits": nb}
    return {"sys_dim": sys_dim, "bath_dim": bath_dim}


def scenario_to_dict(s: SteeringScenario) -> dict:
    """Document form with every operator written as a raw matrix."""
    sched: dict[str, Any] = {"kind": s.schedule.kind}
    mats = [matrix_to_json(v.matrix) for v in s.schedule.values]
    if s.schedule.kind == "constant":
        sched["value"] = mats[0]
    elif s.schedule.kind == "polynomial":
        sched["coefficients"] = mats
    else:
        sched["values"] = mats
        if s.schedule.kind == "piecewise_linear":
            sched["knots"] = list(s.schedule.knots)
    doc: dict[str, Any] = {
        "schema_version": C.SCHEMA_VERSION,
        "name": s.name,
        "mode": s.mode,
        **_dims_doc(s.sys_dim, s.bath_dim),
        "tau": s.tau,
        "schedule": sched,
        "noise": {
            "h_sb": matrix_to_json(s.noise.h_sb.matrix),
            "h_b": None if s.noise.h_b is None else matrix_to_json(s.noise.h_b.matrix),
        },
    }
    initial: dict[str, Any] = {}
    if s.initial_projector is not None:
        initial["projector"] = matrix_to_json(s.initial_projector.matrix)
    if isinstance(s.initial_state, StateVector):
        initial["state"] = {"vector": [[float(a.real), float(a.imag)] for a in s.initial_state.amplitudes]}
    else:
        initial["state"] = {"density": matrix_to_json(s.initial_state.matrix)}
    doc["initial"] = initial
    if s.pulse_unitary is not None:
        doc["pulse"] = {
            "unitary": matrix_to_json(s.pulse_unitary.matrix),
            "nu": s.target_index,
            "group_tol": s.group_tol,
        }
    return doc


def dump_scenario(s: SteeringScenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=1)


def load_scenario(path) -> tuple[SteeringScenario, str]:
    """Read and parse a scenario file; returns the scenario and its sha256 digest."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_scenario(raw.decode("utf-8")), digest(raw)


def digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()
