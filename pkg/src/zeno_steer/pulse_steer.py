"""Steering by frequent unitary pulses whose eigenbasis rotates.

A run of ``N`` steps with ``dt = tau/N`` applies, for ``l = 1 .. N``, a noise
step ``exp(-i H_SB dt)`` followed by the pulse

    U_l = W_{l-1} U_{l-1} W_{l-1}^H,   W_j = exp(i K(j dt) dt),   U_0 = U.

Writing ``V_l = W_{l-1} ... W_0`` the whole sequence factorizes as

    U_N E ... U_1 E = V_N * prod_l (U exp(-i Kt_l dt))

with the interaction-picture generators ``Kt_l`` defined by
``exp(-i Kt_l dt) = V_l^H exp(-i K(l dt) dt) E V_l``. As ``N`` grows the
product approaches ``U^N`` times the time-ordered exponential of the
generators pinched onto the eigenspaces of ``U`` (the Zeno limit), so a
state starting in an eigenspace of ``U`` ends in the rotated eigenspace
``V_N P V_N^H``.

Every product here is in descending time order: the factor for the latest
step stands leftmost.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import constants as C
from ._parallel import ordered_map
from .ergodic import ConvergenceFit, convergence_fit
from .errors import DimensionError, DomainError, NonAnalyticScheduleError
from .linalg import (
    HermitianOperator,
    StateVector,
    UnitaryOperator,
    dagger,
    expi_matrix,
    logm_unitary,
    schatten_inf_norm,
)
from .scenario import GeneratorSchedule, SteeringScenario
from .spectral import SpectralDecomposition, decompose_unitary, pinch

__all__ = [
    "time_ordered",
    "pulse_sequence",
    "apply_pulse_sequence",
    "rotation_frame",
    "ktilde_step",
    "ktilde_sequence",
    "zeno_limit_operator",
    "theorem2_residual",
    "PulseRunResult",
    "PulseStudy",
    "run_pulse_study",
    "PULSE_CSV_HEADER",
]


def time_ordered(factors: Iterable[np.ndarray], dim: int | None = None) -> np.ndarray:
    """``F_{n-1} ... F_1 F_0`` for factors given in chronological order."""
    acc = None
    for f in factors:
        acc = f if acc is None else f @ acc
    if acc is None:
        if dim is None:
            raise DomainError("empty product needs an explicit dimension")
        return np.eye(dim, dtype=complex)
    return acc


def _unitary_array(u) -> np.ndarray:
    if not isinstance(u, UnitaryOperator):
        u = UnitaryOperator(u)
    return np.array(u.matrix)


def _hermitian_array(h) -> np.ndarray:
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    return np.array(h.matrix)


def _check_steps(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n}")
    return int(n)


def _bath_dim(sys_dim: int, joint_dim: int) -> int:
    if joint_dim % sys_dim:
        raise DimensionError(f"joint dimension {joint_dim} is not a multiple of system dimension {sys_dim}")
    return joint_dim // sys_dim


def _rotations(schedule: GeneratorSchedule, tau: float, n: int) -> Iterator[np.ndarray]:
    """``W_l = exp(i K(l dt) dt)`` for ``l = 0 .. N-1``."""
    dt = tau / n
    if schedule.kind == "constant":
        w = expi_matrix(schedule.values[0].matrix, dt)
        for _ in range(n):
            yield w
    else:
        for j in range(n):
            yield expi_matrix(schedule.at(j * dt), dt)


def rotation_frame(schedule: GeneratorSchedule, tau: float, n: int, steps: int | None = None) -> np.ndarray:
    """``V_l = W_{l-1} ... W_0`` after ``steps`` rotations (default all ``N``)."""
    n = _check_steps(n)
    steps = n if steps is None else steps
    if schedule.kind == "constant":
        return expi_matrix(schedule.values[0].matrix, steps * tau / n)
    gen = _rotations(schedule, tau, n)
    return time_ordered((next(gen) for _ in range(steps)), schedule.dim)


def pulse_sequence(u0, schedule: GeneratorSchedule, tau: float, n: int) -> list[UnitaryOperator]:
    """Pulses ``U_1 .. U_N``."""
    n = _check_steps(n)
    u = _unitary_array(u0)
    if schedule.dim != u.shape[0]:
        raise DimensionError(f"pulse dim {u.shape[0]} != generator dim {schedule.dim}")
    out = []
    for w in _rotations(schedule, tau, n):
        u = w @ u @ dagger(w)
        out.append(UnitaryOperator(u))
    return out


def apply_pulse_sequence(psi0, u0, schedule: GeneratorSchedule, h_sb, tau: float, n: int) -> StateVector:
    """``U_N E ... U_1 E |psi0>`` with ``E = exp(-i H_SB dt)`` and pulses acting as ``U_l (x) I_B``."""
    n = _check_steps(n)
    psi = psi0 if isinstance(psi0, StateVector) else StateVector(psi0)
    u = _unitary_array(u0)
    h = _hermitian_array(h_sb)
    if schedule.dim != u.shape[0]:
        raise DimensionError(f"pulse dim {u.shape[0]} != generator dim {schedule.dim}")
    if h.shape[0] != psi.dim:
        raise DimensionError(f"noise dim {h.shape[0]} != state dim {psi.dim}")
    eye_b = np.eye(_bath_dim(u.shape[0], psi.dim))
    e = expi_matrix(h, -tau / n)
    v = np.array(psi.amplitudes)
    for w in _rotations(schedule, tau, n):
        u = w @ u @ dagger(w)
        v = np.kron(u, eye_b) @ (e @ v)
    v = v / np.linalg.norm(v)
    return StateVector(v)


def ktilde_sequence(schedule: GeneratorSchedule, h_sb: np.ndarray, tau: float, n: int,
                    stop: int | None = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(Kt_l, exp(-i Kt_l dt))`` for ``l = 0 .. stop-1`` on the joint space."""
    h = np.asarray(h_sb, dtype=complex)
    d_s = schedule.dim
    eye_b = np.eye(_bath_dim(d_s, h.shape[0]))
    dt = tau / n
    e = expi_matrix(h, -dt)
    v = np.eye(h.shape[0], dtype=complex)
    stop = n if stop is None else stop
    const = schedule.kind == "constant"
    for j in range(stop):
        k = schedule.at(j * dt)
        if const and j:
            # closed form keeps the frame free of accumulated roundoff
            v = np.kron(expi_matrix(k, j * dt), eye_b)
        w = np.kron(expi_matrix(k, dt), eye_b)
        m = dagger(v) @ dagger(w) @ e @ v
        kt = -logm_unitary(m) / dt
        yield kt, m
        if not const:
            v = w @ v


def ktilde_step(step: int, schedule: GeneratorSchedule, h_sb, tau: float, n: int) -> HermitianOperator:
    """Interaction-picture generator ``Kt`` at step ``l`` (``0 <= l < N``).

    Principal-branch logarithm; raises BranchError when ``exp(-i Kt dt)``
    has an eigenphase too close to ``pi``.
    """
    n = _check_steps(n)
    if not (0 <= step < n):
        raise DomainError(f"step must satisfy 0 <= l < N, got l={step}, N={n}")
    h = _hermitian_array(h_sb)
    kt = None
    for kt, _ in ktilde_sequence(schedule, h, tau, n, stop=step + 1):
        pass
    return HermitianOperator(0.5 * (kt + dagger(kt)))


def _decomposition(u: np.ndarray, group_tol: float) -> SpectralDecomposition:
    return decompose_unitary(UnitaryOperator(u), group_tol)


def zeno_limit_operator(u0, schedule: GeneratorSchedule, h_sb, tau: float, n_grid: int,
                        group_tol: float = C.DEFAULT_GROUP_TOL) -> UnitaryOperator:
    """``U^N`` times the descending product of ``exp(-i dt sum_mu P_mu Kt_l P_mu)``.

    Everything is on the joint space, with ``U`` and its spectral
    projectors acting as ``(.) (x) I_B``.
    """
    n = _check_steps(n_grid)
    u = _unitary_array(u0)
    h = _hermitian_array(h_sb)
    bath = _bath_dim(u.shape[0], h.shape[0])
    dec = _decomposition(u, group_tol).embedded(bath)
    projs = dec.projector_stack()
    dt = tau / n
    prod = time_ordered(
        (expi_matrix(pinch(kt, projs), -dt) for kt, _ in ktilde_sequence(schedule, h, tau, n)),
        h.shape[0],
    )
    u_n = np.linalg.matrix_power(np.kron(u, np.eye(bath)), n)
    return UnitaryOperator(u_n @ prod)


def _schedule_residual(u: np.ndarray, gens: Iterable[np.ndarray], dt: float, n: int,
                       projs: np.ndarray) -> float:
    full = np.eye(u.shape[0], dtype=complex)
    zeno = np.eye(u.shape[0], dtype=complex)
    for h in gens:
        full = u @ expi_matrix(h, -dt) @ full
        zeno = expi_matrix(pinch(h, projs), -dt) @ zeno
    u_n = np.linalg.matrix_power(u, n)
    return schatten_inf_norm(dagger(u_n) @ full - zeno)


def theorem2_residual(u0, h_of_t: GeneratorSchedule, t: float, n: int,
                      group_tol: float = C.DEFAULT_GROUP_TOL,
                      allow_non_analytic: bool = False) -> float:
    """Operator-norm gap between the pulsed product and its pinched limit.

    ``|| U^{-N} prod_l U exp(-i H(l t/N) t/N) - prod_l exp(-i (t/N) sum_mu P_mu H(l t/N) P_mu) ||``

    The gap shrinks like ``1/N`` for generators with analytic entries, so
    only constant or polynomial schedules are accepted unless
    ``allow_non_analytic`` is set (which warns instead).
    """
    if int(n) != n or n < 2:
        raise DomainError(f"N must be an integer >= 2, got {n}")
    n = int(n)
    if not h_of_t.is_analytic:
        msg = f"{h_of_t.kind} schedule is not analytic in t; the 1/N residual rate is not guaranteed"
        if not allow_non_analytic:
            raise NonAnalyticScheduleError(msg)
        warnings.warn(msg, stacklevel=2)
    u = _unitary_array(u0)
    if h_of_t.dim != u.shape[0]:
        raise DimensionError(f"generator dim {h_of_t.dim} != pulse dim {u.shape[0]}")
    if h_of_t.is_zero:
        return 0.0
    projs = _decomposition(u, group_tol).projector_stack()
    dt = t / n
    return _schedule_residual(u, (h_of_t.at(j * dt) for j in range(n)), dt, n, projs)


@dataclass(frozen=True)
class PulseRunResult:
    n_steps: int
    weight: float
    residual_norm: float
    min_phase_gap: float
    m: int

    def __post_init__(self):
        if not (0.0 <= self.weight <= 1.0 + 1e-10):
            raise ValueError(f"weight {self.weight} outside [0, 1]")
        if self.residual_norm < 0:
            raise ValueError("residual norm must be nonnegative")

    @property
    def one_minus_weight(self) -> float:
        return max(1.0 - self.weight, 0.0)

    def csv_fields(self) -> list:
        return [self.n_steps, self.weight, self.one_minus_weight, self.residual_norm, self.m, self.min_phase_gap]


PULSE_CSV_HEADER = ["N", "weight", "one_minus_weight", "residual_norm", "m", "min_phase_gap"]


@dataclass(frozen=True)
class PulseStudy:
    """Rows per ``N`` plus log-log fits.

    A fit is None when fewer than three rows have a value above the
    roundoff floor ``FIT_FLOOR`` (for instance when steering is exact and
    ``1 - weight`` vanishes).
    """

    rows: tuple[PulseRunResult, ...]
    weight_fit: ConvergenceFit | None
    residual_fit: ConvergenceFit | None
    non_analytic: bool


def _fit_or_none(points) -> ConvergenceFit | None:
    # values at roundoff level carry no rate information
    pts = [(n, v) for n, v in points if v > C.FIT_FLOOR and math.isfinite(v)]
    if len(pts) < 3:
        return None
    return convergence_fit(pts)


def _pulse_row(scenario: SteeringScenario, n: int) -> PulseRunResult:
    dec = scenario.decomposition
    u = np.array(scenario.pulse_unitary.matrix)
    h = np.array(scenario.noise.h_sb.matrix)
    tau = scenario.tau
    psi = apply_pulse_sequence(scenario_state(scenario), u, scenario.schedule, h, tau, n)
    v_n = rotation_frame(scenario.schedule, tau, n)
    p_target = scenario.embed(v_n @ dec.projectors[scenario.target_index].matrix @ dagger(v_n))
    amp = psi.amplitudes
    weight = float(np.real(np.vdot(amp, p_target @ amp)))
    weight = min(max(weight, 0.0), 1.0)

    u_joint = scenario.embed(u)
    projs = dec.embedded(scenario.bath_dim).projector_stack()
    dt = tau / n
    full = np.eye(u_joint.shape[0], dtype=complex)
    zeno = np.eye(u_joint.shape[0], dtype=complex)
    for kt, m in ktilde_sequence(scenario.schedule, h, tau, n):
        full = u_joint @ m @ full
        zeno = expi_matrix(pinch(kt, projs), -dt) @ zeno
    u_n = np.linalg.matrix_power(u_joint, n)
    residual = schatten_inf_norm(dagger(u_n) @ full - zeno)
    return PulseRunResult(n, weight, residual, dec.min_phase_gap, dec.m)


def scenario_state(scenario: SteeringScenario) -> StateVector:
    s = scenario.initial_state
    if not isinstance(s, StateVector):
        raise DomainError("pulse steering propagates pure states; give a state vector")
    return s


def run_pulse_study(scenario: SteeringScenario, n_list: Sequence[int]) -> PulseStudy:
    """Weight in the rotated target eigenspace and the Zeno-limit residual per ``N``.

    The residual is the gap between ``prod_l U exp(-i Kt_l dt)`` and
    ``U^N prod_l exp(-i dt sum_mu P_mu Kt_l P_mu)`` on the same N-grid.
    """
    if scenario.pulse_unitary is None or scenario.target_index is None:
        raise DomainError("pulse study needs a scenario with a pulse unitary and target index")
    n_list = [_check_steps(n) for n in n_list]
    if not n_list:
        raise DomainError("N list is empty")
    scenario_state(scenario)
    rows = tuple(ordered_map(lambda n: _pulse_row(scenario, n), n_list))
    return PulseStudy(
        rows=rows,
        weight_fit=_fit_or_none((r.n_steps, r.one_minus_weight) for r in rows),
        residual_fit=_fit_or_none((r.n_steps, r.residual_norm) for r in rows),
        non_analytic=not scenario.schedule.is_analytic,
    )
