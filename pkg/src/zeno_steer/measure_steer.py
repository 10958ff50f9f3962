"""Steering by frequent projective measurements along a rotating axis.

Step ``j = 0 .. N-1`` of a run evolves the joint state for ``dt = tau/N``
under the noise Hamiltonian and then measures ``{P_{j+1}, 1 - P_{j+1}}``,
where ``P_{j+1} = exp(i K_j dt) P_j exp(-i K_j dt)`` and ``K_j = K(j dt)``.
The measured projectors act as ``P (x) I_B``.

Three exact routes compute outcome statistics and cross-check each other:

* ``all_success_probability`` -- chain of conditional probabilities for the
  record in which every outcome is ``P``;
* ``final_projection_probability`` -- outcome-averaged (dephasing) channel,
  giving the probability that the last outcome is ``P_N``;
* ``branch_enumeration`` -- all ``2**N`` records, for small ``N``.

``sample_trajectories`` draws measurement records with Born probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import constants as C
from . import rng
from ._parallel import ordered_map, thread_count
from . import bounds
from .errors import CapacityError, DomainError, InvariantViolation, PreconditionError
from .linalg import dagger, expi_matrix
from .scenario import SteeringScenario, k_max_norm

__all__ = [
    "MonteCarloConfig",
    "TrajectorySample",
    "MeasurementRunResult",
    "measurement_projectors",
    "all_success_probability",
    "final_projection_probability",
    "sample_trajectories",
    "branch_enumeration",
    "run_measurement_study",
    "MEASURE_CSV_HEADER",
]

# fixed batch size keeps per-trajectory arithmetic identical for any thread count
_MC_CHUNK = 1024


def _check(scenario: SteeringScenario, n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n}")
    if scenario.initial_projector is None:
        raise PreconditionError([("initial.projector", "measurement steering needs an initial projector")])
    p0 = scenario.embed(scenario.initial_projector.matrix)
    rho = scenario.initial_density()
    dev = float(np.max(np.abs(p0 @ rho @ p0 - rho)))
    if dev > C.INITIAL_SUPPORT_TOL:
        raise PreconditionError([(
            "initial.state",
            f"initial state must satisfy rho(0) = P0 rho(0) P0 (max deviation {dev:.3g})",
        )])


def _noise_step(scenario: SteeringScenario, dt: float) -> np.ndarray:
    return expi_matrix(scenario.noise.h_sb.matrix, -dt)


def _snap(p: np.ndarray) -> np.ndarray:
    # re-project onto the dominant eigenspace so idempotency errors do not pile up over N steps
    w, v = np.linalg.eigh(0.5 * (p + dagger(p)))
    keep = v[:, w > 0.5]
    return keep @ dagger(keep)


def measurement_projectors(scenario: SteeringScenario, n: int) -> Iterator[np.ndarray]:
    """Yield the embedded projectors ``P_1 .. P_N`` of an ``N``-step run."""
    dt = scenario.tau / n
    sched = scenario.schedule
    p = np.array(scenario.initial_projector.matrix)
    w_const = expi_matrix(sched.values[0].matrix, dt) if sched.kind == "constant" else None
    for j in range(n):
        w = w_const if w_const is not None else expi_matrix(sched.at(j * dt), dt)
        p = _snap(w @ p @ dagger(w))
        yield scenario.embed(p)


def all_success_probability(scenario: SteeringScenario, n: int) -> float:
    """Probability that all ``N`` measurements return the steered outcome ``P_j``."""
    _check(scenario, n)
    weights, states = scenario.initial_ensemble()
    e = _noise_step(scenario, scenario.tau / n)
    psi = states.T  # columns are ensemble members
    for p in measurement_projectors(scenario, n):
        psi = p @ (e @ psi)
    prob = float(np.sum(weights * np.sum(np.abs(psi) ** 2, axis=0)))
    return min(max(prob, 0.0), 1.0)


def final_projection_probability(scenario: SteeringScenario, n: int) -> float:
    """Probability that the last measurement returns ``P_N``.

    Intermediate outcomes are averaged over, i.e. the state passes through
    the dephasing channel ``rho -> P rho P + (1-P) rho (1-P)`` at every step.
    """
    _check(scenario, n)
    rho = scenario.initial_density()
    e = _noise_step(scenario, scenario.tau / n)
    ed = dagger(e)
    last = None
    for p in measurement_projectors(scenario, n):
        rho = e @ rho @ ed
        pr = p @ rho
        rho = rho - pr - rho @ p + 2.0 * pr @ p
        last = p
    prob = float(np.trace(last @ rho).real)
    return min(max(prob, 0.0), 1.0)


@dataclass(frozen=True)
class TrajectorySample:
    """Monte Carlo estimate of the final-outcome probability.

    ``step_pi_counts[j]`` counts trajectories whose measurement ``j+1``
    returned ``P``. Aborted trajectories (a drawn branch with weight below
    the renormalization floor) stop evolving and count as failures.
    """

    estimate: float
    stderr: float
    n_traj: int
    seed: int
    final_pi: int
    final_perp: int
    all_pi: int
    aborted: int
    step_pi_counts: tuple[int, ...] = field(repr=False)

    @property
    def per_outcome_counts(self) -> dict[str, int]:
        return {
            "final_pi": self.final_pi,
            "final_perp": self.final_perp,
            "all_pi": self.all_pi,
            "aborted": self.aborted,
        }


def _run_chunk(args) -> tuple[int, int, int, np.ndarray]:
    scenario, n, seed, lo, hi = args
    weights, states = scenario.initial_ensemble()
    keys = rng.stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
    m = hi - lo
    # draw 0 picks the ensemble member, draws 1..N the measurement outcomes
    if len(weights) == 1:
        pick = np.zeros(m, dtype=int)
    else:
        cdf = np.cumsum(weights)
        pick = np.minimum(np.searchsorted(cdf, rng.uniforms(keys, 0), side="right"), len(weights) - 1)
    psi = states[pick]  # rows
    e_t = _noise_step(scenario, scenario.tau / n).T
    alive = np.ones(m, dtype=bool)
    all_pi = np.ones(m, dtype=bool)
    last_pi = np.zeros(m, dtype=bool)
    step_counts = np.zeros(n, dtype=np.int64)
    for j, p in enumerate(measurement_projectors(scenario, n)):
        psi = psi @ e_t
        proj = psi @ p.T
        p_pi = np.sum(np.abs(proj) ** 2, axis=1)
        u = rng.uniforms(keys, j + 1)
        got = u < p_pi
        weight = np.where(got, p_pi, 1.0 - p_pi)
        aborted_now = alive & (weight < C.RENORM_FLOOR)
        alive &= ~aborted_now
        new = np.where(got[:, None], proj, psi - proj)
        scale = np.where(alive, 1.0 / np.sqrt(np.where(alive, weight, 1.0)), 1.0)
        psi = np.where(alive[:, None], new * scale[:, None], psi)
        got &= alive
        all_pi &= got
        last_pi = got
        step_counts[j] = int(np.count_nonzero(got))
    final_pi = int(np.count_nonzero(last_pi))
    return final_pi, int(np.count_nonzero(all_pi & alive)), int(np.count_nonzero(~alive)), step_counts


def sample_trajectories(scenario: SteeringScenario, n: int, n_traj: int, seed: int) -> TrajectorySample:
    """Sample ``n_traj`` measurement records; estimate P(last outcome is P_N).

    Bit-for-bit reproducible for fixed ``(seed, n_traj, N)`` regardless of
    ``ZENO_STEER_THREADS``.
    """
    _check(scenario, n)
    if int(n_traj) != n_traj or n_traj < 1:
        raise DomainError(f"n_traj must be a positive integer, got {n_traj}")
    seed = int(seed) & ((1 << 64) - 1)
    chunks = [(scenario, n, seed, lo, min(lo + _MC_CHUNK, n_traj)) for lo in range(0, n_traj, _MC_CHUNK)]
    parts = ordered_map(_run_chunk, chunks)
    final_pi = sum(p[0] for p in parts)
    all_pi = sum(p[1] for p in parts)
    aborted = sum(p[2] for p in parts)
    steps = np.sum([p[3] for p in parts], axis=0)
    est = final_pi / n_traj
    stderr = math.sqrt(est * (1.0 - est) / n_traj)
    return TrajectorySample(
        estimate=est, stderr=stderr, n_traj=int(n_traj), seed=seed,
        final_pi=final_pi, final_perp=int(n_traj) - final_pi - aborted,
        all_pi=all_pi, aborted=aborted, step_pi_counts=tuple(int(c) for c in steps),
    )


def branch_enumeration(scenario: SteeringScenario, n: int) -> dict[str, float]:
    """Exact probability of every outcome record.

    Keys are strings of length ``N``, character ``j`` describing measurement
    ``j+1``: ``"1"`` for ``P`` and ``"0"`` for its complement.
    """
    if n > C.MAX_ENUM_STEPS:
        raise CapacityError(f"branch enumeration is capped at N = {C.MAX_ENUM_STEPS}, got {n}")
    _check(scenario, n)
    weights, states = scenario.initial_ensemble()
    e_t = _noise_step(scenario, scenario.tau / n).T
    branches = states[None, :, :]  # (branch, member, dim)
    for p in measurement_projectors(scenario, n):
        branches = branches @ e_t
        proj = branches @ p.T
        # new last bit: 0 = complement, 1 = P, so index = 2*old + bit
        branches = np.stack([branches - proj, proj], axis=1).reshape(-1, *branches.shape[1:])
    probs = np.einsum("k,bkd->b", weights, np.abs(branches) ** 2)
    return {format(i, f"0{n}b"): float(pr) for i, pr in enumerate(probs)}


@dataclass(frozen=True)
class MonteCarloConfig:
    n_traj: int
    seed: int = 0


@dataclass(frozen=True)
class MeasurementRunResult:
    n_steps: int
    p_all_success: float
    p_final_in_target: float
    epsilon: float
    bound: float
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    seed: int | None = None

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise InvariantViolation(f"N={self.n_steps}: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.p_all_success > self.p_final_in_target + 1e-10:
            out.append(
                f"all-success probability {self.p_all_success!r} exceeds "
                f"final-projection probability {self.p_final_in_target!r}"
            )
        if self.bound >= 0 and self.p_final_in_target < self.bound - 1e-9:
            out.append(f"final-projection probability {self.p_final_in_target!r} below bound {self.bound!r}")
        return out

    def csv_fields(self) -> list:
        return [
            self.n_steps, self.p_all_success, self.p_final_in_target, self.epsilon, self.bound,
            self.mc_estimate, self.mc_stderr, self.seed,
        ]


MEASURE_CSV_HEADER = ["N", "p_all", "p_final", "epsilon", "bound", "mc_estimate", "mc_stderr", "seed"]


def run_measurement_study(
    scenario: SteeringScenario,
    n_list: Sequence[int],
    mc_config: MonteCarloConfig | None = None,
    exclude_bath: bool = True,
) -> list[MeasurementRunResult]:
    """Exact probabilities, bound and optional Monte Carlo estimate for each ``N``.

    With ``exclude_bath`` the bound uses the noise norm with the declared
    bath-internal part removed.
    """
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise DomainError("N list is empty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError(f"N list must be strictly ascending, got {n_list}")
    h_norm = scenario.noise.norm(exclude_bath=exclude_bath)

    def one(n: int) -> MeasurementRunResult:
        eps = bounds.epsilon(bounds.BoundInputs(k_max_norm(scenario.schedule, scenario.tau, n), h_norm, scenario.tau, n))
        mc = None
        if mc_config is not None and mc_config.n_traj > 0:
            mc = sample_trajectories(scenario, n, mc_config.n_traj, mc_config.seed)
        return MeasurementRunResult(
            n_steps=n,
            p_all_success=all_success_probability(scenario, n),
            p_final_in_target=final_projection_probability(scenario, n),
            epsilon=eps,
            bound=bounds.success_bound(eps),
            mc_estimate=None if mc is None else mc.estimate,
            mc_stderr=None if mc is None else mc.stderr,
            seed=None if mc is None else mc.seed,
        )

    # Monte Carlo already parallelizes internally
    if mc_config is not None and thread_count() > 1:
        return [one(n) for n in n_list]
    return ordered_map(one, n_list)
