import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P0, SX, SY, SZ, kron, pi_rotation
from zeno_steer.errors import CapacityError, DomainError, InvariantViolation
from zeno_steer.measure_steer import (
    MeasurementRunResult,
    MonteCarloConfig,
    all_success_probability,
    branch_enumeration,
    final_projection_probability,
    measurement_projectors,
    run_measurement_study,
    sample_trajectories,
)
from zeno_steer.scenario import GeneratorSchedule, SteeringScenario


def _p_all_closed(n):
    # consecutive target states overlap by cos(pi / 2N)
    return math.cos(math.pi / (2 * n)) ** (2 * n)


def _p_final_closed(n):
    # dephasing keeps the Bloch component along the next axis, angle pi/N apart
    return 0.5 * (1.0 + math.cos(math.pi / n) ** n)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 100])
def test_noiseless_rotation_closed_forms(n):
    s = pi_rotation()
    assert all_success_probability(s, n) == pytest.approx(_p_all_closed(n), abs=1e-13)
    assert final_projection_probability(s, n) == pytest.approx(_p_final_closed(n), abs=1e-13)


def test_small_n_examples():
    s = pi_rotation()
    assert all_success_probability(s, 1) == pytest.approx(0.0, abs=1e-15)
    assert all_success_probability(s, 2) == pytest.approx(0.25, abs=1e-14)
    assert all_success_probability(s, 10) == pytest.approx(0.7805, abs=5e-5)


def test_last_projector_is_the_target():
    s = pi_rotation()
    *_, last = measurement_projectors(s, 37)
    assert np.allclose(last, np.diag([0.0, 1.0]), atol=1e-13)


def test_zero_generator_is_certain():
    s = SteeringScenario(sys_dim=2, tau=1.0, schedule=GeneratorSchedule.zero(2), initial_projector=P0)
    for n in (1, 7):
        assert all_success_probability(s, n) == 1.0
        assert final_projection_probability(s, n) == 1.0
        mc = sample_trajectories(s, n, 500, seed=3)
        assert mc.estimate == 1.0 and mc.stderr == 0.0


def _noisy():
    return pi_rotation(n_bath_qubits=1, h_sb=0.2 * kron(SX, SZ) + 0.1 * kron(SZ, SX))


@pytest.mark.parametrize("n", [1, 3, 6])
def test_branch_enumeration_sums_and_marginals(n):
    s = _noisy()
    br = branch_enumeration(s, n)
    assert len(br) == 2**n
    assert math.fsum(br.values()) == pytest.approx(1.0, abs=1e-12)
    assert br["1" * n] == pytest.approx(all_success_probability(s, n), abs=1e-12)
    last = math.fsum(p for k, p in br.items() if k.endswith("1"))
    assert last == pytest.approx(final_projection_probability(s, n), abs=1e-12)


def test_branch_enumeration_cap():
    with pytest.raises(CapacityError):
        branch_enumeration(pi_rotation(), 40)


def test_domain_errors():
    s = pi_rotation()
    for bad in (0, -3, 2.5):
        with pytest.raises(DomainError):
            all_success_probability(s, bad)
    with pytest.raises(DomainError):
        sample_trajectories(s, 4, 0, seed=1)


def test_mixed_initial_state_averages_members():
    rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    mixed = pi_rotation(n_bath_qubits=1, h_sb=0.2 * kron(SX, SZ)).replace(initial_state=rho)
    up = mixed.replace(initial_state=np.array([1, 0, 0, 0], dtype=complex))
    down = mixed.replace(initial_state=np.array([0, 1, 0, 0], dtype=complex))
    for n in (3, 8):
        avg = 0.5 * (final_projection_probability(up, n) + final_projection_probability(down, n))
        assert final_projection_probability(mixed, n) == pytest.approx(avg, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 0.5), st.integers(1, 40))
def test_all_success_never_exceeds_final(theta, g, n):
    s = SteeringScenario(
        sys_dim=2, tau=1.0, bath_dim=2, schedule=GeneratorSchedule.constant(theta * SY),
        noise=None if g == 0 else __import__("zeno_steer").NoiseModel(g * kron(SX, SX), None, 2),
        initial_projector=P0,
    )
    pa = all_success_probability(s, n)
    pf = final_projection_probability(s, n)
    assert 0.0 <= pa <= pf + 1e-12 <= 1.0 + 1e-12


def test_monte_carlo_reproducible_across_threads(monkeypatch):
    s = _noisy()
    monkeypatch.setenv("ZENO_STEER_THREADS", "1")
    a = sample_trajectories(s, 12, 3000, seed=99)
    monkeypatch.setenv("ZENO_STEER_THREADS", "4")
    b = sample_trajectories(s, 12, 3000, seed=99)
    assert a == b
    c = sample_trajectories(s, 12, 3000, seed=100)
    assert c.step_pi_counts != a.step_pi_counts


def test_monte_carlo_agrees_with_exact():
    s = _noisy()
    n = 12
    mc = sample_trajectories(s, n, 20000, seed=7)
    exact = final_projection_probability(s, n)
    assert abs(mc.estimate - exact) <= 4 * mc.stderr + 1e-3
    assert mc.final_pi + mc.final_perp + mc.aborted == mc.n_traj
    assert mc.all_pi <= mc.final_pi
    assert mc.step_pi_counts[-1] == mc.final_pi


def test_study_rows_bound_and_epsilon():
    rows = run_measurement_study(pi_rotation(), [10, 100])
    r10, r100 = rows
    assert r10.bound < 0
    assert r100.epsilon == pytest.approx(0.10185, abs=1e-5)
    assert r100.bound == pytest.approx(0.88723, abs=1e-5)
    assert r100.p_final_in_target >= r100.bound
    assert r100.mc_estimate is None


def test_study_with_monte_carlo_columns():
    rows = run_measurement_study(_noisy(), [4, 8], MonteCarloConfig(n_traj=2000, seed=5))
    assert all(r.seed == 5 and r.mc_stderr is not None for r in rows)
    assert len(rows[0].csv_fields()) == 8


def test_study_rejects_unsorted_lists():
    with pytest.raises(DomainError):
        run_measurement_study(pi_rotation(), [16, 8])
    with pytest.raises(DomainError):
        run_measurement_study(pi_rotation(), [])


def test_run_result_checks_ordering_invariant():
    with pytest.raises(InvariantViolation):
        MeasurementRunResult(n_steps=4, p_all_success=0.9, p_final_in_target=0.5, epsilon=1.0, bound=-1.0)
    with pytest.raises(InvariantViolation):
        MeasurementRunResult(n_steps=4, p_all_success=0.1, p_final_in_target=0.5, epsilon=0.01, bound=0.9)


def test_static_zeno_failure_decays_like_one_over_n():
    # K = 0, noise XX: the failure probability of repeated projection falls as 1/N
    s = SteeringScenario(
        sys_dim=2, tau=1.0, bath_dim=2, schedule=GeneratorSchedule.zero(2),
        noise=__import__("zeno_steer").NoiseModel(0.5 * kron(SX, SX) + 0.3 * kron(SZ, SY), None, 2),
        initial_projector=P0,
    )
    ns = [2**k for k in range(6, 12)]
    fail = [1.0 - all_success_probability(s, n) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(fail), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)
