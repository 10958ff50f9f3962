import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import CZ, I2, SX, SY, SZ, kron, random_hermitian, random_unitary
from zeno_steer.errors import BranchError, DomainError, NonAnalyticScheduleError
from zeno_steer.pulse_steer import (
    apply_pulse_sequence,
    ktilde_sequence,
    ktilde_step,
    pulse_sequence,
    rotation_frame,
    run_pulse_study,
    theorem2_residual,
    time_ordered,
    zeno_limit_operator,
)
from zeno_steer.scenario import GeneratorSchedule


def test_time_ordered_puts_latest_left():
    a, b = SX, SZ
    assert np.array_equal(time_ordered([a, b]), b @ a)
    assert np.array_equal(time_ordered([], 2), I2)
    with pytest.raises(DomainError):
        time_ordered([])


def test_zero_generator_leaves_pulses_alone():
    u = random_unitary(np.random.default_rng(1), 2)
    for p in pulse_sequence(u, GeneratorSchedule.zero(2), 1.0, 9):
        assert np.allclose(p.matrix, u, atol=1e-14)


def test_identity_pulse_is_fixed():
    sched = GeneratorSchedule.polynomial([SX, 0.4 * SZ])
    for p in pulse_sequence(I2, sched, 1.3, 17):
        assert np.allclose(p.matrix, I2, atol=1e-14)


def test_pulses_match_telescoped_conjugation(rng):
    # independent route: build V_l from scipy exponentials and conjugate U_0 once
    u0 = random_unitary(rng, 2)
    sched = GeneratorSchedule.polynomial([0.7 * SY, 0.3 * SX])
    tau, n = 1.5, 12
    dt = tau / n
    pulses = pulse_sequence(u0, sched, tau, n)
    v = I2
    for ell in range(n):
        v = expm(1j * sched.at(ell * dt) * dt) @ v
        assert np.allclose(pulses[ell].matrix, v @ u0 @ v.conj().T, atol=1e-13)
        assert np.allclose(rotation_frame(sched, tau, n, ell + 1), v, atol=1e-13)


def test_constant_frame_closed_form():
    k = 0.8 * SX + 0.5 * SZ
    assert np.allclose(rotation_frame(GeneratorSchedule.constant(k), 2.0, 64), expm(2j * k), atol=1e-13)


def test_ktilde_constant_generator_without_noise_is_k():
    k = 0.8 * SX + 0.3 * SY
    sched = GeneratorSchedule.constant(k)
    for ell in (0, 5, 19):
        assert np.allclose(ktilde_step(ell, sched, np.zeros((2, 2)), 1.0, 20).matrix, k, atol=1e-12)


def test_ktilde_zero_schedule_is_noise():
    h = 0.3 * kron(SX, SZ) + 0.1 * kron(SZ, SZ)
    kt = ktilde_step(3, GeneratorSchedule.zero(2), h, 1.0, 10)
    assert np.allclose(kt.matrix, h, atol=1e-12)


def test_ktilde_first_step_oracle(rng):
    k = random_hermitian(rng, 2)
    h = random_hermitian(rng, 4) * 0.2
    dt = 0.05
    kt = ktilde_step(0, GeneratorSchedule.constant(k), h, 1.0, 20).matrix
    m = expm(-1j * np.kron(k, I2) * dt) @ expm(-1j * h * dt)
    assert np.allclose(expm(-1j * kt * dt), m, atol=1e-13)


def test_ktilde_branch_cut():
    with pytest.raises(BranchError):
        ktilde_step(0, GeneratorSchedule.constant(math.pi * SZ), np.zeros((2, 2)), 1.0, 1)


def test_ktilde_step_range():
    with pytest.raises(DomainError):
        ktilde_step(10, GeneratorSchedule.constant(SX), np.zeros((2, 2)), 1.0, 10)


@pytest.mark.parametrize("n", [1, 2, 7, 64])
def test_zeno_limit_with_off_diagonal_generator(n):
    # pinching sigma_y onto the sigma_z eigenspaces leaves nothing
    lim = zeno_limit_operator(SZ, GeneratorSchedule.constant(SY), np.zeros((2, 2)), 1.0, n)
    assert np.allclose(lim.matrix, np.linalg.matrix_power(SZ, n), atol=1e-12)


def test_zeno_limit_commutes_with_eigenprojectors(rng):
    h = 0.2 * random_hermitian(rng, 8)
    sched = GeneratorSchedule.polynomial([0.5 * kron(SX, I2) + 0.3 * kron(SZ, SZ), 0.5 * kron(I2, SX)])
    lim = zeno_limit_operator(CZ, sched, h, 1.0, 40).matrix
    for p in (np.diag([1, 1, 1, 0]), np.diag([0, 0, 0, 1])):
        pj = np.kron(p, I2)
        assert np.allclose(pj @ lim, lim @ pj, atol=1e-12)
    assert np.allclose(lim @ lim.conj().T, np.eye(8), atol=1e-12)


def test_factorization_identity(rng):
    u0 = CZ
    h = 0.1 * random_hermitian(rng, 8)
    sched = GeneratorSchedule.polynomial([0.5 * kron(SX, I2) + 0.3 * kron(SZ, SZ), 0.5 * kron(I2, SX)])
    tau, n = 1.0, 24
    e = expm(-1j * h * tau / n)
    direct = time_ordered(np.kron(p.matrix, I2) @ e for p in pulse_sequence(u0, sched, tau, n))
    u_j = np.kron(u0, I2)
    factored = np.kron(rotation_frame(sched, tau, n), I2) @ time_ordered(
        u_j @ m for _, m in ktilde_sequence(sched, h, tau, n)
    )
    assert np.allclose(direct, factored, atol=1e-12)


def test_apply_pulse_sequence_matches_direct_product(rng):
    h = 0.1 * random_hermitian(rng, 4)
    sched = GeneratorSchedule.constant(0.6 * SY)
    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    tau, n = 1.0, 16
    e = expm(-1j * h * tau / n)
    direct = time_ordered(np.kron(p.matrix, I2) @ e for p in pulse_sequence(SZ, sched, tau, n))
    out = apply_pulse_sequence(psi0, SZ, sched, h, tau, n)
    assert np.allclose(out.amplitudes, direct @ psi0, atol=1e-13)


def test_residual_vanishes_in_trivial_cases():
    assert theorem2_residual(SZ, GeneratorSchedule.zero(2), 1.0, 32) == 0.0
    # one eigenspace: pinching is the identity map
    sched = GeneratorSchedule.polynomial([SX, SY])
    assert theorem2_residual(I2, sched, 1.0, 32) <= 1e-13
    # a generator already block diagonal commutes with U
    assert theorem2_residual(SZ, GeneratorSchedule.polynomial([SZ, 0.5 * SZ]), 1.0, 32) <= 1e-13


def test_residual_rejects_non_analytic():
    sched = GeneratorSchedule.piecewise_linear([0.0, 0.5, 1.0], [SX, SY, SX])
    with pytest.raises(NonAnalyticScheduleError):
        theorem2_residual(SZ, sched, 1.0, 16)
    with pytest.warns(UserWarning):
        r = theorem2_residual(SZ, sched, 1.0, 16, allow_non_analytic=True)
    assert r > 0


def test_residual_domain():
    with pytest.raises(DomainError):
        theorem2_residual(SZ, GeneratorSchedule.constant(SX), 1.0, 1)


def test_residual_decays_like_one_over_n():
    sched = GeneratorSchedule.polynomial([SX, SX])
    ns = [2**k for k in range(5, 11)]
    r = [theorem2_residual(SZ, sched, 1.0, n) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(r), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_generic_study_rates(corpus):
    study = run_pulse_study(corpus["pulse_qubit_generic"], [2**k for k in range(6, 13)])
    assert study.residual_fit.slope == pytest.approx(-1.0, abs=0.1)
    assert study.weight_fit.slope == pytest.approx(-2.0, abs=0.15)
    assert not study.non_analytic
    assert all(r.m == 2 for r in study.rows)


def test_exact_steering_gives_no_fit(corpus):
    # sigma_z pulses with a (pi/2) sigma_y sweep: 1 - weight is zero at even N
    study = run_pulse_study(corpus["pulse_qubit_sz_sy"], [2**k for k in range(4, 10)])
    assert all(r.one_minus_weight <= 1e-11 for r in study.rows)
    assert study.weight_fit is None


def test_noisy_cz_improves_with_n(corpus):
    s = corpus["pulse_cz_bath1_g005"]
    rows = run_pulse_study(s, [2**6, 2**12]).rows
    assert rows[1].weight >= rows[0].weight
    assert rows[0].m == 2 and rows[0].min_phase_gap == pytest.approx(math.pi)


def test_study_requires_pulse_scenario(corpus):
    with pytest.raises(DomainError):
        run_pulse_study(corpus["qubit_pi_rotation"], [4, 8])
