import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeno_steer.errors import BranchError, CapacityError, DimensionError, ValidationError
from zeno_steer.linalg import (
    DensityOperator,
    HermitianOperator,
    Projector,
    StateVector,
    UnitaryOperator,
    expi_hermitian,
    hermitian_eig,
    logm_unitary,
    matrix_from_json,
    matrix_to_json,
    schatten_inf_norm,
    tensor_product,
    unitary_eig,
)

from conftest import I2, SX, SZ, kron, random_hermitian, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=8)


def test_hermitian_symmetrizes_within_tolerance():
    a = SX + 1e-13j * np.eye(2)
    h = HermitianOperator(a)
    np.testing.assert_array_equal(h.matrix, h.matrix.conj().T)
    with pytest.raises(ValidationError):
        HermitianOperator(SX + 1e-9j * np.eye(2))


def test_operators_are_read_only():
    h = HermitianOperator(SZ)
    with pytest.raises(ValueError):
        h.matrix[0, 0] = 3


def test_type_invariants_reject_bad_input():
    with pytest.raises(DimensionError):
        HermitianOperator(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(CapacityError):
        HermitianOperator(np.eye(65))
    with pytest.raises(ValidationError):
        UnitaryOperator(2 * I2)
    with pytest.raises(ValidationError):
        Projector(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        Projector(np.diag([1.0, 0.0]), rank=2)
    with pytest.raises(ValidationError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ValidationError):
        DensityOperator(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        DensityOperator(np.diag([1.2, -0.2]))


def test_projector_rank_and_complement():
    p = Projector(np.diag([1.0, 0.0, 1.0]))
    assert p.rank == 2
    assert p.complement.rank == 1
    np.testing.assert_allclose(p.complement.matrix, np.diag([0, 1, 0]))


def test_hermitian_eig_examples():
    w, v = hermitian_eig(SZ)
    np.testing.assert_allclose(w, [-1, 1])
    np.testing.assert_allclose(np.abs(v.matrix), [[0, 1], [1, 0]])
    w, v = hermitian_eig(SX)
    np.testing.assert_allclose(w, [-1, 1])
    s = 1 / np.sqrt(2)
    # largest component real positive fixes the phase
    # ties in magnitude go to the first component, which is made real positive
    np.testing.assert_allclose(v.matrix[:, 0], [s, -s], atol=1e-15)
    np.testing.assert_allclose(v.matrix[:, 1], [s, s], atol=1e-15)


def test_hermitian_eig_reconstruction_8x8(rng):
    h = random_hermitian(rng, 8)
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) >= 0)
    back = v.matrix @ np.diag(w) @ v.matrix.conj().T
    assert np.max(np.abs(back - h)) <= 1e-11


def test_expi_examples():
    np.testing.assert_array_equal(expi_hermitian(SX, 0.0).matrix, I2)
    np.testing.assert_allclose(expi_hermitian(SX, np.pi / 2).matrix, 1j * SX, atol=1e-15)
    th = 0.37
    np.testing.assert_allclose(expi_hermitian(SZ, th).matrix, np.diag([np.exp(1j * th), np.exp(-1j * th)]))


def test_expi_matches_scipy_expm(rng):
    from scipy.linalg import expm

    h = random_hermitian(rng, 6)
    np.testing.assert_allclose(expi_hermitian(h, 0.3).matrix, expm(0.3j * h), atol=1e-12)


def test_norm_examples():
    assert schatten_inf_norm(SX) == pytest.approx(1.0)
    assert schatten_inf_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
    assert schatten_inf_norm(-0.3 * np.kron(SX, SX)) == pytest.approx(0.3)


def test_tensor_examples():
    np.testing.assert_array_equal(tensor_product(I2, I2), np.eye(4))
    np.testing.assert_array_equal(tensor_product(SZ, I2), np.diag([1, 1, -1, -1]))
    with pytest.raises(CapacityError):
        tensor_product(np.eye(16), np.eye(8))


def test_tensor_elementwise_oracle(rng):
    a, b = random_unitary(rng, 2), random_unitary(rng, 2)
    out = tensor_product(a, b)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    assert out[2 * i + k, 2 * j + l] == pytest.approx(a[i, j] * b[k, l], abs=1e-15)
    c, d = random_unitary(rng, 2), random_unitary(rng, 2)
    resid = tensor_product(a, b) @ tensor_product(c, d) - tensor_product(a @ c, b @ d)
    assert np.max(np.abs(resid)) <= 1e-12


def test_tensor_of_projectors_is_projector():
    p = Projector(tensor_product(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    assert p.rank == 1


def test_unitary_eig_and_log(rng):
    u = random_unitary(rng, 5)
    phases, z = unitary_eig(u)
    assert np.all((phases > -np.pi) & (phases <= np.pi))
    np.testing.assert_allclose(z @ np.diag(np.exp(1j * phases)) @ z.conj().T, u, atol=1e-12)
    g = logm_unitary(u)
    np.testing.assert_allclose(expi_hermitian(g, 1.0).matrix, u, atol=1e-12)


def test_log_branch_error():
    with pytest.raises(BranchError):
        logm_unitary(-I2)


def test_json_round_trip(rng):
    u = random_unitary(rng, 3)
    np.testing.assert_array_equal(matrix_from_json(matrix_to_json(u)), u)
    with pytest.raises(ValidationError):
        matrix_from_json([[1, 2], [3, 4]])


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=dims, s=st.floats(-10, 10))
def test_exponential_inverse_property(seed, d, s):
    h = random_hermitian(np.random.default_rng(seed), d)
    prod = expi_hermitian(h, s).matrix @ expi_hermitian(h, -s).matrix
    assert np.max(np.abs(prod - np.eye(d))) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=dims, c=st.floats(-1e3, 1e3))
def test_norm_homogeneity(seed, d, c):
    a = np.random.default_rng(seed).normal(size=(d, d)) + 0j
    assert schatten_inf_norm(c * a) == pytest.approx(abs(c) * schatten_inf_norm(a), rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=dims, c=st.floats(-5, 5))
def test_eigenvalue_shift(seed, d, c):
    h = random_hermitian(np.random.default_rng(seed), d)
    w0, _ = hermitian_eig(h)
    w1, _ = hermitian_eig(h + c * np.eye(d))
    assert np.max(np.abs(w1 - (w0 + c))) <= 1e-11


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_norm_of_hermitian_is_max_eigenvalue(seed):
    h = random_hermitian(np.random.default_rng(seed), 5)
    w, _ = hermitian_eig(h)
    assert schatten_inf_norm(h) == pytest.approx(np.max(np.abs(w)), rel=1e-12)


def test_kron_helper_consistency():
    np.testing.assert_array_equal(kron(SZ, I2), tensor_product(SZ, I2))
