import math

import numpy as np
import pytest

from zeno_steer.acceptance import load_corpus
from zeno_steer.scenario import GeneratorSchedule, NoiseModel, SteeringScenario

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def kron(*ops):
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pi_rotation(n_bath_qubits=0, h_sb=None, tau=1.0):
    bath = 2**n_bath_qubits
    noise = None if h_sb is None else NoiseModel(h_sb, None, 2)
    return SteeringScenario(
        sys_dim=2, bath_dim=bath, tau=tau,
        schedule=GeneratorSchedule.constant(math.pi / (2 * tau) * SY),
        initial_projector=P0, noise=noise,
    )


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
