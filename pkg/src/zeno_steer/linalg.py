"""Dense complex operators: validated types, eigendecompositions, exponentials.

All matrices are small (dimension <= 64) complex128 arrays. The typed
wrappers below check their invariants once at construction and hold a
read-only copy of the data; every function also accepts a bare ndarray.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from . import constants as C
from .errors import (
    BranchError,
    CapacityError,
    DimensionError,
    NumericalError,
    ValidationError,
)

__all__ = [
    "HermitianOperator",
    "UnitaryOperator",
    "Projector",
    "StateVector",
    "DensityOperator",
    "as_matrix",
    "hermitian_eig",
    "expi_hermitian",
    "expi_matrix",
    "schatten_inf_norm",
    "tensor_product",
    "unitary_eig",
    "logm_unitary",
    "max_abs",
    "dagger",
    "matrix_to_json",
    "matrix_from_json",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a square, finite complex128 array of dimension <= 64."""
    if hasattr(a, "matrix"):
        a = a.matrix
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if m.shape[0] > C.MAX_DIM:
        raise CapacityError(f"{name} has dimension {m.shape[0]} > {C.MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix, stored as its exact symmetrization ``(A + A^H)/2``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "Hermitian operator")
        dev = max_abs(m - dagger(m))
        if dev > C.HERMITIAN_TOL:
            raise ValidationError(f"operator is not Hermitian (max |A - A^H| = {dev:.3g})")
        object.__setattr__(self, "matrix", _frozen(0.5 * (m + dagger(m))))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "unitary operator")
        dev = max_abs(dagger(m) @ m - np.eye(m.shape[0]))
        if dev > C.UNITARY_TOL:
            raise ValidationError(f"operator is not unitary (max |U^H U - I| = {dev:.3g})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector. ``rank`` is inferred from the trace when omitted."""

    matrix: np.ndarray
    rank: int | None = None

    def __post_init__(self):
        m = as_matrix(self.matrix, "projector")
        herm = max_abs(m - dagger(m))
        if herm > C.PROJECTOR_TOL:
            raise ValidationError(f"projector is not Hermitian (deviation {herm:.3g})")
        m = 0.5 * (m + dagger(m))
        idem = max_abs(m @ m - m)
        if idem > C.PROJECTOR_TOL:
            raise ValidationError(f"projector is not idempotent (max |P^2 - P| = {idem:.3g})")
        tr = float(np.trace(m).real)
        rank = self.rank if self.rank is not None else int(round(tr))
        if abs(tr - rank) > C.PROJECTOR_TRACE_TOL:
            raise ValidationError(f"projector trace {tr:.12g} does not match rank {rank}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "rank", rank)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix, self.dim - self.rank)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex)
        if v.ndim != 1 or v.size == 0:
            raise DimensionError(f"state vector must be 1-D, got shape {v.shape}")
        if v.size > C.MAX_DIM:
            raise CapacityError(f"state dimension {v.size} > {C.MAX_DIM}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("state vector has non-finite entries")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > C.STATE_NORM_TOL:
            raise ValidationError(f"state vector norm is {norm:.12g}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "density operator")
        herm = max_abs(m - dagger(m))
        if herm > C.HERMITIAN_TOL:
            raise ValidationError(f"density operator is not Hermitian (deviation {herm:.3g})")
        m = 0.5 * (m + dagger(m))
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > C.DENSITY_TRACE_TOL:
            raise ValidationError(f"density operator trace is {tr:.12g}, expected 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -C.DENSITY_EIG_TOL:
            raise ValidationError(f"density operator has negative eigenvalue {lo:.3g}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


Operator = Union[np.ndarray, HermitianOperator, UnitaryOperator, Projector, DensityOperator]


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made real positive
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.conj(lead) / np.abs(lead))


def _eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolver did not converge: {exc}") from exc


def hermitian_eig(h) -> tuple[np.ndarray, UnitaryOperator]:
    """Eigendecomposition ``H = V diag(w) V^H`` with ascending eigenvalues.

    Each eigenvector column is rephased so its largest-magnitude entry is
    real and positive.
    """
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    w, v = _eigh(h.matrix)
    return w, UnitaryOperator(_fix_phases(v))


def expi_matrix(a: np.ndarray, s: float) -> np.ndarray:
    """``exp(i s A)`` for a Hermitian ndarray ``A``, via its eigendecomposition."""
    a = np.asarray(a, dtype=complex)
    if s == 0.0:
        return np.eye(a.shape[0], dtype=complex)
    w, v = _eigh(a)
    return (v * np.exp(1j * s * w)) @ dagger(v)


def expi_hermitian(a, s: float) -> UnitaryOperator:
    """Unitary ``exp(i s A)``; exactly the identity at ``s = 0``."""
    if not np.isfinite(s):
        raise ValidationError(f"exponent scale must be finite, got {s}")
    if not isinstance(a, HermitianOperator):
        a = HermitianOperator(a)
    return UnitaryOperator(expi_matrix(a.matrix, float(s)))


def schatten_inf_norm(a) -> float:
    """Largest singular value."""
    if hasattr(a, "matrix"):
        a = a.matrix
    m = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValidationError("norm of a matrix with non-finite entries")
    if m.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(m, 2))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``A (x) B``."""
    a = as_matrix(a, "left factor")
    b = as_matrix(b, "right factor")
    dim = a.shape[0] * b.shape[0]
    if dim > C.MAX_DIM:
        raise CapacityError(f"tensor product dimension {dim} > {C.MAX_DIM}")
    return np.kron(a, b)


def unitary_eig(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases in (-pi, pi] and an orthonormal eigenbasis of a unitary.

    Uses the complex Schur form, which is diagonal for normal matrices, so
    degenerate eigenspaces still come out orthonormal.
    """
    u = np.asarray(u, dtype=complex)
    t, z = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t))
    phases = np.where(phases <= -np.pi, np.pi, phases)
    return phases, z


def logm_unitary(u: np.ndarray, branch_tol: float = C.LOG_BRANCH_TOL) -> np.ndarray:
    """Hermitian ``G`` with ``exp(i G) = U`` and spectrum in (-pi, pi).

    Raises BranchError when an eigenphase is within ``branch_tol`` of +-pi,
    where the principal branch is ill-defined.
    """
    phases, z = unitary_eig(u)
    worst = float(np.max(np.abs(phases)))
    if np.pi - worst < branch_tol:
        raise BranchError(
            f"eigenphase {worst:.12g} lies within {branch_tol:g} of the branch cut at pi"
        )
    g = (z * phases) @ dagger(z)
    return 0.5 * (g + dagger(g))


def matrix_to_json(a: np.ndarray) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"matrix must be a square nested list of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]
