"""Spectral decomposition of unitaries into distinct-phase projectors.

Also hosts the two operations built on it: conjugating a projector by a
short generator step, and pinching a Hermitian operator onto the blocks of
a decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constants as C
from .errors import ClusteringError, DimensionError, DomainError, NumericalError
from .linalg import (
    HermitianOperator,
    Projector,
    UnitaryOperator,
    as_matrix,
    dagger,
    expi_matrix,
    max_abs,
    unitary_eig,
)

__all__ = [
    "SpectralDecomposition",
    "decompose_unitary",
    "rotate_projector",
    "project_block_diagonal",
    "pinch",
]

TWO_PI = 2.0 * math.pi


def _wrap(phi: float) -> float:
    """Map a phase into (-pi, pi]."""
    w = math.remainder(phi, TWO_PI)
    return math.pi if w <= -math.pi else w


def _circular_distance(a: float, b: float) -> float:
    return abs(math.remainder(a - b, TWO_PI))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """``U = sum_mu exp(i phases[mu]) projectors[mu]`` with distinct phases.

    Phases are in (-pi, pi] and sorted ascending.
    """

    phases: tuple[float, ...]
    projectors: tuple[Projector, ...]

    def __post_init__(self):
        if len(self.phases) != len(self.projectors) or not self.projectors:
            raise DimensionError("phases and projectors must be non-empty and paired")
        dim = self.projectors[0].dim
        total = np.zeros((dim, dim), dtype=complex)
        for mu, p in enumerate(self.projectors):
            if p.dim != dim:
                raise DimensionError("projectors have different dimensions")
            total += p.matrix
            for q in self.projectors[mu + 1 :]:
                overlap = max_abs(p.matrix @ q.matrix)
                if overlap > C.PROJECTOR_TOL:
                    raise NumericalError(f"spectral projectors overlap ({overlap:.3g})")
        resid = max_abs(total - np.eye(dim))
        if resid > C.PROJECTOR_TOL:
            raise NumericalError(f"spectral projectors do not resolve the identity ({resid:.3g})")

    @property
    def m(self) -> int:
        """Number of distinct eigenvalues."""
        return len(self.phases)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def min_phase_gap(self) -> float:
        """Smallest circular distance between distinct phases (inf when m == 1)."""
        if self.m == 1:
            return math.inf
        return min(
            _circular_distance(a, b)
            for i, a in enumerate(self.phases)
            for b in self.phases[i + 1 :]
        )

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for phi, p in zip(self.phases, self.projectors):
            out += np.exp(1j * phi) * p.matrix
        return out

    def embedded(self, bath_dim: int) -> "SpectralDecomposition":
        """The same decomposition acting as ``P_mu (x) I_B``."""
        if bath_dim == 1:
            return self
        eye = np.eye(bath_dim)
        return SpectralDecomposition(
            self.phases,
            tuple(Projector(np.kron(p.matrix, eye), p.rank * bath_dim) for p in self.projectors),
        )

    def projector_stack(self) -> np.ndarray:
        return np.stack([p.matrix for p in self.projectors])


def decompose_unitary(u, group_tol: float = C.DEFAULT_GROUP_TOL) -> SpectralDecomposition:
    """Group the eigenvalues of ``u`` into distinct-phase spectral projectors.

    Two eigenvalues share a projector iff their circular phase gap is at
    most ``group_tol``. A cluster that only holds together through a chain
    of sub-tolerance gaps, while its end points are further apart than
    ``group_tol``, is rejected with ClusteringError.
    """
    if not (C.MIN_GROUP_TOL <= group_tol <= C.MAX_GROUP_TOL):
        raise DomainError(
            f"group_tol must lie in [{C.MIN_GROUP_TOL:g}, {C.MAX_GROUP_TOL:g}], got {group_tol:g}"
        )
    if not isinstance(u, UnitaryOperator):
        u = UnitaryOperator(u)
    phases, z = unitary_eig(u.matrix)
    n = phases.size
    order = np.argsort(phases, kind="stable")
    ph = phases[order]
    gaps = np.empty(n)
    gaps[:-1] = np.diff(ph)
    gaps[-1] = ph[0] + TWO_PI - ph[-1]

    # start walking right after the widest gap so no cluster straddles the seam
    start = (int(np.argmax(gaps)) + 1) % n
    clusters: list[list[int]] = [[start]]
    spans = [0.0]
    for step in range(1, n):
        i = (start + step) % n
        g = gaps[(i - 1) % n]
        if g > group_tol:
            clusters.append([i])
            spans.append(0.0)
        else:
            clusters[-1].append(i)
            spans[-1] += g
    for members, span in zip(clusters, spans):
        if span > group_tol:
            inner = max(gaps[(i - 1) % n] for i in members[1:])
            raise ClusteringError(
                f"ambiguous eigenphase cluster: chained gaps up to {inner:.3g} span "
                f"{span:.3g} > group_tol {group_tol:g}",
                gap=span,
            )

    entries = []
    for members in clusters:
        cols = z[:, order[members]]
        rep = _wrap(float(np.angle(np.mean(np.exp(1j * ph[members])))))
        proj = cols @ dagger(cols)
        entries.append((rep, Projector(proj, len(members))))
    entries.sort(key=lambda e: e[0])
    return SpectralDecomposition(
        tuple(e[0] for e in entries), tuple(e[1] for e in entries)
    )


def rotate_projector(p, k, dt: float) -> Projector:
    """``exp(i K dt) P exp(-i K dt)``."""
    if not isinstance(p, Projector):
        p = Projector(p)
    if not isinstance(k, HermitianOperator):
        k = HermitianOperator(k)
    if p.dim != k.dim:
        raise DimensionError(f"projector dim {p.dim} != generator dim {k.dim}")
    w = expi_matrix(k.matrix, dt)
    return Projector(w @ p.matrix @ dagger(w), p.rank)


def pinch(h: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    """``sum_mu P_mu H P_mu`` for a stack of projectors (no validation)."""
    return np.einsum("mij,jk,mkl->il", projectors, h, projectors)


def project_block_diagonal(h, d: SpectralDecomposition) -> HermitianOperator:
    """Pinch ``h`` onto the blocks of ``d``."""
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(as_matrix(h))
    if h.dim != d.dim:
        raise DimensionError(f"operator dim {h.dim} != decomposition dim {d.dim}")
    out = pinch(h.matrix, d.projector_stack())
    return HermitianOperator(0.5 * (out + dagger(out)))
