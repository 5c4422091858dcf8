"""Dense complex operator algebra for small Hilbert spaces.

Hermitian diagonalization with a fixed phase convention, degeneracy-grouped
spectral projectors, operator functions, density-matrix validation, the
population/coherence split of a state in an energy eigenbasis, and the
l1-type coherence measure (with a 1/2 prefactor; note this is half the
value of the more common convention without it).

Everything here is a pure function of dense numpy arrays; dimensions are
expected to stay small (d <= 64), so O(d^3) eigendecompositions are used
freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, InvalidState, NoConvergence, NonHermitianInput

HERMITICITY_TOL = 1e-10
DEFAULT_DEGENERACY_TOL = 1e-9
DEFAULT_DENSITY_TOL = 1e-8


def as_operator(A) -> np.ndarray:
    """Coerce to a square complex array, rejecting non-finite entries."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidState("matrix contains NaN/Inf entries")
    return M


def hermiticity_error(A: np.ndarray) -> float:
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def require_hermitian(A, tol: float = HERMITICITY_TOL) -> np.ndarray:
    M = as_operator(A)
    err = hermiticity_error(M)
    if err > tol:
        raise NonHermitianInput(f"hermiticity violation {err:.3e} > {tol:.1e}")
    return M


@dataclass(frozen=True)
class Eigensystem:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def eigh(A, tol: float = HERMITICITY_TOL) -> Eigensystem:
    """Diagonalize a Hermitian matrix deterministically.

    Phase convention: the largest-magnitude component of each eigenvector is
    made real and positive (first index wins ties), so repeated runs on the
    same input produce identical eigenvectors.
    """
    M = require_hermitian(A, tol)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - d<=64 always converges
        raise NoConvergence(str(exc)) from exc
    for j in range(V.shape[1]):
        col = V[:, j]
        k = int(np.argmax(np.abs(col)))
        phase = col[k] / abs(col[k])
        V[:, j] = col * phase.conjugate()
    return Eigensystem(values=w.astype(float), vectors=V)


@dataclass(frozen=True)
class EnergyLevel:
    energy: float
    projector: np.ndarray
    multiplicity: int


@dataclass(frozen=True)
class EnergyBasis:
    """Degeneracy-grouped spectral decomposition of a Hamiltonian."""

    levels: tuple[EnergyLevel, ...]
    degeneracy_tol: float
    eigensystem: Eigensystem

    @property
    def dim(self) -> int:
        return self.eigensystem.dim

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def projectors(self) -> np.ndarray:
        return np.stack([lv.projector for lv in self.levels])

    @property
    def vectors(self) -> np.ndarray:
        """Underlying eigenvector columns (the measurement basis)."""
        return self.eigensystem.vectors

    def populations(self, rho) -> np.ndarray:
        """Tr(rho Pi_l) for every level, clipped of tiny negative round-off."""
        M = as_operator(rho)
        if M.shape[0] != self.dim:
            raise DimensionMismatch("state/basis dimension mismatch")
        p = np.array([np.trace(M @ lv.projector).real for lv in self.levels])
        return p


def energy_basis(H, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> EnergyBasis:
    """Cluster the spectrum of H into near-degenerate levels.

    Eigenvalues are chained into one level while the gap to the previous
    member is <= degeneracy_tol; each level's projector is the sum of its
    eigenvector dyads.
    """
    es = eigh(H)
    w, V = es.values, es.vectors
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] <= degeneracy_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    levels = []
    for idx in groups:
        block = V[:, idx]
        levels.append(
            EnergyLevel(
                energy=float(np.mean(w[idx])),
                projector=block @ block.conj().T,
                multiplicity=len(idx),
            )
        )
    return EnergyBasis(levels=tuple(levels), degeneracy_tol=degeneracy_tol, eigensystem=es)


def matrix_function_hermitian(A, f: Callable) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    es = eigh(A)
    try:
        fw = np.asarray(f(es.values), dtype=complex)
        if fw.shape != es.values.shape:
            raise TypeError
    except TypeError:
        fw = np.array([complex(f(float(x))) for x in es.values])
    return (es.vectors * fw) @ es.vectors.conj().T


@dataclass(frozen=True)
class DensityDiagnostic:
    """Which density-operator invariants a matrix violates, and by how much."""

    hermiticity_error: float
    trace_deviation: float
    min_eigenvalue: float
    tol: float

    @property
    def failures(self) -> list[str]:
        out = []
        if self.hermiticity_error > self.tol:
            out.append(f"hermiticity violation {self.hermiticity_error:.3e}")
        if abs(self.trace_deviation) > self.tol:
            out.append(f"trace deviates from 1 by {self.trace_deviation:.3e}")
        if self.min_eigenvalue < -self.tol:
            out.append(f"negativity {-self.min_eigenvalue:.3e}")
        return out

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state. Construct via DensityMatrix.from_matrix."""

    matrix: np.ndarray
    validation_tol: float = DEFAULT_DENSITY_TOL

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, M, tol: float = DEFAULT_DENSITY_TOL) -> "DensityMatrix":
        out = validate_density(M, tol)
        if isinstance(out, DensityDiagnostic):
            raise InvalidState("not a density matrix: " + "; ".join(out.failures), out)
        return out

    @classmethod
    def from_ket(cls, psi, tol: float = DEFAULT_DENSITY_TOL) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(matrix=np.outer(v, v.conj()), validation_tol=tol)


def diagnose_density(M, tol: float = DEFAULT_DENSITY_TOL) -> DensityDiagnostic:
    A = as_operator(M)
    return DensityDiagnostic(
        hermiticity_error=hermiticity_error(A),
        trace_deviation=float(np.trace(A).real - 1.0),
        min_eigenvalue=float(np.min(np.linalg.eigvalsh((A + A.conj().T) / 2))),
        tol=tol,
    )


def validate_density(M, tol: float = DEFAULT_DENSITY_TOL):
    """Return a DensityMatrix if M qualifies, else the failing diagnostic.

    Never repairs the input.
    """
    diag = diagnose_density(M, tol)
    if diag.ok:
        return DensityMatrix(matrix=as_operator(M), validation_tol=tol)
    return diag


def dephase_split(rho: DensityMatrix, basis: EnergyBasis):
    """Split rho into its block-diagonal part P and coherence remainder chi.

    P = sum_l Pi_l rho Pi_l (Lueders dephasing, so within-subspace coherence
    of degenerate levels survives); chi = rho - P is traceless.
    """
    M = rho.matrix
    if M.shape[0] != basis.dim:
        raise DimensionMismatch("state/basis dimension mismatch")
    P = np.zeros_like(M)
    for lv in basis.levels:
        P += lv.projector @ M @ lv.projector
    chi = M - P
    return DensityMatrix(matrix=P, validation_tol=rho.validation_tol), chi


def coherence_l1(rho: DensityMatrix, basis: EnergyBasis) -> float:
    """(1/2) sum of off-diagonal magnitudes of rho in the eigenvector basis."""
    M = rho.matrix
    if M.shape[0] != basis.dim:
        raise DimensionMismatch("state/basis dimension mismatch")
    U = basis.vectors
    R = U.conj().T @ M @ U
    return 0.5 * float(np.sum(np.abs(R)) - np.sum(np.abs(np.diag(R))))
