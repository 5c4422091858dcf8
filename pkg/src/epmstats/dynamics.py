"""Time-dependent Lindblad propagation.

The propagator is a classic fixed-step 4th-order Runge-Kutta scheme (no
adaptivity, so runs are bitwise reproducible). Any operator can be
propagated, not just states: the generator is linear, so traceless
coherence remainders and even non-Hermitian operators (needed for
characteristic functions) go through the same path.

The channel over an interval can also be materialized as a d^2 x d^2
superoperator matrix acting on column-stacked vectorizations; this is the
fast path when many initial operators share one dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, PositivityDrift, StepSizeError
from .operators import as_operator, require_hermitian

DEFAULT_DT = 1e-3
DEFAULT_POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class DriveTerm:
    """One Hermitian drive operator with a scalar time-dependent amplitude."""

    operator: np.ndarray
    amplitude: Callable[[float], float]


@dataclass(frozen=True)
class LindbladModel:
    """Free Hamiltonian, drive schedule and jump operators (rates premultiplied)."""

    h_free: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()
    drive: tuple[DriveTerm, ...] = ()

    def __post_init__(self):
        h = require_hermitian(self.h_free)
        object.__setattr__(self, "h_free", h)
        object.__setattr__(self, "jumps", tuple(as_operator(L) for L in self.jumps))
        for L in self.jumps:
            if L.shape != h.shape:
                raise DimensionMismatch("jump operator dimension mismatch")
        for term in self.drive:
            if require_hermitian(term.operator).shape != h.shape:
                raise DimensionMismatch("drive operator dimension mismatch")

    @property
    def dim(self) -> int:
        return self.h_free.shape[0]

    def h_drive(self, t: float) -> np.ndarray:
        H = np.zeros_like(self.h_free)
        for term in self.drive:
            H = H + term.amplitude(t) * term.operator
        return H

    def hamiltonian(self, t: float) -> np.ndarray:
        return self.h_free + self.h_drive(t)


@dataclass(frozen=True)
class PropagationConfig:
    t_i: float
    t_f: float
    dt: float = DEFAULT_DT
    snapshot_times: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.t_f < self.t_i:
            raise StepSizeError("t_f must be >= t_i")
        if self.dt <= 0:
            raise StepSizeError("dt must be positive")
        if self.snapshot_times is not None:
            ts = tuple(float(t) for t in self.snapshot_times)
            if any(t < self.t_i - 1e-12 or t > self.t_f + 1e-12 for t in ts):
                raise StepSizeError("snapshot times must lie inside [t_i, t_f]")
            object.__setattr__(self, "snapshot_times", tuple(sorted(ts)))


def generator_apply(model: LindbladModel, t: float, A) -> np.ndarray:
    """Right-hand side of the master equation applied to an arbitrary operator."""
    M = as_operator(A)
    if M.shape[0] != model.dim:
        raise DimensionMismatch("operator/model dimension mismatch")
    H = model.hamiltonian(t)
    out = -1j * (H @ M - M @ H)
    for L in model.jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ M @ Ld - 0.5 * (LdL @ M + M @ LdL)
    return out


def _rk4_step(rhs, t, A, h):
    k1 = rhs(t, A)
    k2 = rhs(t + h / 2, A + (h / 2) * k1)
    k3 = rhs(t + h / 2, A + (h / 2) * k2)
    k4 = rhs(t + h, A + h * k3)
    return A + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _breakpoints(config: PropagationConfig):
    """Times the integrator must land on exactly, in order, ending at t_f."""
    pts = [config.t_f]
    if config.snapshot_times:
        pts.extend(config.snapshot_times)
    pts = sorted({t for t in pts if t > config.t_i + 1e-15})
    if not pts or pts[-1] < config.t_f:
        pts.append(config.t_f)
    return pts


def _march(rhs, A0, config: PropagationConfig, on_snapshot=None):
    """Advance A0 from t_i to t_f with dt steps, shortening the final step of
    every segment so snapshot times and t_f are hit exactly."""
    A = A0
    t = config.t_i
    snaps = set(config.snapshot_times or ())
    done = set()
    if config.t_i in snaps and on_snapshot is not None:
        on_snapshot(config.t_i, A)
        done.add(config.t_i)
    for target in _breakpoints(config):
        while t < target - 1e-12:
            h = min(config.dt, target - t)
            A = _rk4_step(rhs, t, A, h)
            t += h
        t = target
        if on_snapshot is not None and target in snaps and target not in done:
            on_snapshot(target, A)
            done.add(target)
    return A


def propagate(
    model: LindbladModel,
    A0,
    config: PropagationConfig,
    is_state: bool = False,
    positivity_tol: float = DEFAULT_POSITIVITY_TOL,
):
    """Integrate an operator over [t_i, t_f].

    Returns (A_final, snapshots) where snapshots is a list of (t, A(t)) at the
    requested snapshot times. When is_state is set, eigenvalue drift below
    -positivity_tol at any snapshot or at t_f raises PositivityDrift (no
    silent clipping).
    """
    A0 = as_operator(A0)
    if A0.shape[0] != model.dim:
        raise DimensionMismatch("operator/model dimension mismatch")
    span = config.t_f - config.t_i
    if span > 0 and config.dt > span:
        raise StepSizeError(f"dt={config.dt} exceeds interval length {span}")

    def check(tag, M):
        if is_state:
            lo = float(np.min(np.linalg.eigvalsh((M + M.conj().T) / 2)))
            if lo < -positivity_tol:
                raise PositivityDrift(f"min eigenvalue {lo:.3e} at t={tag}")

    snapshots = []

    def record(t, M):
        check(t, M)
        snapshots.append((t, M.copy()))

    rhs = lambda t, A: generator_apply(model, t, A)
    A = _march(rhs, A0, config, on_snapshot=record if config.snapshot_times else None)
    check(config.t_f, A)
    return A, snapshots


def vec(A: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(A, dtype=complex).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v, dtype=complex).reshape((d, d), order="F")


def _liouvillian_parts(model: LindbladModel):
    """Constant part of the vectorized generator plus one kernel per drive term."""
    d = model.dim
    I = np.eye(d)
    H0 = model.h_free
    L0 = -1j * (np.kron(I, H0) - np.kron(H0.T, I))
    for L in model.jumps:
        LdL = L.conj().T @ L
        L0 += np.kron(L.conj(), L) - 0.5 * (np.kron(I, LdL) + np.kron(LdL.T, I))
    kernels = []
    for term in model.drive:
        D = term.operator
        kernels.append((term.amplitude, -1j * (np.kron(I, D) - np.kron(D.T, I))))
    return L0, kernels


def liouvillian_matrix(model: LindbladModel, t: float) -> np.ndarray:
    L0, kernels = _liouvillian_parts(model)
    for amp, K in kernels:
        L0 = L0 + amp(t) * K
    return L0


def superoperator_snapshots(model: LindbladModel, config: PropagationConfig):
    """Materialize the channel over [t_i, t] for t_f and every snapshot time.

    Returns (S_final, [(t, S_t), ...]); column j*d+i of each matrix is the
    vectorized propagation of the matrix unit |i><j|. Uses the same RK4 step
    schedule as `propagate`, applied to the matrix-valued equation
    S' = L(t) S with S(t_i) = I.
    """
    span = config.t_f - config.t_i
    if span > 0 and config.dt > span:
        raise StepSizeError(f"dt={config.dt} exceeds interval length {span}")
    d2 = model.dim**2
    L0, kernels = _liouvillian_parts(model)

    def rhs(t, S):
        L = L0
        for amp, K in kernels:
            L = L + amp(t) * K
        return L @ S

    snapshots = []

    def record(t, S):
        snapshots.append((t, S.copy()))

    S = _march(
        rhs,
        np.eye(d2, dtype=complex),
        config,
        on_snapshot=record if config.snapshot_times else None,
    )
    return S, snapshots


def superoperator_matrix(model: LindbladModel, config: PropagationConfig) -> np.ndarray:
    return superoperator_snapshots(model, config)[0]


def channel_from_superoperator(S: np.ndarray):
    """Turn a superoperator matrix into a channel closure on operators."""

    def channel(A):
        return unvec(S @ vec(as_operator(A)))

    return channel


def channel_from_model(model: LindbladModel, config: PropagationConfig):
    def channel(A):
        return propagate(model, A, config)[0]

    return channel


def identity_channel():
    return lambda A: as_operator(A)


def unitary_channel(U):
    U = as_operator(U)
    return lambda A: U @ as_operator(A) @ U.conj().T


def fixed_point_residual(model: LindbladModel, rho, t: float = 0.0) -> float:
    """Max-norm of the generator applied to a state."""
    M = rho.matrix if hasattr(rho, "matrix") else as_operator(rho)
    return float(np.max(np.abs(generator_apply(model, t, M))))
