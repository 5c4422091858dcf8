"""Moments, entropies, characteristic functions and the fluctuation-relation
report for the energy-change distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SupportMismatch
from .operators import (
    DensityMatrix,
    EnergyBasis,
    dephase_split,
    eigh,
    energy_basis,
    matrix_function_hermitian,
    require_hermitian,
)
from .protocols import (
    EPM,
    MLL,
    TPM,
    EnergyChangeDistribution,
    JointDistribution,
    energy_change_distribution,
    epm_joint,
)

KL_ZERO = 1e-12


def moment(dist: EnergyChangeDistribution, n: int) -> float:
    return float(np.dot(dist.probs, dist.deltas**n))


def first_moment_closed_form(rho_i: DensityMatrix, H_i, H_f, channel) -> float:
    """Tr(H_f Phi[rho]) - Tr(H_i rho); also the MLL first moment."""
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    evolved = channel(rho_i.matrix)
    return float((np.trace(H_f @ evolved) - np.trace(H_i @ rho_i.matrix)).real)


def tpm_first_moment_closed_form(
    rho_i: DensityMatrix, basis_i: EnergyBasis, H_i, H_f, channel
) -> float:
    """First moment of the TPM distribution: the dephased state is propagated."""
    P, _ = dephase_split(rho_i, basis_i)
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    return float((np.trace(H_f @ channel(P.matrix)) - np.trace(H_i @ rho_i.matrix)).real)


def _second_moment_expr(rho, H_i, H_f, channel) -> float:
    evolved = channel(rho)
    return float(
        (
            np.trace(H_i @ H_i @ rho)
            + np.trace(H_f @ H_f @ evolved)
            - 2.0 * np.trace(evolved @ H_f) * np.trace(rho @ H_i)
        ).real
    )


def second_moment_closed_form(
    rho_i: DensityMatrix, basis_i: EnergyBasis, H_i, H_f, channel
):
    """Total EPM second moment plus its population/coherence decomposition.

    Returns (total, population_part, coherence_part) with
    coherence_part = Tr(H_f^2 Phi[chi]) - 2 Tr(Phi[chi] H_f) Tr(P H_i).
    """
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    P, chi = dephase_split(rho_i, basis_i)
    total = _second_moment_expr(rho_i.matrix, H_i, H_f, channel)
    pop = _second_moment_expr(P.matrix, H_i, H_f, channel)
    return total, pop, total - pop


def mll_second_moment_closed_form(rho_i: DensityMatrix, H_i, H_f, channel) -> float:
    """Second moment with the cross term resolved on the eigenstates of rho_i."""
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    es = eigh(rho_i.matrix)
    cross = 0.0
    for s in range(rho_i.dim):
        if es.values[s] <= 1e-14:
            continue
        dyad = np.outer(es.vectors[:, s], es.vectors[:, s].conj())
        cross += es.values[s] * (
            np.trace(channel(dyad) @ H_f) * np.trace(dyad @ H_i)
        ).real
    evolved = channel(rho_i.matrix)
    return float(
        (np.trace(H_i @ H_i @ rho_i.matrix) + np.trace(H_f @ H_f @ evolved)).real
        - 2.0 * cross
    )


def tpm_second_moment_closed_form(
    rho_i: DensityMatrix, basis_i: EnergyBasis, H_i, H_f, channel
) -> float:
    """Second moment with the cross term resolved on the initial energy levels."""
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    P, _ = dephase_split(rho_i, basis_i)
    p_i = basis_i.populations(rho_i.matrix)
    cross = 0.0
    for l, lv in enumerate(basis_i.levels):
        if p_i[l] <= 1e-14:
            continue
        sigma = lv.projector @ rho_i.matrix @ lv.projector / p_i[l]
        cross += p_i[l] * lv.energy * np.trace(H_f @ channel(sigma)).real
    return float(
        (np.trace(H_i @ H_i @ rho_i.matrix) + np.trace(H_f @ H_f @ channel(P.matrix))).real
        - 2.0 * cross
    )


def shannon_entropy(joint: JointDistribution) -> float:
    """Entropy in nats over the joint entries, with 0 log 0 := 0."""
    p = joint.probabilities.ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def mutual_information(p_mll: JointDistribution, p_epm: JointDistribution) -> float:
    """KL divergence of the MLL joint from the EPM joint (its marginal product)."""
    if p_mll.p.shape != p_epm.p.shape:
        raise DimensionMismatch("joint tables differ in shape")
    p = p_mll.probabilities.ravel()
    q = p_epm.probabilities.ravel()
    bad = (p > KL_ZERO) & (q <= KL_ZERO)
    if np.any(bad):
        raise SupportMismatch("MLL support not contained in EPM support")
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def characteristic_function(protocol: str, rho_i: DensityMatrix, H_i, H_f, channel, u: complex) -> complex:
    """G(u) = <exp(i u Delta E)> evaluated from operator traces.

    The TPM branch first dephases the state in the H_i eigenbasis (the
    initial projective measurement has destroyed coherence by construction)
    and then propagates the non-Hermitian operator exp(-iu H_i) P, which is
    legitimate because the channel is linear. Without the dephasing the
    trace expression would disagree with the TPM distribution whenever the
    initial state carries coherence.
    """
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    rho = rho_i.matrix
    e_minus = matrix_function_hermitian(H_i, lambda x: np.exp(-1j * u * x))
    e_plus = matrix_function_hermitian(H_f, lambda x: np.exp(1j * u * x))
    if protocol == EPM:
        return complex(np.trace(e_minus @ rho) * np.trace(e_plus @ channel(rho)))
    if protocol == TPM:
        P, _ = dephase_split(rho_i, energy_basis(H_i))
        return complex(np.trace(e_plus @ channel(e_minus @ P.matrix)))
    if protocol == MLL:
        es = eigh(rho)
        out = 0.0 + 0.0j
        for s in range(rho_i.dim):
            if es.values[s] <= 1e-14:
                continue
            dyad = np.outer(es.vectors[:, s], es.vectors[:, s].conj())
            out += es.values[s] * np.trace(dyad @ e_minus) * np.trace(channel(dyad) @ e_plus)
        return complex(out)
    raise ValueError(f"unknown protocol tag {protocol!r}")


def characteristic_split(
    rho_i: DensityMatrix, basis_i: EnergyBasis, H_i, H_f, channel, u: complex
):
    """EPM characteristic function split as (G_P, G_chi); their sum is G."""
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    P, chi = dephase_split(rho_i, basis_i)
    e_minus = matrix_function_hermitian(H_i, lambda x: np.exp(-1j * u * x))
    e_plus = matrix_function_hermitian(H_f, lambda x: np.exp(1j * u * x))
    first = np.trace(e_minus @ P.matrix)
    g_pop = complex(first * np.trace(e_plus @ channel(P.matrix)))
    g_chi = complex(first * np.trace(e_plus @ channel(chi)))
    return g_pop, g_chi


@dataclass(frozen=True)
class ThermalReference:
    """Gibbs reference states for the initial and final Hamiltonians."""

    beta: float
    state_i: DensityMatrix
    state_f: DensityMatrix
    z_i: float
    z_f: float
    delta_f: float


def thermal_reference(H_i, H_f, beta: float) -> ThermalReference:
    if beta <= 0:
        raise ValueError("beta must be positive")
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    gibbs_i = matrix_function_hermitian(H_i, lambda x: np.exp(-beta * x))
    gibbs_f = matrix_function_hermitian(H_f, lambda x: np.exp(-beta * x))
    z_i = float(np.trace(gibbs_i).real)
    z_f = float(np.trace(gibbs_f).real)
    return ThermalReference(
        beta=beta,
        state_i=DensityMatrix.from_matrix(gibbs_i / z_i, tol=1e-10),
        state_f=DensityMatrix.from_matrix(gibbs_f / z_f, tol=1e-10),
        z_i=z_i,
        z_f=z_f,
        delta_f=-np.log(z_f / z_i) / beta,
    )


@dataclass(frozen=True)
class JarzynskiReport:
    """Deviation of the EPM statistics from a standard fluctuation theorem.

    lhs is <exp(-beta (Delta E - Delta F))> under the EPM distribution;
    rhs_thermal/rhs_coherence are the two trace terms it decomposes into for
    a unital channel; ratio_general is the channel-independent identity for
    G(i beta) / G_TPM(i beta) that remains valid for non-unital channels.
    """

    beta: float
    lhs: float
    rhs_thermal: float
    rhs_coherence: float
    unitality_residual: float
    ratio_general: float
    ratio_characteristic: float
    decomposition_residual: float

    @property
    def decomposition_valid(self) -> bool:
        return self.decomposition_residual <= 1e-8


def jarzynski_epm(
    rho_i: DensityMatrix,
    basis_i: EnergyBasis,
    basis_f: EnergyBasis,
    H_i,
    H_f,
    channel,
    beta: float,
    merge_tol: float = 1e-9,
) -> JarzynskiReport:
    H_i = require_hermitian(H_i)
    H_f = require_hermitian(H_f)
    ref = thermal_reference(H_i, H_f, beta)
    d = rho_i.dim
    chi = rho_i.matrix - ref.state_i.matrix
    # residual diagonal (in the H_i eigenbasis) of the would-be coherence part
    U = basis_i.vectors
    decomposition_residual = float(np.max(np.abs(np.diag(U.conj().T @ chi @ U))))

    dist = energy_change_distribution(epm_joint(rho_i, basis_i, basis_f, channel), merge_tol)
    lhs = float(np.dot(dist.probs, np.exp(-beta * (dist.deltas - ref.delta_f))))

    evolved_th = channel(ref.state_i.matrix)
    evolved_chi = channel(chi)
    rhs_thermal = d * float(np.trace(ref.state_f.matrix @ evolved_th).real)
    rhs_coherence = d * float(np.trace(ref.state_f.matrix @ evolved_chi).real)
    phi_id = channel(np.eye(d))
    unitality_residual = float(np.max(np.abs(phi_id - np.eye(d))))
    denom = float(np.trace(ref.state_f.matrix @ phi_id).real)
    ratio_general = (rhs_thermal + rhs_coherence) / denom if denom else np.inf

    g = characteristic_function(EPM, rho_i, H_i, H_f, channel, 1j * beta)
    g_tpm = characteristic_function(TPM, rho_i, H_i, H_f, channel, 1j * beta)
    ratio_characteristic = float((g / g_tpm).real) if g_tpm != 0 else np.inf

    return JarzynskiReport(
        beta=beta,
        lhs=lhs,
        rhs_thermal=rhs_thermal,
        rhs_coherence=rhs_coherence,
        unitality_residual=unitality_residual,
        ratio_general=ratio_general,
        ratio_characteristic=ratio_characteristic,
        decomposition_residual=decomposition_residual,
    )
