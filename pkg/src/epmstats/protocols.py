"""Joint probability distributions of the three measurement protocols.

EPM: only the final energy is measured; the initial energy enters through a
virtual measurement weighted by the initial populations, so the joint is an
exact product of its marginals and initial coherence survives the dynamics.

TPM: projective energy measurements at both ends; the first measurement
dephases the state, so each initial level is propagated separately
(Lueders post-measurement states for degenerate levels).

MLL: the system is initialized in the eigenstates of rho_i and outcomes are
weighted by the eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidState, MapNotTracePreserving
from .operators import DensityMatrix, EnergyBasis, dephase_split, eigh

PROB_TOL = 1e-9
NEG_CLAMP = 1e-12
DEFAULT_MERGE_TOL = 1e-9

EPM = "EPM"
TPM = "TPM"
MLL = "MLL"


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities p[l, k] over (initial level, final level) pairs."""

    p: np.ndarray
    energies_i: np.ndarray
    energies_f: np.ndarray
    protocol_tag: str

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (len(self.energies_i), len(self.energies_f)):
            raise DimensionMismatch("joint table shape does not match energy lists")
        if np.min(p) < -NEG_CLAMP:
            raise InvalidState(f"negative joint probability {np.min(p):.3e}")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise MapNotTracePreserving(f"joint probabilities sum to {total!r}")
        object.__setattr__(self, "p", p)

    @property
    def probabilities(self) -> np.ndarray:
        """Entries with sub-tolerance negatives clamped to zero."""
        return np.clip(self.p, 0.0, None)

    def marginal_initial(self) -> np.ndarray:
        return self.probabilities.sum(axis=1)

    def marginal_final(self) -> np.ndarray:
        return self.probabilities.sum(axis=0)


def total_variation(a: JointDistribution, b: JointDistribution) -> float:
    if a.p.shape != b.p.shape:
        raise DimensionMismatch("joint tables differ in shape")
    return 0.5 * float(np.sum(np.abs(a.probabilities - b.probabilities)))


def _final_populations(basis_f: EnergyBasis, evolved) -> np.ndarray:
    p_f = basis_f.populations(evolved)
    if abs(p_f.sum() - 1.0) > 1e-8:
        raise MapNotTracePreserving(f"final populations sum to {p_f.sum()!r}")
    return p_f


def _check_dims(rho: DensityMatrix, basis_i: EnergyBasis, basis_f: EnergyBasis):
    if not (rho.dim == basis_i.dim == basis_f.dim):
        raise DimensionMismatch("state and bases must share one dimension")


def epm_joint(rho_i: DensityMatrix, basis_i: EnergyBasis, basis_f: EnergyBasis, channel) -> JointDistribution:
    """p(l, k) = Tr(rho Pi_i^l) Tr(Phi[rho] Pi_f^k): product of marginals."""
    _check_dims(rho_i, basis_i, basis_f)
    p_i = basis_i.populations(rho_i.matrix)
    p_f = _final_populations(basis_f, channel(rho_i.matrix))
    return JointDistribution(
        p=np.outer(p_i, p_f),
        energies_i=basis_i.energies,
        energies_f=basis_f.energies,
        protocol_tag=EPM,
    )


def tpm_joint(rho_i: DensityMatrix, basis_i: EnergyBasis, basis_f: EnergyBasis, channel) -> JointDistribution:
    """p(l, k) = p_i^l Tr(Phi[sigma_l] Pi_f^k) with sigma_l the Lueders
    post-measurement state of level l; unpopulated levels get zero rows."""
    _check_dims(rho_i, basis_i, basis_f)
    p_i = basis_i.populations(rho_i.matrix)
    table = np.zeros((basis_i.n_levels, basis_f.n_levels))
    for l, lv in enumerate(basis_i.levels):
        if p_i[l] <= NEG_CLAMP:
            continue
        sigma = lv.projector @ rho_i.matrix @ lv.projector / p_i[l]
        table[l] = p_i[l] * _final_populations(basis_f, channel(sigma))
    return JointDistribution(
        p=table,
        energies_i=basis_i.energies,
        energies_f=basis_f.energies,
        protocol_tag=TPM,
    )


def mll_joint(
    rho_i: DensityMatrix,
    basis_i: EnergyBasis,
    basis_f: EnergyBasis,
    channel,
    eigenvalue_cutoff: float = 1e-14,
) -> JointDistribution:
    """p(l, k) = sum_s p^s Tr(|s><s| Pi_i^l) Tr(Phi[|s><s|] Pi_f^k).

    For degenerate rho_i the eigenbasis is the deterministic one returned by
    the eigensolver; the result is basis-dependent in that case.
    """
    _check_dims(rho_i, basis_i, basis_f)
    es = eigh(rho_i.matrix)
    table = np.zeros((basis_i.n_levels, basis_f.n_levels))
    for s in range(rho_i.dim):
        w = es.values[s]
        if w <= eigenvalue_cutoff:
            continue
        dyad = np.outer(es.vectors[:, s], es.vectors[:, s].conj())
        overlap = basis_i.populations(dyad)
        p_f = _final_populations(basis_f, channel(dyad))
        table += w * np.outer(overlap, p_f)
    return JointDistribution(
        p=table,
        energies_i=basis_i.energies,
        energies_f=basis_f.energies,
        protocol_tag=MLL,
    )


def protocol_joint(tag: str, rho_i, basis_i, basis_f, channel) -> JointDistribution:
    builders = {EPM: epm_joint, TPM: tpm_joint, MLL: mll_joint}
    try:
        return builders[tag](rho_i, basis_i, basis_f, channel)
    except KeyError:
        raise ValueError(f"unknown protocol tag {tag!r}") from None


@dataclass(frozen=True)
class EpmSplit:
    """EPM joint split into population and (signed) coherence pieces."""

    p_pop: np.ndarray
    p_chi: np.ndarray

    def __post_init__(self):
        if abs(self.p_chi.sum()) > 1e-10:
            raise InvalidState(f"coherence piece sums to {self.p_chi.sum():.3e}, not 0")


def epm_split(rho_i: DensityMatrix, basis_i: EnergyBasis, basis_f: EnergyBasis, channel) -> EpmSplit:
    """Propagate P and chi separately (linearity of the channel) and weight
    both final-population vectors by the initial populations."""
    _check_dims(rho_i, basis_i, basis_f)
    P, chi = dephase_split(rho_i, basis_i)
    p_i = basis_i.populations(rho_i.matrix)
    p_P = basis_f.populations(channel(P.matrix))
    p_chi = basis_f.populations(channel(chi))
    return EpmSplit(p_pop=np.outer(p_i, p_P), p_chi=np.outer(p_i, p_chi))


@dataclass(frozen=True)
class EnergyChangeDistribution:
    """Atoms of the energy-change random variable, merged within merge_tol."""

    deltas: np.ndarray
    probs: np.ndarray
    merge_tol: float

    def __post_init__(self):
        if abs(self.probs.sum() - 1.0) > PROB_TOL:
            raise InvalidState(f"atom probabilities sum to {self.probs.sum()!r}")
        if np.any(np.diff(self.deltas) <= self.merge_tol):
            raise InvalidState("atom gaps must exceed merge_tol")

    @property
    def atoms(self):
        return list(zip(self.deltas.tolist(), self.probs.tolist()))


def energy_change_distribution(
    joint: JointDistribution, merge_tol: float = DEFAULT_MERGE_TOL
) -> EnergyChangeDistribution:
    """Collapse the joint onto atoms of Delta E = E_f^k - E_i^l.

    Values are chain-clustered within merge_tol; each cluster's representative
    is the probability-weighted mean of its members.
    """
    deltas = np.subtract.outer(joint.energies_f, joint.energies_i).T.ravel()
    probs = joint.probabilities.ravel()
    keep = probs > 0
    deltas, probs = deltas[keep], probs[keep]
    order = np.argsort(deltas, kind="stable")
    deltas, probs = deltas[order], probs[order]
    rep, mass = [], []
    members_d, members_p = [deltas[0]], [probs[0]]
    for d, p in zip(deltas[1:], probs[1:]):
        if d - members_d[-1] <= merge_tol:
            members_d.append(d)
            members_p.append(p)
        else:
            rep.append(_cluster_mean(members_d, members_p))
            mass.append(sum(members_p))
            members_d, members_p = [d], [p]
    rep.append(_cluster_mean(members_d, members_p))
    mass.append(sum(members_p))
    return EnergyChangeDistribution(
        deltas=np.array(rep), probs=np.array(mass), merge_tol=merge_tol
    )


def _cluster_mean(ds, ps):
    w = sum(ps)
    if w <= 0:
        return float(np.mean(ds))
    return float(np.dot(ds, ps) / w)
