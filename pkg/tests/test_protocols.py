import numpy as np
import pytest

from epmstats import (
    DensityMatrix,
    EPM,
    MLL,
    TPM,
    energy_basis,
    energy_change_distribution,
    epm_joint,
    epm_split,
    identity_channel,
    matrix_function_hermitian,
    mll_joint,
    protocol_joint,
    total_variation,
    tpm_joint,
)
from epmstats.protocols import JointDistribution

QUBIT_BASIS = energy_basis(np.diag([0.0, 1.0]))
QUTRIT_H = np.diag([0.0, 1.0, 3.0])
QUTRIT_BASIS = energy_basis(QUTRIT_H)


def random_state(rng, d):
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    M = G @ G.conj().T
    return DensityMatrix.from_matrix(M / np.trace(M).real)


def random_diagonal_state(rng, d):
    p = rng.random(d)
    return DensityMatrix.from_matrix(np.diag(p / p.sum()).astype(complex))


def driven_bases(model, t):
    return energy_basis(model.hamiltonian(0.0)), energy_basis(model.hamiltonian(t))


class TestEpmJoint:
    def test_eigenstate_identity_map(self):
        rho = DensityMatrix.from_ket([1, 0, 0])
        j = epm_joint(rho, QUTRIT_BASIS, QUTRIT_BASIS, identity_channel())
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert np.allclose(j.p, expected)

    def test_plus_state_identity_map(self):
        rho = DensityMatrix.from_ket([1, 1])
        j = epm_joint(rho, QUBIT_BASIS, QUBIT_BASIS, identity_channel())
        assert np.allclose(j.p, np.full((2, 2), 0.25))

    def test_product_structure_exact(self, driven_model, driven_channel_at, qutrit_states):
        bi, bf = driven_bases(driven_model, 4.0)
        j = epm_joint(qutrit_states[0], bi, bf, driven_channel_at(4.0))
        assert np.max(np.abs(j.p - np.outer(j.marginal_initial(), j.marginal_final()))) <= 1e-12

    def test_long_time_limit_is_gibbs_row(
        self, undriven_equal_beta_model, undriven_longtime_channel
    ):
        H = undriven_equal_beta_model.h_free
        basis = energy_basis(H)
        gibbs = matrix_function_hermitian(H, lambda x: np.exp(-x))
        gibbs /= np.trace(gibbs).real
        rng = np.random.default_rng(21)
        rho = random_state(rng, 3)
        j = epm_joint(rho, basis, basis, undriven_longtime_channel)
        p_i = basis.populations(rho.matrix)
        expected = np.outer(p_i, np.diag(gibbs).real)
        assert np.max(np.abs(j.p - expected)) <= 1e-6


class TestTpmJoint:
    def test_identity_map_is_diagonal(self):
        rng = np.random.default_rng(22)
        rho = random_state(rng, 3)
        j = tpm_joint(rho, QUTRIT_BASIS, QUTRIT_BASIS, identity_channel())
        p_i = QUTRIT_BASIS.populations(rho.matrix)
        assert np.allclose(j.p, np.diag(p_i))
        d = energy_change_distribution(j)
        assert np.allclose(d.deltas, [0.0]) and np.allclose(d.probs, [1.0])

    def test_energy_eigenstate_matches_epm(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 3.0)
        ch = driven_channel_at(3.0)
        rho = DensityMatrix.from_matrix(bi.levels[1].projector)
        assert total_variation(tpm_joint(rho, bi, bf, ch), epm_joint(rho, bi, bf, ch)) <= 1e-10

    def test_diagonal_state_classical_gap(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 3.0)
        ch = driven_channel_at(3.0)
        U = bi.vectors
        rho = DensityMatrix.from_matrix(U @ np.diag([0.6, 0.3, 0.1]) @ U.conj().T)
        gap = total_variation(tpm_joint(rho, bi, bf, ch), epm_joint(rho, bi, bf, ch))
        assert gap > 1e-6


class TestMllJoint:
    def test_pure_state_matches_epm(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 5.0)
        ch = driven_channel_at(5.0)
        rng = np.random.default_rng(23)
        rho = DensityMatrix.from_ket(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        assert total_variation(mll_joint(rho, bi, bf, ch), epm_joint(rho, bi, bf, ch)) <= 1e-9

    def test_diagonal_state_matches_tpm(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 5.0)
        ch = driven_channel_at(5.0)
        U = bi.vectors
        rho = DensityMatrix.from_matrix(U @ np.diag([0.5, 0.3, 0.2]) @ U.conj().T)
        assert total_variation(mll_joint(rho, bi, bf, ch), tpm_joint(rho, bi, bf, ch)) <= 1e-9

    def test_eigenstate_all_protocols_agree(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 5.0)
        ch = driven_channel_at(5.0)
        rho = DensityMatrix.from_matrix(bi.levels[0].projector)
        joints = [protocol_joint(tag, rho, bi, bf, ch) for tag in (EPM, TPM, MLL)]
        assert total_variation(joints[0], joints[1]) <= 1e-9
        assert total_variation(joints[0], joints[2]) <= 1e-9

    def test_epm_is_product_of_mll_marginals(self, driven_model, driven_channel_at, qutrit_states):
        bi, bf = driven_bases(driven_model, 2.0)
        ch = driven_channel_at(2.0)
        for rho in qutrit_states[:5]:
            m = mll_joint(rho, bi, bf, ch)
            e = epm_joint(rho, bi, bf, ch)
            prod = np.outer(m.marginal_initial(), m.marginal_final())
            assert np.max(np.abs(e.p - prod)) <= 1e-9


class TestEpmSplit:
    def test_diagonal_state_has_no_coherence_piece(self):
        rng = np.random.default_rng(24)
        rho = random_diagonal_state(rng, 3)
        s = epm_split(rho, QUTRIT_BASIS, QUTRIT_BASIS, identity_channel())
        assert np.max(np.abs(s.p_chi)) <= 1e-14

    def test_plus_state_identity_map(self):
        rho = DensityMatrix.from_ket([1, 1])
        s = epm_split(rho, QUBIT_BASIS, QUBIT_BASIS, identity_channel())
        assert np.allclose(s.p_pop, np.full((2, 2), 0.25))
        assert np.max(np.abs(s.p_chi)) <= 1e-14

    def test_driven_model_nonzero_signed_piece(self, driven_model, driven_channel_at, qutrit_states):
        from epmstats import coherence_extremes

        bi, bf = driven_bases(driven_model, 2.0)
        rho = coherence_extremes(qutrit_states, bi).max_state
        s = epm_split(rho, bi, bf, driven_channel_at(2.0))
        assert np.max(np.abs(s.p_chi)) > 1e-6
        assert abs(s.p_chi.sum()) <= 1e-10
        j = epm_joint(rho, bi, bf, driven_channel_at(2.0))
        assert np.max(np.abs(s.p_pop + s.p_chi - j.p)) <= 1e-10


class TestEnergyChangeDistribution:
    def test_three_level_support(self):
        rho = DensityMatrix.from_matrix(np.eye(3) / 3)
        # uniform joint so every (l, k) pair carries weight
        j = epm_joint(rho, QUTRIT_BASIS, QUTRIT_BASIS, identity_channel())
        d = energy_change_distribution(j)
        assert np.allclose(d.deltas, [-3, -2, -1, 0, 1, 2, 3])
        assert d.probs[3] == pytest.approx(3 / 9)

    def test_qubit_plus_atoms(self):
        rho = DensityMatrix.from_ket([1, 1])
        j = epm_joint(rho, QUBIT_BASIS, QUBIT_BASIS, identity_channel())
        d = energy_change_distribution(j)
        assert np.allclose(d.deltas, [-1.0, 0.0, 1.0])
        assert np.allclose(d.probs, [0.25, 0.5, 0.25])

    def test_merge_tolerance_weighted_mean(self):
        j = JointDistribution(
            p=np.array([[0.25, 0.75]]),
            energies_i=np.array([0.0]),
            energies_f=np.array([0.0, 0.3]),
            protocol_tag=EPM,
        )
        d = energy_change_distribution(j, merge_tol=0.5)
        assert len(d.deltas) == 1
        assert d.deltas[0] == pytest.approx(0.75 * 0.3)
        assert d.probs[0] == pytest.approx(1.0)


class TestDistributionProperties:
    def test_normalization_seeded_cases(self, driven_model, driven_channel_at, qutrit_states):
        rng = np.random.default_rng(25)
        times = driven_channel_at.times
        for rho in qutrit_states[:20]:
            t = float(rng.choice(times[1:]))
            bi, bf = driven_bases(driven_model, t)
            for tag in (EPM, TPM, MLL):
                j = protocol_joint(tag, rho, bi, bf, driven_channel_at(t))
                assert abs(j.p.sum() - 1.0) <= 1e-9

    def test_non_convexity_witness(self, driven_model, driven_channel_at):
        bi, bf = driven_bases(driven_model, 3.0)
        ch = driven_channel_at(3.0)
        r1 = DensityMatrix.from_matrix(bi.levels[0].projector)
        r2 = DensityMatrix.from_matrix(bi.levels[1].projector)
        mix = DensityMatrix.from_matrix(0.5 * r1.matrix + 0.5 * r2.matrix)
        p_mix = epm_joint(mix, bi, bf, ch).p
        p_avg = 0.5 * epm_joint(r1, bi, bf, ch).p + 0.5 * epm_joint(r2, bi, bf, ch).p
        assert np.max(np.abs(p_mix - p_avg)) > 1e-6
