"""Acceptance suite: one test per acceptance criterion, each emitting a
single pass/fail line."""

import numpy as np
import pytest

from epmstats import (
    EPM,
    MLL,
    TPM,
    DensityMatrix,
    PropagationConfig,
    SamplerConfig,
    characteristic_function,
    dephase_split,
    energy_basis,
    energy_change_distribution,
    epm_joint,
    first_moment_closed_form,
    fixed_point_residual,
    jarzynski_epm,
    matrix_function_hermitian,
    mll_joint,
    moment,
    mutual_information,
    propagate,
    protocol_joint,
    sample_density_hs,
    second_moment_closed_form,
    shannon_entropy,
    thermal_reference,
    total_variation,
    tpm_first_moment_closed_form,
    tpm_joint,
    validate_config,
)
from epmstats.experiments import run_experiment
from epmstats.models import qubit_dephasing_model, qubit_driven_unitary_model
from epmstats.dynamics import channel_from_superoperator, superoperator_matrix


def report(num: int, label: str, ok: bool):
    print(f"criterion {num:02d} [{label}]: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num:02d} ({label}) failed"


@pytest.fixture(scope="module")
def cases(driven_model, driven_channel_at, qutrit_states):
    """100 seeded (state, snapshot time) pairs on the driven machine."""
    rng = np.random.default_rng(12345)
    ts = np.array(driven_channel_at.times)
    picked = rng.choice(ts[ts > 0], size=len(qutrit_states))
    out = []
    H_i = driven_model.hamiltonian(0.0)
    basis_i = energy_basis(H_i)
    for rho, t in zip(qutrit_states, picked):
        H_f = driven_model.hamiltonian(t)
        out.append((rho, basis_i, energy_basis(H_f), H_i, H_f, driven_channel_at(t)))
    return out


@pytest.fixture(scope="module")
def fig2a_result(tmp_path_factory):
    cfg = validate_config("experiment: fig2a\nensemble: {seed: 7}\n")
    result, _ = run_experiment(cfg, out_dir=str(tmp_path_factory.mktemp("fig2a")), threads=4)
    return result


@pytest.fixture(scope="module")
def fig2b_result(tmp_path_factory):
    cfg = validate_config("experiment: fig2b\nensemble: {seed: 7}\n")
    result, _ = run_experiment(cfg, out_dir=str(tmp_path_factory.mktemp("fig2b")), threads=4)
    return result


def test_criterion_01_joint_normalization(cases):
    worst = 0.0
    for rho, bi, bf, H_i, H_f, ch in cases:
        for tag in (EPM, TPM, MLL):
            joint = protocol_joint(tag, rho, bi, bf, ch)
            worst = max(worst, abs(joint.p.sum() - 1.0))
    report(1, "joint normalization", worst <= 1e-9)


def test_criterion_02_first_moments(cases):
    worst = 0.0
    for rho, bi, bf, H_i, H_f, ch in cases:
        closed = first_moment_closed_form(rho, H_i, H_f, ch)
        epm = moment(energy_change_distribution(epm_joint(rho, bi, bf, ch)), 1)
        mll = moment(energy_change_distribution(mll_joint(rho, bi, bf, ch)), 1)
        tpm = moment(energy_change_distribution(tpm_joint(rho, bi, bf, ch)), 1)
        tpm_closed = tpm_first_moment_closed_form(rho, bi, H_i, H_f, ch)
        worst = max(worst, abs(epm - closed), abs(mll - closed), abs(tpm - tpm_closed))
    report(2, "first moments", worst <= 1e-9)


def test_criterion_03_protocol_coincidence(driven_model, driven_channel_at):
    rng = np.random.default_rng(5150)
    basis_i = energy_basis(driven_model.hamiltonian(0.0))
    ts = np.array(driven_channel_at.times)
    ts = ts[ts > 0]

    def bases_at(t):
        return basis_i, energy_basis(driven_model.hamiltonian(t)), driven_channel_at(t)

    worst_abc = 0.0
    # (a) energy eigenstates: all three protocols coincide
    for _ in range(10):
        level = rng.integers(0, 3)
        t = rng.choice(ts)
        bi, bf, ch = bases_at(t)
        rho = DensityMatrix.from_ket(basis_i.vectors[:, level])
        joints = [protocol_joint(tag, rho, bi, bf, ch) for tag in (EPM, TPM, MLL)]
        worst_abc = max(
            worst_abc,
            total_variation(joints[0], joints[1]),
            total_variation(joints[0], joints[2]),
        )
    # (b) pure states: EPM = MLL
    for _ in range(10):
        t = rng.choice(ts)
        bi, bf, ch = bases_at(t)
        psi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        rho = DensityMatrix.from_ket(psi)
        worst_abc = max(
            worst_abc, total_variation(epm_joint(rho, bi, bf, ch), mll_joint(rho, bi, bf, ch))
        )
    # (c) diagonal states: MLL = TPM
    for _ in range(10):
        t = rng.choice(ts)
        bi, bf, ch = bases_at(t)
        p = np.sort(rng.dirichlet(np.ones(3)))[::-1] + np.array([2e-3, 1e-3, 0.0])
        p = p / p.sum()
        U = basis_i.vectors
        rho = DensityMatrix.from_matrix(U @ np.diag(p) @ U.conj().T)
        worst_abc = max(
            worst_abc, total_variation(mll_joint(rho, bi, bf, ch), tpm_joint(rho, bi, bf, ch))
        )
    # (d) converse witness: a non-eigenstate diagonal state separates EPM and TPM
    bi, bf, ch = bases_at(2.0)
    U = basis_i.vectors
    rho = DensityMatrix.from_matrix(U @ np.diag([0.6, 0.3, 0.1]) @ U.conj().T)
    gap = total_variation(epm_joint(rho, bi, bf, ch), tpm_joint(rho, bi, bf, ch))
    report(3, "protocol coincidence", worst_abc <= 1e-9 and gap > 1e-6)


def test_criterion_04_second_moment_decomposition(cases):
    worst_total, worst_sum, worst_deph = 0.0, 0.0, 0.0
    for rho, bi, bf, H_i, H_f, ch in cases:
        total, pop, coh = second_moment_closed_form(rho, bi, H_i, H_f, ch)
        from_dist = moment(energy_change_distribution(epm_joint(rho, bi, bf, ch)), 2)
        worst_total = max(worst_total, abs(total - from_dist))
        worst_sum = max(worst_sum, abs((pop + coh) - total))
        P, _ = dephase_split(rho, bi)
        _, _, coh_deph = second_moment_closed_form(P, bi, H_i, H_f, ch)
        worst_deph = max(worst_deph, abs(coh_deph))
    report(
        4,
        "second moment decomposition",
        worst_total <= 1e-8 and worst_sum <= 1e-10 and worst_deph <= 1e-10,
    )


def test_criterion_05_characteristic_functions(cases):
    rng = np.random.default_rng(777)
    us = rng.uniform(-3.0, 3.0, size=20)
    worst, worst_zero = 0.0, 0.0
    for rho, bi, bf, H_i, H_f, ch in cases[:5]:
        for tag in (EPM, TPM, MLL):
            dist = energy_change_distribution(protocol_joint(tag, rho, bi, bf, ch))
            worst_zero = max(
                worst_zero, abs(characteristic_function(tag, rho, H_i, H_f, ch, 0.0) - 1.0)
            )
            for u in us:
                g = characteristic_function(tag, rho, H_i, H_f, ch, u)
                from_dist = np.dot(dist.probs, np.exp(1j * u * dist.deltas))
                worst = max(worst, abs(g - from_dist))
    report(5, "characteristic functions", worst <= 1e-9 and worst_zero <= 1e-12)


def test_criterion_06_fluctuation_relation(driven_model, driven_channel_at):
    rng = np.random.default_rng(31415)
    H2 = np.diag([0.0, 1.0]).astype(complex)
    basis2 = energy_basis(H2)

    deph = qubit_dephasing_model(0.2)
    ch_deph = channel_from_superoperator(
        superoperator_matrix(deph, PropagationConfig(0.0, 2.0, dt=1e-3))
    )
    uni_model = qubit_driven_unitary_model()
    ch_uni = channel_from_superoperator(
        superoperator_matrix(uni_model, PropagationConfig(0.0, 2.0, dt=1e-3))
    )
    H2_f = uni_model.hamiltonian(2.0)

    worst_unital = 0.0
    for beta in (0.5, 1.0, 3.0):
        ref = thermal_reference(H2, H2, beta)
        for _ in range(5):
            c = 0.03 * (rng.standard_normal() + 1j * rng.standard_normal())
            chi = np.array([[0.0, c], [np.conj(c), 0.0]])
            rho = DensityMatrix.from_matrix(ref.state_i.matrix + chi)
            rep = jarzynski_epm(rho, basis2, basis2, H2, H2, ch_deph, beta)
            worst_unital = max(worst_unital, abs(rep.lhs - (rep.rhs_thermal + rep.rhs_coherence)))
            rep = jarzynski_epm(
                rho, basis2, energy_basis(H2_f), H2, H2_f, ch_uni, beta
            )
            worst_unital = max(worst_unital, abs(rep.lhs - (rep.rhs_thermal + rep.rhs_coherence)))

    # non-unital three-level machine: the general ratio identity still holds
    beta = 1.0
    H_i = driven_model.hamiltonian(0.0)
    H_f = driven_model.hamiltonian(4.0)
    bi, bf = energy_basis(H_i), energy_basis(H_f)
    ref = thermal_reference(H_i, H_f, beta)
    Uv = bi.vectors
    chi_off = np.zeros((3, 3), dtype=complex)
    chi_off[0, 1] = 0.03 + 0.02j
    chi_off[1, 0] = np.conj(chi_off[0, 1])
    chi = Uv @ chi_off @ Uv.conj().T
    rho = DensityMatrix.from_matrix(ref.state_i.matrix + chi)
    rep = jarzynski_epm(rho, bi, bf, H_i, H_f, driven_channel_at(4.0), beta)
    ok_nonunital = (
        rep.unitality_residual > 1e-3
        and abs(rep.ratio_general - rep.ratio_characteristic) <= 1e-7
    )
    report(6, "fluctuation relation", worst_unital <= 1e-8 and ok_nonunital)


def test_criterion_07_entropy_inequalities(cases):
    worst_deph, worst_order, worst_mi, worst_eq = 0.0, 0.0, 0.0, 0.0
    for rho, bi, bf, H_i, H_f, ch in cases:
        P, _ = dephase_split(rho, bi)
        h_epm_deph = shannon_entropy(epm_joint(P, bi, bf, ch))
        h_tpm = shannon_entropy(tpm_joint(P, bi, bf, ch))
        worst_deph = min(worst_deph, h_epm_deph - h_tpm)

        j_epm = epm_joint(rho, bi, bf, ch)
        j_mll = mll_joint(rho, bi, bf, ch)
        h_epm, h_mll = shannon_entropy(j_epm), shannon_entropy(j_mll)
        worst_order = min(worst_order, h_epm - h_mll)
        mi = mutual_information(j_mll, j_epm)
        worst_mi = min(worst_mi, mi)
        worst_eq = max(worst_eq, abs(mi - (h_epm - h_mll)))
    report(
        7,
        "entropy inequalities",
        worst_deph >= -1e-12 and worst_order >= -1e-12 and worst_mi >= -1e-12
        and worst_eq <= 1e-9,
    )


def test_criterion_08_fixed_point_and_convergence(
    undriven_equal_beta_model, undriven_longtime_channel
):
    model = undriven_equal_beta_model
    beta = 1.0
    gibbs = matrix_function_hermitian(model.h_free, lambda x: np.exp(-beta * x))
    rho_th = DensityMatrix.from_matrix(gibbs / np.trace(gibbs).real)
    residual = fixed_point_residual(model, rho_th)

    basis = energy_basis(model.h_free)
    worst_tv = 0.0
    for rho in sample_density_hs(SamplerConfig(dim=3, count=10, seed=808)):
        dists = [
            energy_change_distribution(
                protocol_joint(tag, rho, basis, basis, undriven_longtime_channel)
            )
            for tag in (EPM, TPM, MLL)
        ]
        assert all(np.allclose(d.deltas, dists[0].deltas) for d in dists)
        for d in dists[1:]:
            worst_tv = max(worst_tv, 0.5 * np.sum(np.abs(d.probs - dists[0].probs)))
    report(8, "fixed point and convergence", residual <= 1e-10 and worst_tv <= 1e-3)


def test_criterion_09_coherence_share_profile(fig2a_result):
    res = fig2a_result
    table = res.values["rel_coh_second_moment"]
    curve = table[:, res.extremes.max_index]
    peak = float(np.max(np.abs(curve)))
    final = float(abs(curve[-1]))
    # the top-coherence state does not dominate the whole band at every time
    exceeded = bool(np.any(table.max(axis=1) > curve + 1e-12))
    ok = 0.15 <= peak <= 0.60 and final < 0.05 and exceeded
    report(9, "coherence share profile", ok)


def test_criterion_10_entropy_gap_signs(fig2b_result):
    res = fig2b_result
    has_negative = bool(np.min(res.values["entropy_epm_minus_tpm"]) < 0.0)
    dephased_ok = bool(np.min(res.values["entropy_epm_dephased_minus_tpm"]) >= -1e-12)
    report(10, "entropy gap signs", has_negative and dephased_ok)


def test_criterion_11_sampler_mean_purity():
    states = sample_density_hs(SamplerConfig(dim=3, count=10_000, seed=424242))
    direct = np.mean([np.trace(s.matrix @ s.matrix).real for s in states])
    oracle = np.mean([np.sum(np.linalg.eigvalsh(s.matrix) ** 2) for s in states])
    report(11, "sampler mean purity", abs(direct - 0.6) <= 0.01 and abs(direct - oracle) <= 1e-10)


def test_criterion_12_integrator_order(driven_model):
    rho0 = DensityMatrix.from_ket([1.0, 1.0, 1.0]).matrix
    ref, _ = propagate(driven_model, rho0, PropagationConfig(0.0, 5.0, dt=0.0025))
    coarse, _ = propagate(driven_model, rho0, PropagationConfig(0.0, 5.0, dt=0.02))
    fine, _ = propagate(driven_model, rho0, PropagationConfig(0.0, 5.0, dt=0.01))
    e_coarse = np.max(np.abs(coarse - ref))
    e_fine = np.max(np.abs(fine - ref))
    ratio = e_coarse / e_fine
    report(12, "integrator order", 8.0 <= ratio <= 32.0)
