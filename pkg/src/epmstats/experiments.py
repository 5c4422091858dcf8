"""Ensemble experiments over the measurement protocols.

The dynamics is materialized once as superoperator snapshots; every
per-state quantity is then evaluated with batched linear algebra over the
whole state stack. The slow reference implementations in `protocols` and
`stats` compute the same numbers one state at a time and are used to
cross-check these kernels in the test suite.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import LindbladModel, PropagationConfig, superoperator_snapshots
from .errors import MapNotTracePreserving, SupportMismatch
from .operators import energy_basis
from .sampling import PRNG_ID, CoherenceExtremes, SamplerConfig, coherence_extremes, sample_density_hs

TRACE_DRIFT_TOL = 1e-6
_CHUNK = 64

_MLL_QUANTITIES = {
    "second_moment_mll",
    "second_moment_mll_minus_epm",
    "entropy_mll",
    "entropy_epm_minus_mll",
    "mutual_info_mll_epm",
}
_TPM_QUANTITIES = {
    "second_moment_tpm",
    "first_moment_tpm",
    "entropy_tpm",
    "entropy_epm_minus_tpm",
    "entropy_epm_dephased_minus_tpm",
}


@dataclass
class ExperimentResult:
    """In-memory results: values[name] has shape (n_times, n_states), except
    coherence_l1 which is evaluated once and has shape (1, n_states)."""

    config: ExperimentConfig
    times: np.ndarray
    values: dict[str, np.ndarray]
    extremes: CoherenceExtremes
    wall_time_s: float


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) along the last axes of a stack of tables."""
    flat = p.reshape(p.shape[0], -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(flat > 0, flat * np.log(np.where(flat > 0, flat, 1.0)), 0.0)
    return -terms.sum(axis=1)


def _evolve(S: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Apply a superoperator to a stack of operators (column-stacking vec)."""
    n, d, _ = stack.shape
    v = stack.transpose(0, 2, 1).reshape(n, d * d).T
    return (S @ v).T.reshape(n, d, d).transpose(0, 2, 1)


def _trace_with(M: np.ndarray, stack: np.ndarray) -> np.ndarray:
    return np.einsum("ab,nba->n", M, stack).real


def _level_populations(proj: np.ndarray, stack: np.ndarray) -> np.ndarray:
    return np.clip(np.einsum("lab,nba->nl", proj, stack).real, 0.0, None)


def _kernel_chunk(
    cfg: ExperimentConfig,
    model: LindbladModel,
    sup_snaps: list[tuple[float, np.ndarray]],
    states: np.ndarray,
    quantities: tuple[str, ...],
) -> dict[str, np.ndarray]:
    """Evaluate every requested quantity for one contiguous chunk of states."""
    n, d, _ = states.shape
    R = states
    t_i = cfg.time.t_i
    H_i = model.hamiltonian(t_i)
    basis_i = energy_basis(H_i, cfg.degeneracy_tol)
    proj_i = basis_i.projectors
    Hi2 = H_i @ H_i

    p_i = _level_populations(proj_i, R)
    ent_p_i = _entropy_rows(p_i)
    tr_Hi_R = _trace_with(H_i, R)
    tr_Hi2_R = _trace_with(Hi2, R)
    P = np.einsum("lab,nbc,lcd->nad", proj_i, R, proj_i)

    need_mll = bool(_MLL_QUANTITIES.intersection(quantities))
    need_tpm = bool(_TPM_QUANTITIES.intersection(quantities))
    need_pop_split = need_tpm or bool(
        {"second_moment_pop", "second_moment_coh", "rel_coh_second_moment"}.intersection(quantities)
    )

    if need_mll:
        w, V = np.linalg.eigh(R)
        w = np.where(w > 1e-14, w, 0.0)
        dyads = np.einsum("nas,nbs->nsab", V, V.conj()).reshape(n * d, d, d)
        overlap_i = _level_populations(proj_i, dyads).reshape(n, d, -1)
        tr_Hi_dy = _trace_with(H_i, dyads).reshape(n, d)
    if need_tpm:
        L_i = basis_i.n_levels
        blocks = np.einsum("lab,nbc,lcd->nlad", proj_i, R, proj_i).reshape(n * L_i, d, d)

    out = {q: np.empty((len(sup_snaps), n)) for q in quantities if q != "coherence_l1"}

    for it, (t, S) in enumerate(sup_snaps):
        H_f = model.hamiltonian(t)
        basis_f = energy_basis(H_f, cfg.degeneracy_tol)
        proj_f = basis_f.projectors
        Hf2 = H_f @ H_f

        evR = _evolve(S, R)
        q_R = _level_populations(proj_f, evR)
        drift = np.max(np.abs(q_R.sum(axis=1) - 1.0))
        if drift > TRACE_DRIFT_TOL:
            raise MapNotTracePreserving(f"final populations drift {drift:.3e} at t={t}")
        tr_Hf_evR = _trace_with(H_f, evR)
        tr_Hf2_evR = _trace_with(Hf2, evR)
        sm_total = tr_Hi2_R + tr_Hf2_evR - 2.0 * tr_Hf_evR * tr_Hi_R
        ent_epm = ent_p_i + _entropy_rows(q_R)

        if need_pop_split:
            evP = _evolve(S, P)
            tr_Hf_evP = _trace_with(H_f, evP)
            tr_Hf2_evP = _trace_with(Hf2, evP)
            sm_pop = tr_Hi2_R + tr_Hf2_evP - 2.0 * tr_Hf_evP * tr_Hi_R
        if need_mll:
            evD = _evolve(S, dyads)
            q_dy = _level_populations(proj_f, evD).reshape(n, d, -1)
            tr_Hf_dy = _trace_with(H_f, evD).reshape(n, d)
            cross_mll = np.einsum("ns,ns,ns->n", w, tr_Hf_dy, tr_Hi_dy)
            sm_mll = tr_Hi2_R + tr_Hf2_evR - 2.0 * cross_mll
            table_mll = np.einsum("ns,nsl,nsk->nlk", w, overlap_i, q_dy)
            ent_mll = _entropy_rows(table_mll)
        if need_tpm:
            evB = _evolve(S, blocks)
            table_tpm = _level_populations(proj_f, evB).reshape(n, L_i, -1)
            ent_tpm = _entropy_rows(table_tpm)

        for q in out:
            if q == "second_moment_epm":
                out[q][it] = sm_total
            elif q == "second_moment_pop":
                out[q][it] = sm_pop
            elif q == "second_moment_coh":
                out[q][it] = sm_total - sm_pop
            elif q == "rel_coh_second_moment":
                out[q][it] = np.divide(
                    sm_total - sm_pop,
                    sm_total,
                    out=np.zeros(n),
                    where=np.abs(sm_total) > 0,
                )
            elif q == "second_moment_mll":
                out[q][it] = sm_mll
            elif q == "second_moment_mll_minus_epm":
                out[q][it] = sm_mll - sm_total
            elif q == "second_moment_tpm":
                cross = np.einsum(
                    "l,nl->n", basis_i.energies, _trace_with(H_f, evB).reshape(n, L_i)
                )
                out[q][it] = tr_Hi2_R + tr_Hf2_evP - 2.0 * cross
            elif q == "first_moment_epm":
                out[q][it] = tr_Hf_evR - tr_Hi_R
            elif q == "first_moment_tpm":
                out[q][it] = tr_Hf_evP - tr_Hi_R
            elif q == "entropy_epm":
                out[q][it] = ent_epm
            elif q == "entropy_tpm":
                out[q][it] = ent_tpm
            elif q == "entropy_mll":
                out[q][it] = ent_mll
            elif q == "entropy_epm_minus_tpm":
                out[q][it] = ent_epm - ent_tpm
            elif q == "entropy_epm_minus_mll":
                out[q][it] = ent_epm - ent_mll
            elif q == "entropy_epm_dephased_minus_tpm":
                out[q][it] = ent_p_i + _entropy_rows(_level_populations(proj_f, evP)) - ent_tpm
            elif q == "mutual_info_mll_epm":
                p = table_mll.reshape(n, -1)
                qq = (p_i[:, :, None] * q_R[:, None, :]).reshape(n, -1)
                if np.any((p > 1e-12) & (qq <= 1e-12)):
                    raise SupportMismatch("MLL support not contained in EPM support")
                mask = p > 0
                ratio = np.where(mask, p / np.where(mask, qq, 1.0), 1.0)
                out[q][it] = np.sum(np.where(mask, p * np.log(ratio), 0.0), axis=1)
    return out


def compute_quantities(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run the configured experiment in memory, without touching the disk."""
    start = _time.perf_counter()
    model = cfg.build_model()
    times = cfg.snapshot_times()
    prop = PropagationConfig(
        t_i=cfg.time.t_i, t_f=cfg.time.t_f, dt=cfg.time.dt, snapshot_times=times
    )
    _, sup_snaps = superoperator_snapshots(model, prop)

    states = sample_density_hs(
        SamplerConfig(dim=cfg.ensemble.dim, count=cfg.ensemble.count, seed=cfg.ensemble.seed)
    )
    stack = np.stack([s.matrix for s in states])
    basis_i = energy_basis(model.hamiltonian(cfg.time.t_i), cfg.degeneracy_tol)
    extremes = coherence_extremes(states, basis_i)

    quantities = cfg.quantities
    kernel_quantities = tuple(q for q in quantities if q != "coherence_l1")
    threads = max(1, int(threads))
    # fixed chunk size, independent of the thread count, so results are
    # bitwise identical however the work is distributed
    n = stack.shape[0]
    chunks = [stack[i : i + _CHUNK] for i in range(0, n, _CHUNK)]
    work = lambda c: _kernel_chunk(cfg, model, sup_snaps, c, kernel_quantities)
    if threads == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    merged = {q: np.concatenate([p[q] for p in parts], axis=1) for q in kernel_quantities}
    if "coherence_l1" in quantities:
        from .operators import coherence_l1

        merged["coherence_l1"] = np.array([[coherence_l1(s, basis_i) for s in states]])
    return ExperimentResult(
        config=cfg,
        times=np.asarray(times),
        values=merged,
        extremes=extremes,
        wall_time_s=_time.perf_counter() - start,
    )


def _write_csv(path: str, result: ExperimentResult):
    cfg = result.config
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# epmstats {__version__} experiment={cfg.experiment}\n")
        fh.write(
            f"# seed={cfg.ensemble.seed} prng={PRNG_ID} dt={cfg.time.dt!r}"
            f" states={cfg.ensemble.count}\n"
        )
        # the timestamp sits on its own line so outputs are byte-identical
        # apart from it
        fh.write(f"# generated={datetime.datetime.now(datetime.timezone.utc).isoformat()}\n")
        fh.write("time,state_id,quantity,value\n")
        for name in sorted(result.values):
            table = result.values[name]
            times = result.times if table.shape[0] > 1 else result.times[:1]
            for it, t in enumerate(times):
                row = table[it]
                for sid in range(row.shape[0]):
                    fh.write(f"{t:.10g},{sid},{name},{row[sid]:.12g}\n")


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | None = None,
    threads: int = 1,
    seed: int | None = None,
    render: bool = True,
) -> tuple[ExperimentResult, dict]:
    """Run an experiment and write its artifacts.

    Writes results.csv, effective_config.yaml and manifest.json into the
    output directory, plus rendered figures unless render is off. Returns
    the in-memory result and the manifest dictionary.
    """
    if seed is not None:
        cfg = dataclasses.replace(
            cfg, ensemble=dataclasses.replace(cfg.ensemble, seed=int(seed))
        )
    if out_dir is None:
        out_dir = cfg.output_dir
    else:
        cfg = dataclasses.replace(cfg, output_dir=str(out_dir))
    os.makedirs(out_dir, exist_ok=True)

    result = compute_quantities(cfg, threads=threads)

    csv_path = os.path.join(out_dir, "results.csv")
    _write_csv(csv_path, result)
    with open(os.path.join(out_dir, "effective_config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(cfg.serialize())

    figure_paths: list[str] = []
    if render:
        from .figures import render_figures

        figure_paths = render_figures(result, out_dir)

    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": cfg.ensemble.seed,
        "prng": PRNG_ID,
        "dt": cfg.time.dt,
        "n_states": cfg.ensemble.count,
        "n_snapshots": cfg.time.n_snapshots,
        "quantities": list(cfg.quantities),
        "wall_time_s": round(result.wall_time_s, 3),
        "coherence_min": {
            "state_id": result.extremes.min_index,
            "value": result.extremes.min_value,
        },
        "coherence_max": {
            "state_id": result.extremes.max_index,
            "value": result.extremes.max_value,
        },
        "results_csv": os.path.basename(csv_path),
        "figures": [os.path.basename(p) for p in figure_paths],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result, manifest
