"""Figure rendering for experiment results.

One PNG per time-resolved quantity: the ensemble envelope as a shaded band,
the ensemble mean, and the trajectories of the lowest- and highest-coherence
states highlighted on top.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_LABELS = {
    "rel_coh_second_moment": "coherence share of the second moment",
    "second_moment_epm": "second moment (EPM)",
    "second_moment_pop": "second moment, population part",
    "second_moment_coh": "second moment, coherence part",
    "second_moment_mll": "second moment (MLL)",
    "second_moment_tpm": "second moment (TPM)",
    "second_moment_mll_minus_epm": "second moment gap, MLL - EPM",
    "first_moment_epm": "first moment (EPM)",
    "first_moment_tpm": "first moment (TPM)",
    "entropy_epm": "joint entropy (EPM)",
    "entropy_tpm": "joint entropy (TPM)",
    "entropy_mll": "joint entropy (MLL)",
    "entropy_epm_minus_tpm": "entropy gap, EPM - TPM",
    "entropy_epm_minus_mll": "entropy gap, EPM - MLL",
    "entropy_epm_dephased_minus_tpm": "entropy gap, dephased EPM - TPM",
    "mutual_info_mll_epm": "mutual information, MLL vs EPM",
}


def render_figures(result, out_dir: str) -> list[str]:
    """Render one PNG per time-resolved quantity; returns the written paths."""
    paths = []
    times = result.times
    for name in sorted(result.values):
        table = result.values[name]
        if table.shape[0] < 2:
            continue
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.fill_between(
            times,
            table.min(axis=1),
            table.max(axis=1),
            alpha=0.25,
            color="tab:blue",
            linewidth=0,
            label="ensemble envelope",
        )
        ax.plot(times, table.mean(axis=1), color="tab:blue", lw=1.2, label="ensemble mean")
        i_min = result.extremes.min_index
        i_max = result.extremes.max_index
        ax.plot(
            times, table[:, i_min], color="tab:green", lw=1.4, label="lowest-coherence state"
        )
        ax.plot(
            times, table[:, i_max], color="tab:red", lw=1.4, label="highest-coherence state"
        )
        ax.set_xlabel("time")
        ax.set_ylabel(_LABELS.get(name, name))
        ax.set_title(f"{result.config.experiment}: {name}")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{name}.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
