"""Seedable Hilbert-Schmidt-uniform sampling of density matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySample
from .operators import DensityMatrix, EnergyBasis, coherence_l1

# recorded in experiment manifests so runs can be reproduced elsewhere
PRNG_ID = "numpy:PCG64/standard_normal"


@dataclass(frozen=True)
class SamplerConfig:
    dim: int
    count: int
    seed: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")


def sample_density_hs(config: SamplerConfig) -> list[DensityMatrix]:
    """Draw states rho = G G^dag / Tr(G G^dag) with square complex Ginibre G.

    This is the Hilbert-Schmidt ensemble, the standard uniform measure over
    density matrices. The stream is fully determined by the seed.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    d = config.dim
    out = []
    for _ in range(config.count):
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        M = G @ G.conj().T
        M /= np.trace(M).real
        out.append(DensityMatrix.from_matrix(M, tol=1e-10))
    return out


@dataclass(frozen=True)
class CoherenceExtremes:
    min_state: DensityMatrix
    max_state: DensityMatrix
    min_index: int
    max_index: int
    min_value: float
    max_value: float


def coherence_extremes(states: Sequence[DensityMatrix], basis: EnergyBasis) -> CoherenceExtremes:
    """Locate the lowest- and highest-coherence states of a sample.

    Ties break toward the earliest sample index.
    """
    if not states:
        raise EmptySample("no states to rank")
    values = [coherence_l1(s, basis) for s in states]
    i_min = int(np.argmin(values))
    i_max = int(np.argmax(values))
    return CoherenceExtremes(
        min_state=states[i_min],
        max_state=states[i_max],
        min_index=i_min,
        max_index=i_max,
        min_value=values[i_min],
        max_value=values[i_max],
    )
