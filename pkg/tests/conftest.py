import numpy as np
import pytest

from epmstats import (
    PropagationConfig,
    SamplerConfig,
    ThreeLevelParams,
    build_three_level,
    channel_from_superoperator,
    sample_density_hs,
    superoperator_snapshots,
)


def random_hermitian(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (A + A.conj().T) / 2


@pytest.fixture(scope="session")
def driven_model():
    return build_three_level(ThreeLevelParams())


@pytest.fixture(scope="session")
def driven_snapshots(driven_model):
    """Superoperators of the driven machine on a [0, 10] grid, shared by all
    tests that need many (state, time) cases."""
    times = tuple(np.linspace(0.0, 10.0, 51))
    cfg = PropagationConfig(0.0, 10.0, dt=1e-3, snapshot_times=times)
    _, snaps = superoperator_snapshots(driven_model, cfg)
    return snaps


@pytest.fixture(scope="session")
def driven_channel_at(driven_snapshots):
    lookup = {t: channel_from_superoperator(S) for t, S in driven_snapshots}

    def get(t):
        return lookup[t]

    get.times = sorted(lookup)
    return get


@pytest.fixture(scope="session")
def undriven_equal_beta_model():
    return build_three_level(
        ThreeLevelParams(betas=(1.0, 1.0, 1.0), include_drive=False, occupation="bose")
    )


@pytest.fixture(scope="session")
def undriven_longtime_channel(undriven_equal_beta_model):
    """Channel of the equal-temperature undriven machine out to t = 200/gamma."""
    cfg = PropagationConfig(0.0, 2000.0, dt=0.02)
    S, _ = superoperator_snapshots(undriven_equal_beta_model, cfg)
    return channel_from_superoperator(S)


@pytest.fixture(scope="session")
def qutrit_states():
    return sample_density_hs(SamplerConfig(dim=3, count=100, seed=20260824))
