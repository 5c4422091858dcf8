"""Energy-change fluctuation statistics for small open quantum systems.

Library layers:

- operators: dense Hermitian linear algebra, energy bases, state validation,
  dephasing split and the coherence measure;
- dynamics: fixed-step Lindblad propagation and superoperator extraction;
- protocols: EPM / TPM / MLL joint distributions and the merged
  energy-change distribution;
- stats: moments, entropies, characteristic functions, fluctuation-relation
  report;
- models / sampling: the three-level thermal machine, qubit fixtures and
  seeded Hilbert-Schmidt state sampling;
- experiments / cli: batch runs that write CSV results, manifests and
  rendered figures.
"""

from .operators import (
    DensityMatrix,
    EnergyBasis,
    Eigensystem,
    coherence_l1,
    dephase_split,
    eigh,
    energy_basis,
    matrix_function_hermitian,
    validate_density,
)
from .dynamics import (
    DriveTerm,
    LindbladModel,
    PropagationConfig,
    channel_from_model,
    channel_from_superoperator,
    fixed_point_residual,
    generator_apply,
    identity_channel,
    propagate,
    superoperator_matrix,
    superoperator_snapshots,
    unitary_channel,
)
from .protocols import (
    EPM,
    MLL,
    TPM,
    EnergyChangeDistribution,
    EpmSplit,
    JointDistribution,
    energy_change_distribution,
    epm_joint,
    epm_split,
    mll_joint,
    protocol_joint,
    total_variation,
    tpm_joint,
)
from .stats import (
    JarzynskiReport,
    ThermalReference,
    characteristic_function,
    characteristic_split,
    first_moment_closed_form,
    jarzynski_epm,
    mll_second_moment_closed_form,
    moment,
    mutual_information,
    second_moment_closed_form,
    shannon_entropy,
    thermal_reference,
    tpm_first_moment_closed_form,
    tpm_second_moment_closed_form,
)
from .models import (
    ThreeLevelParams,
    build_three_level,
    qubit_dephasing_model,
    qubit_driven_unitary_model,
)
from .sampling import PRNG_ID, SamplerConfig, coherence_extremes, sample_density_hs

__version__ = "0.1.0"

# these two pull in __version__, so they come after it
from .config import (  # noqa: E402
    EXPERIMENTS,
    QUANTITIES,
    ExperimentConfig,
    load_config,
    validate_config,
)
from .experiments import ExperimentResult, compute_quantities, run_experiment  # noqa: E402
