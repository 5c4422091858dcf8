"""Experiment configuration: YAML parsing, validation and echoing.

The configuration format is YAML. Validation aggregates every problem as a
(key-path, message) pair instead of stopping at the first; unknown keys are
rejected. All defaults are materialized, so the effective configuration
echoed next to the results round-trips: parse -> serialize -> parse is the
identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .dynamics import DriveTerm, LindbladModel
from .errors import ConfigError
from .models import ThreeLevelParams, build_three_level

EXPERIMENTS = ("fig2a", "fig2b", "figS1", "figS2", "sweep", "custom")

# stable identifiers for CSV rows and the sweep/custom quantity selection
QUANTITIES = (
    "rel_coh_second_moment",
    "second_moment_epm",
    "second_moment_pop",
    "second_moment_coh",
    "second_moment_mll",
    "second_moment_tpm",
    "second_moment_mll_minus_epm",
    "first_moment_epm",
    "first_moment_tpm",
    "entropy_epm",
    "entropy_tpm",
    "entropy_mll",
    "entropy_epm_minus_tpm",
    "entropy_epm_minus_mll",
    "entropy_epm_dephased_minus_tpm",
    "mutual_info_mll_epm",
    "coherence_l1",
)

_DEFAULT_COUNTS = {"fig2a": 1000, "fig2b": 1000, "figS1": 100, "figS2": 100}

_DEFAULT_QUANTITIES = {
    "fig2a": ["rel_coh_second_moment"],
    "fig2b": ["entropy_epm_dephased_minus_tpm", "entropy_epm_minus_tpm"],
    "figS1": ["second_moment_mll_minus_epm", "second_moment_coh"],
    "figS2": ["entropy_epm_minus_mll", "entropy_epm_minus_tpm"],
}


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "three_level"
    # three_level parameters
    omega1: float = 1.0
    gamma: float = 0.1
    betas: tuple[float, float, float] = (3.0, 1.0, 2.0)
    include_drive: bool = True
    drive_amplitude: float = 1.5
    occupation: str = "paper"
    # generic parameters
    dim: Optional[int] = None
    hamiltonian: Optional[tuple] = None
    jumps: tuple = ()
    drive: tuple = ()


@dataclass(frozen=True)
class TimeConfig:
    t_i: float = 0.0
    t_f: float = 50.0
    n_snapshots: int = 500
    dt: float = 1e-3


@dataclass(frozen=True)
class EnsembleConfig:
    dim: int = 3
    count: int = 100
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelConfig
    time: TimeConfig
    ensemble: EnsembleConfig
    protocols: tuple[str, ...] = ("EPM", "TPM", "MLL")
    quantities: tuple[str, ...] = ()
    beta_reference: Optional[float] = None
    output_dir: str = "out"
    merge_tol: float = 1e-9
    degeneracy_tol: float = 1e-9
    validation_tol: float = 1e-8

    def snapshot_times(self) -> tuple[float, ...]:
        return tuple(np.linspace(self.time.t_i, self.time.t_f, self.time.n_snapshots))

    def to_dict(self) -> dict:
        m = self.model
        model: dict = {"kind": m.kind}
        if m.kind == "three_level":
            model.update(
                omega1=m.omega1,
                gamma=m.gamma,
                betas=list(m.betas),
                include_drive=m.include_drive,
                drive_amplitude=m.drive_amplitude,
                occupation=m.occupation,
            )
        else:
            model.update(
                dim=m.dim,
                hamiltonian=_nested_list(m.hamiltonian),
                jumps=[_nested_list(j) for j in m.jumps],
                drive=[
                    {
                        "operator": _nested_list(d["operator"]),
                        "times": list(d["times"]),
                        "values": list(d["values"]),
                    }
                    for d in m.drive
                ],
            )
        return {
            "experiment": self.experiment,
            "model": model,
            "time": {
                "t_i": self.time.t_i,
                "t_f": self.time.t_f,
                "n_snapshots": self.time.n_snapshots,
                "dt": self.time.dt,
            },
            "ensemble": {
                "dim": self.ensemble.dim,
                "count": self.ensemble.count,
                "seed": self.ensemble.seed,
            },
            "protocols": list(self.protocols),
            "quantities": list(self.quantities),
            "beta_reference": self.beta_reference,
            "output_dir": self.output_dir,
            "merge_tol": self.merge_tol,
            "degeneracy_tol": self.degeneracy_tol,
            "validation_tol": self.validation_tol,
        }

    def serialize(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def build_model(self) -> LindbladModel:
        m = self.model
        if m.kind == "three_level":
            amp = m.drive_amplitude
            params = ThreeLevelParams(
                omega1=m.omega1,
                gamma=m.gamma,
                betas=tuple(m.betas),
                include_drive=m.include_drive,
                drive_g=lambda t: amp * math.sin(t) ** 2,
                drive_f=lambda t: amp * (1.0 - math.sin(2.0 * t) ** 2),
                occupation=m.occupation,
            )
            return build_three_level(params)
        H = _to_complex_matrix(m.hamiltonian)
        jumps = tuple(_to_complex_matrix(j) for j in m.jumps)
        drive = []
        for term in m.drive:
            op = _to_complex_matrix(term["operator"])
            ts = np.asarray(term["times"], dtype=float)
            vs = np.asarray(term["values"], dtype=float)
            drive.append(
                DriveTerm(operator=op, amplitude=lambda t, ts=ts, vs=vs: float(np.interp(t, ts, vs)))
            )
        return LindbladModel(h_free=H, jumps=jumps, drive=tuple(drive))


def _nested_list(M):
    """Serialize a complex matrix as nested lists; [re, im] pairs when needed."""
    out = []
    for row in M:
        line = []
        for z in row:
            z = complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z)
            line.append(z.real if z.imag == 0 else [z.real, z.imag])
        out.append(line)
    return out


def _to_complex_matrix(entries) -> np.ndarray:
    rows = []
    for row in entries:
        line = []
        for z in row:
            if isinstance(z, (list, tuple)):
                line.append(complex(z[0], z[1]))
            else:
                line.append(complex(z))
        rows.append(line)
    return np.asarray(rows, dtype=complex)


class _Validator:
    def __init__(self):
        self.issues: list[tuple[str, str]] = []

    def error(self, path, msg):
        self.issues.append((path, msg))

    def mapping(self, raw, path, allowed):
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            self.error(path or "<root>", "expected a mapping")
            return {}
        for key in raw:
            if key not in allowed:
                self.error(f"{path}.{key}" if path else str(key), "unknown key")
        return raw

    def number(self, raw, path, default, positive=False, nonneg=False):
        if raw is None:
            return default
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            self.error(path, "expected a number")
            return default
        v = float(raw)
        if positive and v <= 0:
            self.error(path, "must be positive")
        if nonneg and v < 0:
            self.error(path, "must be nonnegative")
        return v

    def integer(self, raw, path, default, minimum=None):
        if raw is None:
            return default
        if not isinstance(raw, int) or isinstance(raw, bool):
            self.error(path, "expected an integer")
            return default
        if minimum is not None and raw < minimum:
            self.error(path, f"must be >= {minimum}")
        return raw


def validate_config(raw) -> ExperimentConfig:
    """Validate a YAML string or a parsed mapping; raise ConfigError with an
    aggregated issue list on failure."""
    if isinstance(raw, str):
        try:
            raw = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError([("<document>", f"invalid YAML: {exc}")]) from exc
    if raw is None:
        raise ConfigError([("experiment", "missing (empty configuration)")])

    v = _Validator()
    top = v.mapping(
        raw,
        "",
        {
            "experiment",
            "model",
            "time",
            "ensemble",
            "protocols",
            "quantities",
            "beta_reference",
            "output_dir",
            "merge_tol",
            "degeneracy_tol",
            "validation_tol",
        },
    )

    experiment = top.get("experiment")
    if experiment is None:
        v.error("experiment", "missing")
        experiment = "custom"
    elif experiment not in EXPERIMENTS:
        v.error("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        experiment = "custom"

    undriven = experiment in ("figS1", "figS2")
    mraw = v.mapping(
        top.get("model"),
        "model",
        {
            "kind",
            "omega1",
            "gamma",
            "betas",
            "include_drive",
            "drive_amplitude",
            "occupation",
            "dim",
            "hamiltonian",
            "jumps",
            "drive",
        },
    )
    kind = mraw.get("kind", "three_level")
    if kind not in ("three_level", "generic"):
        v.error("model.kind", "must be three_level or generic")
        kind = "three_level"
    if kind == "three_level":
        betas = mraw.get("betas", [3.0, 1.0, 2.0])
        if not (isinstance(betas, (list, tuple)) and len(betas) == 3):
            v.error("model.betas", "expected three numbers")
            betas = [3.0, 1.0, 2.0]
        occupation = mraw.get("occupation", "paper")
        if occupation not in ("paper", "bose"):
            v.error("model.occupation", "must be paper or bose")
            occupation = "paper"
        model = ModelConfig(
            kind=kind,
            omega1=v.number(mraw.get("omega1"), "model.omega1", 1.0, positive=True),
            gamma=v.number(mraw.get("gamma"), "model.gamma", 0.1, positive=True),
            betas=tuple(float(b) for b in betas),
            include_drive=bool(mraw.get("include_drive", not undriven)),
            drive_amplitude=v.number(mraw.get("drive_amplitude"), "model.drive_amplitude", 1.5),
            occupation=occupation,
        )
        model_dim = 3
    else:
        dim = v.integer(mraw.get("dim"), "model.dim", None, minimum=1)
        ham = mraw.get("hamiltonian")
        if dim is None:
            v.error("model.dim", "required for generic models")
            dim = 2
        if ham is None:
            v.error("model.hamiltonian", "required for generic models")
            ham = [[0.0] * dim for _ in range(dim)]
        model = ModelConfig(
            kind=kind,
            dim=dim,
            hamiltonian=tuple(tuple(r) for r in ham),
            jumps=tuple(tuple(tuple(r) for r in j) for j in mraw.get("jumps", [])),
            drive=tuple(mraw.get("drive", [])),
        )
        model_dim = dim

    traw = v.mapping(top.get("time"), "time", {"t_i", "t_f", "n_snapshots", "dt"})
    time = TimeConfig(
        t_i=v.number(traw.get("t_i"), "time.t_i", 0.0),
        t_f=v.number(traw.get("t_f"), "time.t_f", 50.0),
        n_snapshots=v.integer(traw.get("n_snapshots"), "time.n_snapshots", 500, minimum=2),
        dt=v.number(traw.get("dt"), "time.dt", 1e-3, positive=True),
    )
    if time.t_f < time.t_i:
        v.error("time.t_f", "must be >= time.t_i")

    eraw = v.mapping(top.get("ensemble"), "ensemble", {"dim", "count", "seed"})
    ensemble = EnsembleConfig(
        dim=v.integer(eraw.get("dim"), "ensemble.dim", model_dim, minimum=1),
        count=v.integer(
            eraw.get("count"), "ensemble.count", _DEFAULT_COUNTS.get(experiment, 100), minimum=1
        ),
        seed=v.integer(eraw.get("seed"), "ensemble.seed", 0),
    )
    if ensemble.dim != model_dim:
        v.error("ensemble.dim", f"must equal the model dimension {model_dim}")

    protocols = top.get("protocols", ["EPM", "TPM", "MLL"])
    if not isinstance(protocols, list) or not protocols:
        v.error("protocols", "expected a non-empty list")
        protocols = ["EPM", "TPM", "MLL"]
    for p in protocols:
        if p not in ("EPM", "TPM", "MLL"):
            v.error("protocols", f"unknown protocol {p!r}")

    quantities = top.get("quantities", _DEFAULT_QUANTITIES.get(experiment, []))
    if not isinstance(quantities, list):
        v.error("quantities", "expected a list")
        quantities = []
    for q in quantities:
        if q not in QUANTITIES:
            v.error("quantities", f"unknown quantity {q!r}")
    if experiment in ("sweep", "custom") and not quantities:
        v.error("quantities", "required for sweep/custom experiments")

    beta = top.get("beta_reference")
    if beta is not None:
        beta = v.number(beta, "beta_reference", None, positive=True)

    output_dir = top.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        v.error("output_dir", "expected a non-empty string")
        output_dir = "out"

    cfg = ExperimentConfig(
        experiment=experiment,
        model=model,
        time=time,
        ensemble=ensemble,
        protocols=tuple(protocols),
        quantities=tuple(quantities),
        beta_reference=beta,
        output_dir=output_dir,
        merge_tol=v.number(top.get("merge_tol"), "merge_tol", 1e-9, positive=True),
        degeneracy_tol=v.number(top.get("degeneracy_tol"), "degeneracy_tol", 1e-9, positive=True),
        validation_tol=v.number(top.get("validation_tol"), "validation_tol", 1e-8, positive=True),
    )
    if v.issues:
        raise ConfigError(v.issues)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return validate_config(fh.read())
