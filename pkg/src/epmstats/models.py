"""Concrete model builders: the driven three-level thermal machine used in
the figures, plus small qubit fixtures for tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import DriveTerm, LindbladModel
from .errors import InvalidParams

OCCUPATION_PAPER = "paper"
OCCUPATION_BOSE = "bose"


def default_drive_g(t: float) -> float:
    return 1.5 * math.sin(t) ** 2


def default_drive_f(t: float) -> float:
    return 1.5 * (1.0 - math.sin(2.0 * t) ** 2)


@dataclass(frozen=True)
class ThreeLevelParams:
    """Parameters of the three-level machine.

    Levels are ordered (ground, A, B) with energies (0, omega1, 3*omega1);
    the level gaps seen by the three baths are omega_r = r*omega1.

    The default occupation convention is n_r = 1/(exp(beta_r omega_r) + 1);
    with that choice the Gibbs state is *not* stationary for equal
    temperatures. The conventional Bose-Einstein occupation
    1/(exp(beta omega) - 1), which does make Gibbs a fixed point of the
    undriven equal-temperature dynamics, is available via
    occupation="bose".
    """

    omega1: float = 1.0
    gamma: float = 0.1
    betas: tuple[float, float, float] = (3.0, 1.0, 2.0)
    include_drive: bool = True
    drive_g: Callable[[float], float] = default_drive_g
    drive_f: Callable[[float], float] = default_drive_f
    occupation: str = OCCUPATION_PAPER

    def __post_init__(self):
        if self.omega1 <= 0 or self.gamma <= 0:
            raise InvalidParams("omega1 and gamma must be positive")
        if len(self.betas) != 3 or any(b <= 0 for b in self.betas):
            raise InvalidParams("betas must be three positive numbers")
        if self.occupation not in (OCCUPATION_PAPER, OCCUPATION_BOSE):
            raise InvalidParams(f"unknown occupation convention {self.occupation!r}")

    @property
    def omegas(self) -> tuple[float, float, float]:
        return (self.omega1, 2 * self.omega1, 3 * self.omega1)

    def occupation_number(self, r: int) -> float:
        """Thermal occupation of bath r (1-based) at its transition frequency."""
        x = math.exp(self.betas[r - 1] * self.omegas[r - 1])
        if self.occupation == OCCUPATION_PAPER:
            return 1.0 / (x + 1.0)
        return 1.0 / (x - 1.0)


def _unit(i: int, j: int, d: int = 3) -> np.ndarray:
    M = np.zeros((d, d), dtype=complex)
    M[i, j] = 1.0
    return M


def build_three_level(params: ThreeLevelParams) -> LindbladModel:
    """Assemble the Lindblad model in the ordered basis (g, A, B)."""
    g_idx, a_idx, b_idx = 0, 1, 2
    w1, w2, w3 = params.omegas
    h_free = np.diag([0.0, w1, w3]).astype(complex)

    gamma = params.gamma
    n1 = params.occupation_number(1)
    n2 = params.occupation_number(2)
    n3 = params.occupation_number(3)
    rates = [
        (g_idx, a_idx, gamma * (n1 + 1.0)),  # eta_gA: decay A -> g
        (a_idx, g_idx, gamma * n1),          # eta_Ag
        (a_idx, b_idx, gamma * (n2 + 1.0)),  # eta_AB: decay B -> A
        (b_idx, a_idx, gamma * n2),          # eta_BA
        (g_idx, b_idx, gamma * (n3 + 1.0)),  # eta_gB: decay B -> g
        (b_idx, g_idx, gamma * n3),          # eta_Bg
    ]
    jumps = tuple(math.sqrt(eta) * _unit(i, j) for i, j, eta in rates)

    drive = ()
    if params.include_drive:
        op_g = _unit(g_idx, b_idx) + _unit(b_idx, g_idx)
        op_f = _unit(a_idx, b_idx) + _unit(b_idx, a_idx)
        drive = (
            DriveTerm(operator=op_g, amplitude=params.drive_g),
            DriveTerm(operator=op_f, amplitude=params.drive_f),
        )
    return LindbladModel(h_free=h_free, jumps=jumps, drive=drive)


def qubit_dephasing_model(gamma: float, omega: float = 1.0) -> LindbladModel:
    """Qubit with H = diag(0, omega) and a pure-dephasing jump sqrt(gamma) sigma_z."""
    sz = np.diag([1.0, -1.0]).astype(complex)
    return LindbladModel(
        h_free=np.diag([0.0, omega]).astype(complex),
        jumps=(math.sqrt(gamma) * sz,),
    )


def qubit_driven_unitary_model(omega: float = 1.0, amp: float = 0.8) -> LindbladModel:
    """Closed qubit with a smooth transverse drive (no jumps: unitary channel)."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return LindbladModel(
        h_free=np.diag([0.0, omega]).astype(complex),
        jumps=(),
        drive=(DriveTerm(operator=sx, amplitude=lambda t: amp * math.sin(t) ** 2),),
    )
