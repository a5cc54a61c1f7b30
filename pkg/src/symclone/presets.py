"""Named Hamiltonians and initial states used by the command line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import HybridEnsemble, hybrid_point
from .hamiltonians import (
    HamiltonianSpec,
    MeanFieldHybrid,
    QuadraticOperator,
    coordinate,
    harmonic,
    sum_of_terms,
)
from .phase_space import PAULI_X, PAULI_Z, PhasePoint, PhaseSpace, to_canonical

NONLINEAR_STRENGTH = 0.3
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
UP = np.array([1.0, 0.0], dtype=complex)


def linear_sigma_z() -> QuadraticOperator:
    return QuadraticOperator(PAULI_Z)


def weinberg_quadratic(strength: float = NONLINEAR_STRENGTH):
    """``<sigma_z> + strength <sigma_x>^2``."""
    return sum_of_terms((1.0, [PAULI_Z], [1]), (strength, [PAULI_X], [2]))


def meanfield_oscillator() -> MeanFieldHybrid:
    """``(p^2 + q^2)/2 + <sigma_z> + q <sigma_x>``."""
    return MeanFieldHybrid(harmonic(1), PAULI_Z, ((coordinate(1, 0), PAULI_X),))


@dataclass(frozen=True)
class Preset:
    name: str
    hamiltonian: HamiltonianSpec
    initial: PhasePoint


def _presets() -> dict[str, Preset]:
    q2 = PhaseSpace.quantum(2)
    mf = meanfield_oscillator()
    return {
        "linear-sigma-z": Preset("linear-sigma-z", linear_sigma_z(), to_canonical(PLUS, q2)),
        "weinberg-quadratic": Preset("weinberg-quadratic", weinberg_quadratic(), to_canonical(PLUS, q2)),
        "meanfield-oscillator": Preset("meanfield-oscillator", mf, hybrid_point(mf, [1.0, 0.0], UP)),
    }


PRESET_NAMES = ("linear-sigma-z", "weinberg-quadratic", "meanfield-oscillator")


def get_preset(name: str) -> Preset:
    presets = _presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return presets[name]


def classical_ensemble(kind: str, psi=UP, spread: float = 1.0) -> HybridEnsemble:
    """Mean-field oscillator ensemble with a pure quantum state.

    ``delta`` puts all weight on ``(q, p) = (spread, 0)``; ``two-point``
    splits it equally between ``q = +spread`` and ``q = -spread``.
    """
    mf = meanfield_oscillator()
    if kind == "delta":
        return HybridEnsemble.delta(hybrid_point(mf, [spread, 0.0], psi))
    if kind == "two-point":
        return HybridEnsemble(((0.5, hybrid_point(mf, [spread, 0.0], psi)),
                               (0.5, hybrid_point(mf, [-spread, 0.0], psi))))
    raise ValueError(f"unknown classical distribution {kind!r}")
