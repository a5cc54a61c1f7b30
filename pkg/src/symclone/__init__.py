"""Symplectic-area tests of cloning maps and Hamiltonian flows on quantum and hybrid phase spaces."""

__version__ = "0.1.0"

from .phase_space import (  # noqa: E402
    HermitianOperator,
    PhasePoint,
    PhaseSpace,
    TangentVector,
    compose_hybrid,
    compose_quantum,
    expectation,
    from_canonical,
    poisson_bracket,
    symplectic_form,
    to_canonical,
)
from .maps import MAPS, Method, area_ratio, pushforward, sweep_ratios  # noqa: E402
from .dynamics import (  # noqa: E402
    HybridEnsemble,
    coevolve_overlap,
    density_matrix,
    integrate,
    purity,
)

__all__ = [
    "HermitianOperator", "PhasePoint", "PhaseSpace", "TangentVector", "compose_hybrid",
    "compose_quantum", "expectation", "from_canonical", "poisson_bracket", "symplectic_form",
    "to_canonical", "MAPS", "Method", "area_ratio", "pushforward", "sweep_ratios",
    "HybridEnsemble", "coevolve_overlap", "density_matrix", "integrate", "purity",
]
