"""Hamiltonian flows, ensembles of hybrid systems and overlap diagnostics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ConvergenceError
from .hamiltonians import HamiltonianSpec, MeanFieldHybrid, check_space
from .kernel import get_backend
from .phase_space import (
    FD_STEP,
    HermitianOperator,
    PhasePoint,
    PhaseSpace,
    TangentVector,
    encode_slots,
    numerical_gradient,
    symplectic_form,
)

_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) * _W1

#: Substep fractions of each composition scheme.
SCHEMES = {
    "midpoint": (1.0,),
    # symmetric triple jump of midpoint steps: symplectic, order 4
    "yoshida4": (_W1, _W0, _W1),
}
WEIGHT_TOL = 1e-12


class EnsembleError(RuntimeError):
    def __init__(self, failures: dict[int, Exception]):
        self.failures = failures
        detail = "; ".join(f"member {i}: {e}" for i, e in sorted(failures.items()))
        super().__init__(f"{len(failures)} ensemble member(s) failed: {detail}")


def energy(h: HamiltonianSpec, point: PhasePoint, backend=None) -> float:
    check_space(h, point)
    return float(get_backend(backend).energy(h.compile(), point.space.hbar, point.coords))


def hamiltonian_vector_field(h: HamiltonianSpec, point: PhasePoint, method: str = "analytic",
                             backend=None) -> TangentVector:
    """``P grad H`` with the hybrid bracket weights.

    ``method="fd"`` differentiates the Hamilton function numerically instead
    of using the chain rule through expectations.
    """
    check_space(h, point)
    kh = h.compile()
    kern = get_backend(backend)
    hbar = point.space.hbar
    if method == "analytic":
        comp = kern.vector_field(kh, hbar, point.coords)
    elif method == "fd":
        grad = numerical_gradient(lambda x: kern.energy(kh, hbar, x), point.coords)
        comp = point.space.poisson_tensor() @ grad
    else:
        raise ValueError(f"unknown method {method!r}")
    return TangentVector(point, comp)


@dataclass(frozen=True, eq=False)
class Trajectory:
    space: PhaseSpace
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.energies)):
            raise ValueError("times, states and energies must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(self.space, s) for s in self.states]

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(self.space, self.states[-1])

    def amplitudes(self) -> np.ndarray:
        """Quantum amplitudes at every sample, shape ``(len, N)``."""
        xi, yi = self.space.quantum_indices()
        return (self.states[:, xi] + 1j * self.states[:, yi]) / self.space.coordinate_scale

    def norms(self) -> np.ndarray:
        xi, yi = self.space.quantum_indices()
        return np.sum(self.states[:, xi] ** 2 + self.states[:, yi] ** 2, axis=1)


def _steps(t_final: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    return int(round(t_final / dt))


def _run(kh, hbar, x0, t_final, dt, scheme, tol, max_iter, backend, n_passengers=0):
    n = _steps(t_final, dt)
    try:
        weights = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}") from None
    states, energies = get_backend(backend).integrate(
        kh, hbar, np.asarray(x0, dtype=float), dt, n, weights, tol, max_iter, n_passengers
    )
    return dt * np.arange(n + 1), states, energies


def integrate(h: HamiltonianSpec, x0: PhasePoint, t_final: float, dt: float, scheme: str = "yoshida4",
              tol: float = 1e-12, max_iter: int = 50, backend=None) -> Trajectory:
    """Integrate the Hamiltonian flow with implicit-midpoint based steps.

    ``t_final`` is rounded to the nearest multiple of ``dt``; the actual final
    time is ``trajectory.t_final``.  ``scheme="midpoint"`` takes plain
    implicit-midpoint steps (order 2); the default composes three of them
    into a fourth-order symmetric step.
    """
    check_space(h, x0)
    times, states, energies = _run(h.compile(), x0.space.hbar, x0.coords, t_final, dt,
                                   scheme, tol, max_iter, backend)
    return Trajectory(x0.space, times, states, energies)


def flow_map(h: HamiltonianSpec, t_final: float, dt: float, **kwargs):
    """Time-``t_final`` flow as a function on coordinate arrays."""
    kh = h.compile()
    scheme = kwargs.pop("scheme", "yoshida4")
    tol = kwargs.pop("tol", 1e-12)
    max_iter = kwargs.pop("max_iter", 50)
    backend = kwargs.pop("backend", None)
    hbar = kwargs.pop("hbar", 1.0)
    if kwargs:
        raise TypeError(f"unexpected arguments {sorted(kwargs)}")

    def phi(x):
        return _run(kh, hbar, x, t_final, dt, scheme, tol, max_iter, backend)[1][-1]

    return phi


def _flow_derivative(phi, x, d, step):
    """Richardson-refined central difference of ``phi`` along ``d``."""
    d1 = (phi(x + step * d) - phi(x - step * d)) / (2 * step)
    d2 = (phi(x + 2 * step * d) - phi(x - 2 * step * d)) / (4 * step)
    out = (4 * d1 - d2) / 3
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("non-finite finite differences")
    return out


def flow_symplectic_check(h: HamiltonianSpec, x0: PhasePoint, u: TangentVector, v: TangentVector,
                          t_final: float, dt: float, step: float = FD_STEP, **kwargs) -> float:
    """``omega(Phi_* u, Phi_* v) / omega(u, v)`` for the time-``t_final`` flow ``Phi``."""
    check_space(h, x0)
    for w in (u, v):
        if w.base.space != x0.space or not np.array_equal(w.base.coords, x0.coords):
            raise ValueError("tangent vectors must be based at x0")
    before = symplectic_form(u, v)
    if abs(before) <= 1e-8:
        raise ValueError(f"degenerate initial area {before:.3e}")
    phi = flow_map(h, t_final, dt, hbar=x0.space.hbar, **kwargs)
    end = PhasePoint(x0.space, phi(x0.coords))
    pu = TangentVector(end, _flow_derivative(phi, x0.coords, u.components, step))
    pv = TangentVector(end, _flow_derivative(phi, x0.coords, v.components, step))
    return symplectic_form(pu, pv) / before


def quadratic_flow_oracle(op: HermitianOperator, psi0, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i H t / hbar) psi0`` by matrix exponential."""
    return expm(-1j * op.entries * t / hbar) @ np.asarray(psi0, dtype=complex)


# -- ensembles -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HybridEnsemble:
    """Weighted particle approximation of a distribution on phase space."""

    members: tuple[tuple[float, PhasePoint], ...]

    def __post_init__(self):
        members = tuple((float(w), p) for w, p in self.members)
        if not members:
            raise ValueError("ensemble is empty")
        if any(w < 0 for w, _ in members):
            raise ValueError("weights must be non-negative")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if len({p.space for _, p in members}) != 1:
            raise ValueError("all members must share one phase space")
        object.__setattr__(self, "members", members)

    @property
    def space(self) -> PhaseSpace:
        return self.members[0][1].space

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.members])

    @classmethod
    def delta(cls, point: PhasePoint) -> "HybridEnsemble":
        return cls(((1.0, point),))


def ensemble_trajectories(h: HamiltonianSpec, ensemble: HybridEnsemble, t_final: float, dt: float,
                          jobs: int = 1, **kwargs) -> list[Trajectory]:
    """Integrate every member along its own characteristic."""

    def run(point):
        return integrate(h, point, t_final, dt, **kwargs)

    failures: dict[int, Exception] = {}
    results: list[Optional[Trajectory]] = [None] * len(ensemble.members)
    points = [p for _, p in ensemble.members]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run, p) for p in points]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except (ConvergenceError, ArithmeticError, ValueError) as exc:
                    failures[i] = exc
    else:
        for i, p in enumerate(points):
            try:
                results[i] = run(p)
            except (ConvergenceError, ArithmeticError, ValueError) as exc:
                failures[i] = exc
    if failures:
        raise EnsembleError(failures)
    return results


def evolve_ensemble(h: HamiltonianSpec, ensemble: HybridEnsemble, t_final: float, dt: float,
                    jobs: int = 1, **kwargs) -> HybridEnsemble:
    trajs = ensemble_trajectories(h, ensemble, t_final, dt, jobs, **kwargs)
    return HybridEnsemble(tuple((w, tr.final) for (w, _), tr in zip(ensemble.members, trajs)))


def _mixture(weights, amplitudes) -> np.ndarray:
    """``sum_k w_k |psi_k><psi_k| / <psi_k|psi_k>``; ``amplitudes`` has shape ``(K, N)``."""
    psi = np.asarray(amplitudes, dtype=complex)
    norms = np.sum(np.abs(psi) ** 2, axis=-1)
    rho = np.einsum("k,ki,kj->ij", np.asarray(weights) / norms, psi, psi.conj())
    return (rho + rho.conj().T) / 2


def density_matrix(ensemble: HybridEnsemble) -> HermitianOperator:
    """Density matrix of the quantum sector: weighted normalized projectors."""
    amps = [p.amplitudes() for _, p in ensemble.members]
    return HermitianOperator(_mixture(ensemble.weights, amps))


def purity(rho: HermitianOperator, trace_tol: float = 1e-8) -> float:
    """``tr(rho^2)`` of a unit-trace density matrix."""
    m = rho.entries
    tr = np.trace(m).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr!r} deviates from 1")
    return float(np.sum(np.abs(m) ** 2))


def purity_series(ensemble: HybridEnsemble, trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Purity of the quantum marginal at every common time sample."""
    amps = np.stack([tr.amplitudes() for tr in trajectories], axis=1)  # (time, member, N)
    w = ensemble.weights
    return np.array([purity(HermitianOperator(_mixture(w, a))) for a in amps])


# -- overlaps under mean-field dynamics -----------------------------------------------


def _hybrid_start(h: MeanFieldHybrid, c0, psi, hbar) -> np.ndarray:
    space = h.space(hbar)
    c0 = np.asarray(c0, dtype=float)
    if c0.shape != (2 * h.classical.n,):
        raise ValueError("classical point must be (q_1..q_n, p_1..p_n)")
    psi = np.asarray(psi, dtype=complex)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-9:
        raise ValueError("quantum states must be normalized")
    q = encode_slots(np.concatenate([np.zeros(h.classical.n), psi]), space).coords.copy()
    q[: 2 * h.classical.n] = c0
    return q


def _quantum_block(states, space: PhaseSpace, offset: int) -> np.ndarray:
    nq = space.n_quantum
    return (states[:, offset:offset + nq] + 1j * states[:, offset + nq:offset + 2 * nq]) / space.coordinate_scale


def coevolve_overlap(h: MeanFieldHybrid, psi_a, psi_b, c0, driver: str, t_final: float, dt: float,
                     hbar: float = 1.0, **kwargs) -> np.ndarray:
    """``|<psi_a(t)|psi_b(t)>|`` when both states follow one classical trajectory.

    The ``driver`` state (``"A"`` or ``"B"``) evolves self-consistently with
    the classical sector; the other is propagated by the same effective
    operator ``H_q + V(q(t), p(t))`` without back-reaction.
    """
    if driver not in ("A", "B"):
        raise ValueError("driver must be 'A' or 'B'")
    lead, follow = (psi_a, psi_b) if driver == "A" else (psi_b, psi_a)
    space = h.space(hbar)
    x0 = _hybrid_start(h, c0, lead, hbar)
    follow = np.asarray(follow, dtype=complex)
    if abs(np.vdot(follow, follow).real - 1.0) > 1e-9:
        raise ValueError("quantum states must be normalized")
    s = space.coordinate_scale
    x0 = np.concatenate([x0, s * follow.real, s * follow.imag])
    scheme = kwargs.pop("scheme", "yoshida4")
    _, states, _ = _run(h.compile(), hbar, x0, t_final, dt, scheme, kwargs.pop("tol", 1e-12),
                        kwargs.pop("max_iter", 50), kwargs.pop("backend", None), n_passengers=1)
    a = _quantum_block(states, space, 2 * space.n_classical)
    b = _quantum_block(states, space, space.dim)
    return np.abs(np.einsum("ti,ti->t", a.conj(), b))


def separate_run_overlap(h: MeanFieldHybrid, psi_a, psi_b, c0, t_final: float, dt: float,
                         hbar: float = 1.0, **kwargs) -> np.ndarray:
    """Cross-run overlap when each state drives its own classical trajectory."""
    space = h.space(hbar)
    runs = [integrate(h, PhasePoint(space, _hybrid_start(h, c0, psi, hbar)), t_final, dt, **kwargs)
            for psi in (psi_a, psi_b)]
    a, b = (r.amplitudes() for r in runs)
    return np.abs(np.einsum("ti,ti->t", a.conj(), b))


def hybrid_point(h: MeanFieldHybrid, classical, psi, hbar: float = 1.0) -> PhasePoint:
    """Point with classical coordinates ``(q, p)`` and quantum amplitudes ``psi``."""
    return PhasePoint(h.space(hbar), _hybrid_start(h, classical, psi, hbar))
