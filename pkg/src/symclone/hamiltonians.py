"""Hamilton functions on quantum and hybrid phase spaces.

Three families are supported:

* :class:`QuadraticOperator`, ``H(X) = <psi|H|psi>`` (linear Schrodinger flow);
* :class:`ExpectationPolynomial`, ``H(X) = sum_k c_k prod_m <A_km>^e_km``
  (nonlinear, phase invariant);
* :class:`MeanFieldHybrid`, ``H = H_c(q, p) + <H_q> + <V(q, p)>`` with
  ``V(q, p) = sum_l f_l(q, p) B_l``.

All of them lower to :class:`KernelHamiltonian`, one polynomial in the
classical coordinates and the quantum expectations, which is what the
integration kernels evaluate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .phase_space import HermitianOperator, PhasePoint, PhaseSpace, compose_hybrid


class KernelHamiltonian(NamedTuple):
    """``H = sum_t coef[t] prod_i z_i^cpow[t, i] prod_k a_k^qpow[t, k]``.

    ``z = (q_1..q_n, p_1..p_n)`` and ``a_k = <psi|ops[k]|psi>``.
    """

    n_classical: int
    n_quantum: int
    ops: np.ndarray
    coef: np.ndarray
    cpow: np.ndarray
    qpow: np.ndarray


def _kernel(n_classical, n_quantum, ops, terms) -> KernelHamiltonian:
    ops = np.ascontiguousarray(np.array(ops, dtype=np.complex128).reshape(-1, n_quantum, n_quantum))
    coef = np.array([t[0] for t in terms], dtype=np.float64)
    cpow = np.zeros((len(terms), 2 * n_classical), dtype=np.int64)
    qpow = np.zeros((len(terms), ops.shape[0]), dtype=np.int64)
    for i, (_, cp, qp) in enumerate(terms):
        for var, e in cp.items():
            cpow[i, var] += e
        for k, e in qp.items():
            qpow[i, k] += e
    return KernelHamiltonian(n_classical, n_quantum, ops, coef, np.ascontiguousarray(cpow),
                             np.ascontiguousarray(qpow))


@dataclass(frozen=True)
class ClassicalPolynomial:
    """Polynomial in ``(q_1..q_n, p_1..p_n)`` given as ``(coefficient, exponents)`` terms."""

    n: int
    terms: tuple[tuple[float, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        for _, exps in self.terms:
            if len(exps) != 2 * self.n or min(exps, default=0) < 0:
                raise ValueError(f"exponent tuple {exps} does not fit {self.n} degrees of freedom")

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(sum(c * np.prod(z ** np.array(e)) for c, e in self.terms))

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        g = np.zeros(2 * self.n)
        for c, e in self.terms:
            e = np.array(e)
            for i in np.nonzero(e)[0]:
                d = e.copy()
                d[i] -= 1
                g[i] += c * e[i] * np.prod(z ** d)
        return g


def harmonic(n: int = 1, omega: float = 1.0) -> ClassicalPolynomial:
    """``sum_i (p_i^2 + omega^2 q_i^2) / 2``."""
    terms = []
    for i in range(n):
        q = [0] * (2 * n)
        q[i] = 2
        p = [0] * (2 * n)
        p[n + i] = 2
        terms += [(0.5 * omega**2, tuple(q)), (0.5, tuple(p))]
    return ClassicalPolynomial(n, tuple(terms))


def coordinate(n: int, index: int, scale: float = 1.0) -> ClassicalPolynomial:
    """The single coordinate ``z_index`` (``q_i`` for ``index < n``, else ``p_i``)."""
    e = [0] * (2 * n)
    e[index] = 1
    return ClassicalPolynomial(n, ((scale, tuple(e)),))


@dataclass(frozen=True)
class QuadraticOperator:
    op: HermitianOperator

    def space(self, hbar: float = 1.0) -> PhaseSpace:
        return PhaseSpace.quantum(self.op.dim, hbar)

    def compile(self) -> KernelHamiltonian:
        return _kernel(0, self.op.dim, [self.op.entries], [(1.0, {}, {0: 1})])


@dataclass(frozen=True)
class ExpectationTerm:
    coefficient: float
    factors: tuple[HermitianOperator, ...]
    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.factors) != len(self.exponents):
            raise ValueError("need one exponent per factor")
        if any(e < 1 for e in self.exponents):
            raise ValueError("exponents must be positive integers")


@dataclass(frozen=True)
class ExpectationPolynomial:
    terms: tuple[ExpectationTerm, ...]

    def __post_init__(self):
        dims = {f.dim for t in self.terms for f in t.factors}
        if len(dims) != 1:
            raise ValueError("all factors must share one dimension")

    @property
    def dim(self) -> int:
        return self.terms[0].factors[0].dim

    def space(self, hbar: float = 1.0) -> PhaseSpace:
        return PhaseSpace.quantum(self.dim, hbar)

    def compile(self) -> KernelHamiltonian:
        ops, terms = [], []
        for t in self.terms:
            qp = {}
            for f, e in zip(t.factors, t.exponents):
                ops.append(f.entries)
                qp[len(ops) - 1] = e
            terms.append((t.coefficient, {}, qp))
        return _kernel(0, self.dim, ops, terms)


@dataclass(frozen=True)
class MeanFieldHybrid:
    """``H_c(q, p) + <H_q> + sum_l f_l(q, p) <B_l>``."""

    classical: ClassicalPolynomial
    quantum: HermitianOperator
    coupling: tuple[tuple[ClassicalPolynomial, HermitianOperator], ...] = ()

    def __post_init__(self):
        for f, b in self.coupling:
            if f.n != self.classical.n or b.dim != self.quantum.dim:
                raise ValueError("coupling term does not match the subsystem dimensions")

    def space(self, hbar: float = 1.0) -> PhaseSpace:
        return compose_hybrid(PhaseSpace.classical(self.classical.n, hbar),
                              PhaseSpace.quantum(self.quantum.dim, hbar))

    def interaction(self, z) -> HermitianOperator:
        m = np.zeros_like(self.quantum.entries)
        for f, b in self.coupling:
            m = m + f(z) * b.entries
        return HermitianOperator(m)

    def interaction_gradient(self, z) -> list[HermitianOperator]:
        """``dV/dz_i`` for every classical coordinate."""
        grads = [np.zeros_like(self.quantum.entries) for _ in range(2 * self.classical.n)]
        for f, b in self.coupling:
            g = f.gradient(z)
            for i in range(len(grads)):
                grads[i] = grads[i] + g[i] * b.entries
        return [HermitianOperator(g) for g in grads]

    def effective_operator(self, z) -> HermitianOperator:
        """Generator ``H_q + V(q, p)`` of the quantum sector along a classical path."""
        return self.quantum + self.interaction(z)

    def compile(self) -> KernelHamiltonian:
        n = self.classical.n
        ops = [self.quantum.entries] + [b.entries for _, b in self.coupling]
        terms = [(c, dict(enumerate(e)), {}) for c, e in self.classical.terms]
        terms.append((1.0, {}, {0: 1}))
        for l, (f, _) in enumerate(self.coupling, start=1):
            terms += [(c, dict(enumerate(e)), {l: 1}) for c, e in f.terms]
        return _kernel(n, self.quantum.dim, ops, terms)


HamiltonianSpec = Union[QuadraticOperator, ExpectationPolynomial, MeanFieldHybrid]


def check_space(h: HamiltonianSpec, point: PhasePoint) -> None:
    expected = h.space(point.space.hbar)
    if point.space != expected:
        raise ValueError(f"Hamiltonian acts on {expected}, point lives on {point.space}")


def sum_of_terms(*terms: Sequence) -> ExpectationPolynomial:
    """Build an :class:`ExpectationPolynomial` from ``(coef, [ops], [exponents])`` triples."""
    return ExpectationPolynomial(tuple(ExpectationTerm(float(c), tuple(f), tuple(e)) for c, f, e in terms))
