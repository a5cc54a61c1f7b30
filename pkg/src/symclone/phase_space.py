"""Real phase spaces of quantum, classical and hybrid systems.

A pure state of an ``N``-level quantum system is a point of ``R^{2N}`` with
canonical coordinates ``x_j = sqrt(2/hbar) Re c_j`` and ``y_j = sqrt(2/hbar) Im
c_j``.  Classical degrees of freedom carry ordinary ``(q, p)`` pairs.  Hybrid
spaces are Cartesian products, classical block first.

Every space is addressed through complex *slots*: quantum slot ``j`` pairs
``(x_j, y_j)``, classical slot ``i`` pairs ``(q_i, p_i)``.  The symplectic form
is a weighted sum over slots, with weight 1 on classical slots and ``1/hbar`` on
quantum slots, which makes the flow of a Hamilton function ``H`` exactly the
flow generated by the hybrid Poisson bracket.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

#: Absolute tolerance used for ``is_normalized`` checks.
NORM_TOL = 1e-9
#: Absolute tolerance for the Hermiticity check on operators.
HERMITIAN_TOL = 1e-12
#: Central finite-difference step for gradients of scalar fields.
FD_STEP = 1e-6


class Kind(enum.Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class PhaseSpace:
    """Descriptor of a phase space.

    Use the :meth:`quantum`, :meth:`classical` and :func:`compose_hybrid`
    constructors rather than filling the fields by hand.
    """

    kind: Kind
    n_classical: int = 0
    n_quantum: int = 0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.n_classical < 0 or self.n_quantum < 0:
            raise ValueError("dimensions must be non-negative")
        if self.kind is Kind.QUANTUM and (self.n_quantum < 1 or self.n_classical):
            raise ValueError("a quantum space needs n_quantum >= 1 and no classical part")
        if self.kind is Kind.CLASSICAL and (self.n_classical < 1 or self.n_quantum):
            raise ValueError("a classical space needs n_classical >= 1 and no quantum part")
        if self.kind is Kind.HYBRID and (self.n_classical < 1 or self.n_quantum < 1):
            raise ValueError("a hybrid space needs both a classical and a quantum part")

    @classmethod
    def quantum(cls, n: int, hbar: float = 1.0) -> "PhaseSpace":
        return cls(Kind.QUANTUM, n_quantum=n, hbar=hbar)

    @classmethod
    def classical(cls, n: int, hbar: float = 1.0) -> "PhaseSpace":
        return cls(Kind.CLASSICAL, n_classical=n, hbar=hbar)

    @property
    def dim(self) -> int:
        """Real dimension ``2 N_c + 2 N_q``."""
        return 2 * (self.n_classical + self.n_quantum)

    @property
    def n_slots(self) -> int:
        return self.n_classical + self.n_quantum

    @property
    def has_quantum(self) -> bool:
        return self.n_quantum > 0

    @property
    def coordinate_scale(self) -> float:
        """Factor between complex slot values and their real coordinates."""
        return float(np.sqrt(2.0 / self.hbar))

    def classical_part(self) -> "PhaseSpace":
        return PhaseSpace.classical(self.n_classical, self.hbar)

    def quantum_part(self) -> "PhaseSpace":
        return PhaseSpace.quantum(self.n_quantum, self.hbar)

    def slot_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate indices of the real and imaginary member of every slot."""
        nc, nq = self.n_classical, self.n_quantum
        re = np.concatenate([np.arange(nc), 2 * nc + np.arange(nq)])
        im = np.concatenate([nc + np.arange(nc), 2 * nc + nq + np.arange(nq)])
        return re.astype(np.intp), im.astype(np.intp)

    def slot_weights(self) -> np.ndarray:
        return np.concatenate(
            [np.ones(self.n_classical), np.full(self.n_quantum, 1.0 / self.hbar)]
        )

    def quantum_indices(self) -> tuple[np.ndarray, np.ndarray]:
        off = 2 * self.n_classical
        nq = self.n_quantum
        return off + np.arange(nq), off + nq + np.arange(nq)

    def form_matrix(self) -> np.ndarray:
        """Matrix ``W`` with ``omega(u, v) = u @ W @ v``."""
        w = np.zeros((self.dim, self.dim))
        re, im = self.slot_indices()
        wt = self.slot_weights()
        w[re, im] = wt
        w[im, re] = -wt
        return w

    def poisson_tensor(self) -> np.ndarray:
        """Matrix ``P`` with ``{f, g} = grad f @ P @ grad g``.

        The Hamiltonian vector field of ``H`` is ``P @ grad H``.
        """
        return self.form_matrix()


def compose_quantum(*spaces: PhaseSpace) -> PhaseSpace:
    """Tensor-product composition: complex dimensions multiply."""
    if not spaces:
        raise ValueError("need at least one space")
    n = 1
    for s in spaces:
        if s.kind is not Kind.QUANTUM:
            raise ValueError(f"compose_quantum needs quantum spaces, got {s.kind.value}")
        if s.hbar != spaces[0].hbar:
            raise ValueError("hbar mismatch")
        n *= s.n_quantum
    return PhaseSpace.quantum(n, spaces[0].hbar)


def compose_hybrid(c: PhaseSpace, q: PhaseSpace) -> PhaseSpace:
    """Cartesian product of a classical and a quantum space, coordinates ``(q, p, x, y)``."""
    if c.kind is not Kind.CLASSICAL or q.kind is not Kind.QUANTUM:
        raise ValueError("compose_hybrid needs (classical, quantum) spaces")
    if c.hbar != q.hbar:
        raise ValueError("hbar mismatch")
    return PhaseSpace(Kind.HYBRID, n_classical=c.n_classical, n_quantum=q.n_quantum, hbar=c.hbar)


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PhasePoint:
    space: PhaseSpace
    coords: np.ndarray

    def __post_init__(self):
        coords = _frozen(self.coords)
        if coords.shape != (self.space.dim,):
            raise ValueError(
                f"expected {self.space.dim} coordinates, got shape {coords.shape}"
            )
        object.__setattr__(self, "coords", coords)

    def slot_values(self) -> np.ndarray:
        """Complex value of every slot, ``(re + i im) / coordinate_scale``."""
        re, im = self.space.slot_indices()
        return (self.coords[re] + 1j * self.coords[im]) / self.space.coordinate_scale

    def amplitudes(self) -> np.ndarray:
        """Quantum amplitudes ``c_j`` of the quantum sector."""
        if not self.space.has_quantum:
            raise ValueError("point has no quantum sector")
        xi, yi = self.space.quantum_indices()
        return (self.coords[xi] + 1j * self.coords[yi]) / self.space.coordinate_scale

    def classical_coords(self) -> np.ndarray:
        return self.coords[: 2 * self.space.n_classical]

    def quantum_norm_squared(self) -> float:
        """``sum(x**2 + y**2)`` over the quantum sector; ``2/hbar`` for unit states."""
        xi, yi = self.space.quantum_indices()
        return float(np.sum(self.coords[xi] ** 2) + np.sum(self.coords[yi] ** 2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.quantum_norm_squared() - 2.0 / self.space.hbar) <= tol


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: PhasePoint
    components: np.ndarray

    def __post_init__(self):
        comp = _frozen(self.components)
        if comp.shape != self.base.coords.shape:
            raise ValueError(
                f"expected {self.base.coords.shape[0]} components, got shape {comp.shape}"
            )
        object.__setattr__(self, "components", comp)

    def _check(self, other: "TangentVector"):
        if other.base.space != self.base.space:
            raise ValueError("tangent vectors live on different spaces")

    def __add__(self, other: "TangentVector") -> "TangentVector":
        self._check(other)
        return TangentVector(self.base, self.components + other.components)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        self._check(other)
        return TangentVector(self.base, self.components - other.components)

    def __mul__(self, a: float) -> "TangentVector":
        return TangentVector(self.base, a * self.components)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, -self.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries, complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if dev > HERMITIAN_TOL:
            raise ValueError(f"operator is not Hermitian (deviation {dev:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.entries + other.entries)

    def __mul__(self, a: float) -> "HermitianOperator":
        return HermitianOperator(float(a) * self.entries)

    __rmul__ = __mul__

    def commutator(self, other: "HermitianOperator") -> np.ndarray:
        """``[A, B]``, anti-Hermitian, returned as a plain array."""
        return self.entries @ other.entries - other.entries @ self.entries

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "HermitianOperator":
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        return cls((a + a.conj().T) / 2)


PAULI_X = HermitianOperator(np.array([[0, 1], [1, 0]], dtype=complex))
PAULI_Y = HermitianOperator(np.array([[0, -1j], [1j, 0]], dtype=complex))
PAULI_Z = HermitianOperator(np.array([[1, 0], [0, -1]], dtype=complex))


def encode_slots(values, space: PhaseSpace) -> PhasePoint:
    """Build a point from complex slot values (classical slots use ``q + i p``).

    All slots share :attr:`PhaseSpace.coordinate_scale`, so a classical slot
    written in the same complex notation as quantum amplitudes gets the same
    real scaling.
    """
    v = np.asarray(values, dtype=complex)
    if v.shape != (space.n_slots,):
        raise ValueError(f"expected {space.n_slots} slot values, got shape {v.shape}")
    coords = np.empty(space.dim)
    re, im = space.slot_indices()
    s = space.coordinate_scale
    coords[re] = s * v.real
    coords[im] = s * v.imag
    return PhasePoint(space, coords)


def to_canonical(amplitudes, space: PhaseSpace) -> PhasePoint:
    """Map Hilbert-space amplitudes ``c`` to ``(x, y) = sqrt(2/hbar) (Re c, Im c)``."""
    if space.kind is not Kind.QUANTUM:
        raise ValueError("to_canonical needs a quantum space")
    c = np.asarray(amplitudes, dtype=complex)
    if c.shape != (space.n_quantum,):
        raise ValueError(f"expected {space.n_quantum} amplitudes, got shape {c.shape}")
    return encode_slots(c, space)


def from_canonical(point: PhasePoint) -> np.ndarray:
    if point.space.kind is not Kind.QUANTUM:
        raise ValueError("from_canonical needs a quantum point")
    return point.slot_values()


def _check_pair(u: TangentVector, v: TangentVector):
    if u.base.space != v.base.space:
        raise ValueError("tangent vectors are based on different spaces")


def symplectic_form(u: TangentVector, v: TangentVector) -> float:
    _check_pair(u, v)
    space = u.base.space
    re, im = space.slot_indices()
    a, b = u.components, v.components
    return float(np.sum(space.slot_weights() * (a[re] * b[im] - b[re] * a[im])))


def complex_structure(v: TangentVector) -> TangentVector:
    """Almost complex structure ``J: (x_j, y_j) -> (-y_j, x_j)`` on quantum spaces."""
    if v.base.space.kind is not Kind.QUANTUM:
        raise ValueError("complex structure is defined on quantum spaces")
    n = v.base.space.n_quantum
    x, y = v.components[:n], v.components[n:]
    return TangentVector(v.base, np.concatenate([-y, x]))


def riemann_metric(u: TangentVector, v: TangentVector) -> float:
    _check_pair(u, v)
    if u.base.space.kind is not Kind.QUANTUM:
        raise ValueError("the Riemann metric is defined on quantum spaces")
    return float(np.dot(u.components, v.components))


def expectation(op: HermitianOperator, point: PhasePoint) -> float:
    """Quadratic function ``A(X) = <psi_X| A |psi_X>`` (no normalization)."""
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    c = point.amplitudes()
    if op.dim != c.shape[0]:
        raise ValueError(f"operator dimension {op.dim} != state dimension {c.shape[0]}")
    val = np.vdot(c, op.entries @ c)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class ScalarField:
    """A function on coordinates, optionally with its analytic gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None)

    def __call__(self, coords: np.ndarray) -> float:
        return float(self.value(coords))

    def grad(self, coords: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            return np.asarray(self.gradient(coords), dtype=float)
        return numerical_gradient(self.value, coords)


FieldLike = Union[ScalarField, Callable[[np.ndarray], float]]


def numerical_gradient(f: Callable[[np.ndarray], float], coords, step: float = FD_STEP) -> np.ndarray:
    x = np.array(coords, dtype=float)
    g = np.empty_like(x)
    with np.errstate(invalid="ignore", over="ignore"):
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += step
            xm[i] -= step
            g[i] = (f(xp) - f(xm)) / (2 * step)
    if not np.all(np.isfinite(g)):
        raise ArithmeticError("non-finite gradient")
    return g


def observable_field(op: HermitianOperator, space: PhaseSpace) -> ScalarField:
    """``A(X)`` as a scalar field with its analytic gradient."""
    if op.dim != space.n_quantum:
        raise ValueError("operator dimension does not match the quantum sector")
    xi, yi = space.quantum_indices()
    s = space.coordinate_scale
    m = op.entries

    def value(coords):
        c = (coords[xi] + 1j * coords[yi]) / s
        return float(np.vdot(c, m @ c).real)

    def gradient(coords):
        c = (coords[xi] + 1j * coords[yi]) / s
        ac = m @ c
        g = np.zeros(space.dim)
        g[xi] = 2.0 / s * ac.real
        g[yi] = 2.0 / s * ac.imag
        return g

    return ScalarField(value, gradient)


def coordinate_field(index: int) -> ScalarField:
    def gradient(coords):
        g = np.zeros(len(coords))
        g[index] = 1.0
        return g

    return ScalarField(lambda coords: float(coords[index]), gradient)


def _as_field(f: FieldLike) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(f)


def poisson_bracket(f: FieldLike, g: FieldLike, point: PhasePoint) -> float:
    """Hybrid Poisson bracket ``{f, g}`` at ``point``.

    Classical pairs enter with weight 1, quantum pairs with ``1/hbar``.
    Fields without an analytic gradient are differentiated by central
    differences.
    """
    gf = _as_field(f).grad(point.coords)
    gg = _as_field(g).grad(point.coords)
    if not (np.all(np.isfinite(gf)) and np.all(np.isfinite(gg))):
        raise ArithmeticError("non-finite gradient")
    return float(gf @ point.space.poisson_tensor() @ gg)


def product_embed(a: PhasePoint, b: PhasePoint) -> PhasePoint:
    """Compose two points: tensor product for quantum pairs, concatenation for (classical, quantum)."""
    ka, kb = a.space.kind, b.space.kind
    if ka is Kind.QUANTUM and kb is Kind.QUANTUM:
        space = compose_quantum(a.space, b.space)
        return to_canonical(np.kron(a.amplitudes(), b.amplitudes()), space)
    if ka is Kind.CLASSICAL and kb is Kind.QUANTUM:
        space = compose_hybrid(a.space, b.space)
        return PhasePoint(space, np.concatenate([a.coords, b.coords]))
    raise ValueError(f"cannot embed ({ka.value}, {kb.value})")


def fit_global_phase(target, reference) -> tuple[float, float]:
    """Best phase ``theta`` with ``exp(i theta) target ~ reference``.

    Returns ``(theta, residual)``; the residual is the max deviation in the
    real form ``x_t cos(theta) - y_t sin(theta) = x_o``,
    ``y_t cos(theta) + x_t sin(theta) = y_o``, evaluated on amplitudes.
    """
    t = np.asarray(target, dtype=complex)
    r = np.asarray(reference, dtype=complex)
    theta = float(np.angle(np.vdot(t, r)))
    ct, st = np.cos(theta), np.sin(theta)
    res_x = t.real * ct - t.imag * st - r.real
    res_y = t.imag * ct + t.real * st - r.imag
    return theta, float(max(np.max(np.abs(res_x)), np.max(np.abs(res_y))))
