"""Self-replication and cloning maps and their symplectic-area verdicts.

Every map here acts on a qubit object state ``u = (alpha, beta)`` embedded in
a larger phase space with fixed target and machine states.  Forward maps are
written on complex slot values; the real Jacobian of a slot map ``w(u)`` is
assembled from its Wirtinger derivatives ``dw/du`` and ``dw/d(conj u)``,
because machine rules such as ``u -> conj(u)`` are not holomorphic.

Because every slot uses the same coordinate scale ``s``, the real map is
``F(X) = s w(X_obj / s)`` and its Jacobian is exactly the real form of
``Dw``, whatever the degree of ``w``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .phase_space import (
    FD_STEP,
    PhasePoint,
    PhaseSpace,
    TangentVector,
    compose_hybrid,
    encode_slots,
    symplectic_form,
)

#: Areas at or below this magnitude make the ratio 0/0.
DEGENERATE_AREA = 1e-8
#: Tolerance on ``|alpha|^2 + |beta|^2 = 1``.
OBJECT_NORM_TOL = 1e-9
MAX_DRAWS = 10**6

SeedLike = Union[None, int, np.random.Generator]


class DegenerateAreaError(ValueError):
    """The input symplectic area is too small for a meaningful ratio."""


class SamplingError(RuntimeError):
    pass


class Method(enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "fd"


def _as_method(method) -> Method:
    return method if isinstance(method, Method) else Method(method)


def _check_object(obj) -> np.ndarray:
    u = np.asarray(obj, dtype=complex)
    if u.shape != (2,):
        raise ValueError(f"object state must be a complex pair, got shape {u.shape}")
    n2 = float(np.sum(np.abs(u) ** 2))
    if abs(n2 - 1.0) > OBJECT_NORM_TOL:
        raise ValueError(f"object state is not normalized (|u|^2 = {n2:.12g})")
    return u


# -- gauge ---------------------------------------------------------------------


@dataclass(frozen=True)
class GaugeSpec:
    """Global phase ``theta(alpha, beta)`` attached to a map's quantum output.

    ``gradient`` returns ``dtheta/dRe(u_l) + i dtheta/dIm(u_l)`` for each
    object amplitude.
    """

    variant: str = "zero"
    theta: float = 0.0
    field: Optional[Callable[[np.ndarray], float]] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def zero(cls) -> "GaugeSpec":
        return cls()

    @classmethod
    def constant(cls, theta: float) -> "GaugeSpec":
        return cls("constant", theta=float(theta))

    @classmethod
    def smooth(cls, field, gradient) -> "GaugeSpec":
        return cls("smooth", field=field, gradient=gradient)

    def phase(self, u: np.ndarray) -> float:
        if self.variant == "smooth":
            return float(self.field(u))
        return self.theta

    def phase_gradient(self, u: np.ndarray) -> np.ndarray:
        if self.variant == "smooth":
            return np.asarray(self.gradient(u), dtype=complex)
        return np.zeros(len(u), dtype=complex)

    def check_gradient(self, u, tol: float = 1e-6, step: float = FD_STEP) -> float:
        """Max deviation of the supplied gradient from central differences."""
        u = np.asarray(u, dtype=complex)
        fd = np.zeros(len(u), dtype=complex)
        for l in range(len(u)):
            for unit, part in ((1.0, 1.0), (1j, 1j)):
                du = np.zeros(len(u), dtype=complex)
                du[l] = step * unit
                fd[l] += part * (self.phase(u + du) - self.phase(u - du)) / (2 * step)
        dev = float(np.max(np.abs(fd - self.phase_gradient(u))))
        if dev > tol:
            raise ValueError(f"gauge gradient disagrees with finite differences ({dev:.3e})")
        return dev


def linear_gauge(c1: float, c0: float = 0.0) -> GaugeSpec:
    """``theta = c0 + c1 Re(alpha)``."""
    return GaugeSpec.smooth(
        lambda u: c0 + c1 * float(np.real(u[0])),
        lambda u: np.array([c1, 0.0], dtype=complex),
    )


# -- machine rules ----------------------------------------------------------------


@dataclass(frozen=True)
class MachineRule:
    """Final machine state as a function of the object state.

    ``wirtinger(u)`` returns ``(A, B)`` with ``A[k, l] = dm_k/du_l`` and
    ``B[k, l] = dm_k/d(conj u_l)``; without it only finite-difference
    pushforwards are available.
    """

    name: str
    rule: Callable[[np.ndarray], np.ndarray]
    wirtinger: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.rule(u), dtype=complex)


_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)

CONJUGATE = MachineRule("conjugate", np.conj, lambda u: (_Z2, _I2))
FIXED_MACHINE = MachineRule(
    "fixed", lambda u: np.array([1.0, 0.0], dtype=complex), lambda u: (_Z2, _Z2)
)
# alpha_im + i alpha_re == i conj(alpha)
SWAPPED_PARTS = MachineRule("swapped-parts", lambda u: 1j * np.conj(u), lambda u: (_Z2, 1j * _I2))


# -- map definitions ------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    """A 2-vector valued function of ``u`` with its Wirtinger derivatives."""

    value: np.ndarray
    d_u: np.ndarray
    d_ubar: np.ndarray


def _kron_factors(factors: Sequence[Factor]) -> Factor:
    value = factors[0].value
    d_u, d_ubar = factors[0].d_u, factors[0].d_ubar
    for f in factors[1:]:
        d_u = np.kron(d_u, f.value[:, None]) + np.kron(value[:, None], f.d_u)
        d_ubar = np.kron(d_ubar, f.value[:, None]) + np.kron(value[:, None], f.d_ubar)
        value = np.kron(value, f.value)
    return Factor(value, d_u, d_ubar)


def _object_factor(u: np.ndarray) -> Factor:
    return Factor(u, _I2, _Z2)


def _rule_factor(rule: MachineRule, u: np.ndarray) -> Factor:
    if rule.wirtinger is None:
        raise NotImplementedError(f"machine rule {rule.name!r} has no analytic derivative")
    a, b = rule.wirtinger(u)
    return Factor(rule(u), np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


@dataclass(frozen=True)
class MapDefinition:
    """A smooth map between phase spaces.

    ``forward`` and ``analytic_jacobian`` act on coordinate arrays.  Cloning
    maps additionally record where the object amplitudes live in the domain
    (``object_slots``) and the fixed slot values of target and machine
    (``fixed_slots``), which together define the input submanifold.
    """

    name: str
    domain: PhaseSpace
    codomain: PhaseSpace
    forward: Callable[[np.ndarray], np.ndarray]
    analytic_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gauge: GaugeSpec = field(default_factory=GaugeSpec.zero)
    machine_final_rule: Optional[MachineRule] = None
    object_slots: Optional[tuple[int, ...]] = None
    fixed_slots: tuple[tuple[int, complex], ...] = ()

    def __call__(self, point: PhasePoint) -> PhasePoint:
        if point.space != self.domain:
            raise ValueError(f"point is not in the domain of {self.name}")
        out = np.asarray(self.forward(point.coords), dtype=float)
        return PhasePoint(self.codomain, out)

    def jacobian(self, point: PhasePoint, method=Method.ANALYTIC) -> np.ndarray:
        method = _as_method(method)
        if method is Method.ANALYTIC:
            if self.analytic_jacobian is None:
                raise NotImplementedError(f"{self.name} has no analytic Jacobian")
            return np.asarray(self.analytic_jacobian(point.coords), dtype=float)
        return numerical_jacobian(self.forward, point.coords)


def numerical_jacobian(f: Callable[[np.ndarray], np.ndarray], x, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian along coordinate directions."""
    x = np.array(x, dtype=float)
    cols = []
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * step))
    jac = np.stack(cols, axis=1)
    if not np.all(np.isfinite(jac)):
        raise ArithmeticError("non-finite finite differences")
    return jac


def _real_jacobian(d_u, d_ubar, out_space: PhaseSpace, out_slots, in_space: PhaseSpace, in_slots):
    """Real Jacobian block of a slot map from its Wirtinger derivatives."""
    re_o, im_o = (idx[out_slots] for idx in out_space.slot_indices())
    re_l, im_l = (idx[list(in_slots)] for idx in in_space.slot_indices())
    plus, minus = d_u + d_ubar, d_u - d_ubar
    jac = np.zeros((out_space.dim, in_space.dim))
    jac[np.ix_(re_o, re_l)] = plus.real
    jac[np.ix_(im_o, re_l)] = plus.imag
    jac[np.ix_(re_o, im_l)] = -minus.imag
    jac[np.ix_(im_o, im_l)] = minus.real
    return jac


def _slot_map(
    name: str,
    domain: PhaseSpace,
    codomain: PhaseSpace,
    object_slots: tuple[int, int],
    fixed_slots: tuple[tuple[int, complex], ...],
    blocks: Callable[[np.ndarray], list[tuple[np.ndarray, Factor]]],
    values: Callable[[np.ndarray], list[tuple[np.ndarray, np.ndarray]]],
    gauge: GaugeSpec,
    rule: Optional[MachineRule],
    quantum_out: np.ndarray,
) -> MapDefinition:
    re_in, im_in = domain.slot_indices()
    obj = list(object_slots)
    s = domain.coordinate_scale

    def read_object(coords):
        return (coords[re_in[obj]] + 1j * coords[im_in[obj]]) / s

    def forward(coords):
        u = read_object(coords)
        w = np.zeros(codomain.n_slots, dtype=complex)
        for slots, val in values(u):
            w[slots] = val
        w[quantum_out] *= np.exp(1j * gauge.phase(u))
        return encode_slots(w, codomain).coords

    def jacobian(coords):
        u = read_object(coords)
        phase = np.exp(1j * gauge.phase(u))
        dtheta = gauge.phase_gradient(u)
        jac = np.zeros((codomain.dim, domain.dim))
        for slots, fac in blocks(u):
            d_u, d_ubar = fac.d_u, fac.d_ubar
            if np.isin(slots, quantum_out).all():
                # d(e^{i theta} P) = e^{i theta} (dP + i P dtheta)
                d_u = phase * (d_u + 1j * np.outer(fac.value, np.conj(dtheta) / 2))
                d_ubar = phase * (d_ubar + 1j * np.outer(fac.value, dtheta / 2))
            jac += _real_jacobian(d_u, d_ubar, codomain, slots, domain, obj)
        return jac

    has_jac = rule is None or rule.wirtinger is not None
    return MapDefinition(
        name=name,
        domain=domain,
        codomain=codomain,
        forward=forward,
        analytic_jacobian=jacobian if has_jac else None,
        gauge=gauge,
        machine_final_rule=rule,
        object_slots=tuple(object_slots),
        fixed_slots=tuple(fixed_slots),
    )


def self_replication(gauge: Optional[GaugeSpec] = None, hbar: float = 1.0) -> MapDefinition:
    """``(alpha, 0, beta, 0) -> (alpha^2, alpha beta, beta alpha, beta^2) e^{i theta}``."""
    gauge = gauge or GaugeSpec.zero()
    space = PhaseSpace.quantum(4, hbar)
    all_slots = np.arange(4)
    return _slot_map(
        "self-replication",
        space,
        space,
        (0, 2),
        (),
        lambda u: [(all_slots, _kron_factors([_object_factor(u), _object_factor(u)]))],
        lambda u: [(all_slots, np.kron(u, u))],
        gauge,
        None,
        all_slots,
    )


def quantum_cloning(
    rule: MachineRule = CONJUGATE, gauge: Optional[GaugeSpec] = None, hbar: float = 1.0
) -> MapDefinition:
    """Object, target and machine qubits: ``u (x) e0 (x) e0 -> u (x) u (x) m(u)``."""
    gauge = gauge or GaugeSpec.zero()
    space = PhaseSpace.quantum(8, hbar)
    all_slots = np.arange(8)
    name = "quantum-cloning" if rule is CONJUGATE else f"quantum-cloning[{rule.name}]"
    return _slot_map(
        name,
        space,
        space,
        (0, 4),
        (),
        lambda u: [
            (all_slots, _kron_factors([_object_factor(u), _object_factor(u), _rule_factor(rule, u)]))
        ],
        lambda u: [(all_slots, np.kron(np.kron(u, u), rule(u)))],
        gauge,
        rule,
        all_slots,
    )


def hybrid_cloning(
    rule: MachineRule = SWAPPED_PARTS, gauge: Optional[GaugeSpec] = None, hbar: float = 1.0
) -> MapDefinition:
    """Quantum object and target with a two-degree-of-freedom classical machine.

    Coordinates are ``(q1, q2, p1, p2, x, y)``; the machine starts at complex
    notation ``q + i p = (1, 0)`` and ends at ``m(u)``.
    """
    gauge = gauge or GaugeSpec.zero()
    space = compose_hybrid(PhaseSpace.classical(2, hbar), PhaseSpace.quantum(4, hbar))
    machine = np.arange(2)
    quantum = 2 + np.arange(4)
    name = "hybrid-cloning" if rule is SWAPPED_PARTS else f"hybrid-cloning[{rule.name}]"
    return _slot_map(
        name,
        space,
        space,
        (2, 4),
        ((0, 1.0 + 0j),),
        lambda u: [
            (quantum, _kron_factors([_object_factor(u), _object_factor(u)])),
            (machine, _rule_factor(rule, u)),
        ],
        lambda u: [(quantum, np.kron(u, u)), (machine, rule(u))],
        gauge,
        rule,
        quantum,
    )


def identity_map(space: PhaseSpace) -> MapDefinition:
    return linear_map(np.eye(space.dim), space, "identity")


def linear_map(matrix, space: PhaseSpace, name: str = "linear") -> MapDefinition:
    m = np.array(matrix, dtype=float)
    if m.shape != (space.dim, space.dim):
        raise ValueError("matrix shape does not match the space")
    return MapDefinition(name, space, space, lambda x: m @ x, lambda x: m)


MAPS: dict[str, Callable[[], MapDefinition]] = {
    "self-replication": self_replication,
    "quantum-cloning": quantum_cloning,
    "quantum-cloning-fixed-machine": lambda: quantum_cloning(FIXED_MACHINE),
    "hybrid-cloning": hybrid_cloning,
}


# -- points and tangent vectors ------------------------------------------------------


def initial_point(map_def: MapDefinition, obj) -> PhasePoint:
    """Point of the input submanifold for object state ``obj``."""
    u = _check_object(obj)
    if map_def.object_slots is None:
        raise ValueError(f"{map_def.name} has no object slots")
    w = np.zeros(map_def.domain.n_slots, dtype=complex)
    w[list(map_def.object_slots)] = u
    for slot, val in map_def.fixed_slots:
        w[slot] = val
    return encode_slots(w, map_def.domain)


def apply_to_object(map_def: MapDefinition, obj) -> PhasePoint:
    return map_def(initial_point(map_def, obj))


def self_replication_map(obj, gauge: Optional[GaugeSpec] = None) -> PhasePoint:
    return apply_to_object(self_replication(gauge), obj)


def quantum_cloning_map(obj, machine_final_rule: MachineRule = CONJUGATE) -> PhasePoint:
    m = machine_final_rule(_check_object(obj))
    if abs(float(np.sum(np.abs(m) ** 2)) - 1.0) > OBJECT_NORM_TOL:
        raise ValueError("machine rule returned a non-normalized state")
    return apply_to_object(quantum_cloning(machine_final_rule), obj)


def hybrid_cloning_map(obj) -> PhasePoint:
    return apply_to_object(hybrid_cloning(), obj)


@dataclass(frozen=True)
class TangentParams:
    g1: float
    g2: float
    g3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.g1, self.g2, self.g3])

    @classmethod
    def random(cls, rng: np.random.Generator) -> "TangentParams":
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        return cls(*map(float, v))


def object_tangent(obj, params: TangentParams) -> np.ndarray:
    """Complex tangent ``(i g1 alpha + g3 beta, i g2 beta - g3 alpha)`` to the unit sphere."""
    a, b = obj
    return np.array([1j * params.g1 * a + params.g3 * b, 1j * params.g2 * b - params.g3 * a])


def tangent_from_params(
    map_def: MapDefinition, obj, params: TangentParams, normalize: bool = True
) -> TangentVector:
    """Tangent vector to the input submanifold, real and imaginary parts in the object slots."""
    u = _check_object(obj)
    if not np.any(params.as_array()):
        raise ValueError("tangent parameters must not all vanish")
    base = initial_point(map_def, u)
    du = object_tangent(u, params)
    comp = np.zeros(map_def.domain.dim)
    re, im = map_def.domain.slot_indices()
    obj_slots = list(map_def.object_slots)
    comp[re[obj_slots]] = du.real
    comp[im[obj_slots]] = du.imag
    if normalize:
        norm = np.linalg.norm(comp)
        if norm == 0.0:
            raise ValueError("parameters give a zero tangent vector at this object state")
        comp /= norm
    return TangentVector(base, comp)


def closed_form_area(obj, pg: TangentParams, ph: TangentParams) -> float:
    """``(g3 (h1 - h2) + (g2 - g1) h3) (a_re b_re + a_im b_im)`` for unnormalized tangents."""
    a, b = np.asarray(obj, dtype=complex)
    factor = pg.g3 * (ph.g1 - ph.g2) + (pg.g2 - pg.g1) * ph.g3
    return float(factor * (a.real * b.real + a.imag * b.imag))


def pushforward(map_def: MapDefinition, point: PhasePoint, v: TangentVector, method=Method.ANALYTIC,
                step: float = FD_STEP) -> TangentVector:
    method = _as_method(method)
    if v.base.space != point.space or not np.array_equal(v.base.coords, point.coords):
        raise ValueError("tangent vector is not based at the given point")
    image = map_def(point)
    if method is Method.ANALYTIC:
        comp = map_def.jacobian(point, Method.ANALYTIC) @ v.components
    else:
        x, d = point.coords, v.components
        comp = (np.asarray(map_def.forward(x + step * d)) - np.asarray(map_def.forward(x - step * d))) / (2 * step)
        if not np.all(np.isfinite(comp)):
            raise ArithmeticError("non-finite finite differences")
    return TangentVector(image, comp)


@dataclass(frozen=True)
class RatioVerdict:
    map_name: str
    object_state: np.ndarray
    params_g: TangentParams
    params_h: TangentParams
    area_before: float
    area_after: float
    ratio: float
    method: Method

    def to_dict(self) -> dict:
        a, b = self.object_state
        return {
            "map": self.map_name,
            "object": {"alpha": [a.real, a.imag], "beta": [b.real, b.imag]},
            "params_g": self.params_g.as_array().tolist(),
            "params_h": self.params_h.as_array().tolist(),
            "area_before": self.area_before,
            "area_after": self.area_after,
            "ratio": self.ratio,
            "method": self.method.value,
        }


def area_ratio(map_def: MapDefinition, obj, pg: TangentParams, ph: TangentParams,
               method=Method.ANALYTIC) -> RatioVerdict:
    """Symplectic area of two tangent vectors before and after the map."""
    method = _as_method(method)
    u = _check_object(obj)
    g = tangent_from_params(map_def, u, pg)
    h = tangent_from_params(map_def, u, ph)
    before = symplectic_form(g, h)
    if abs(before) <= DEGENERATE_AREA:
        raise DegenerateAreaError(f"input area {before:.3e} is degenerate; resample")
    x = g.base
    after = symplectic_form(pushforward(map_def, x, g, method), pushforward(map_def, x, h, method))
    return RatioVerdict(map_def.name, u, pg, ph, before, after, after / before, method)


# -- sampling and sweeps ---------------------------------------------------------------


def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_object_state(seed: SeedLike = None, min_area_factor: float = 0.05) -> np.ndarray:
    """Haar-random qubit with ``|a_re b_re + a_im b_im| >= min_area_factor``.

    Pass a ``Generator`` to draw a reproducible sequence.
    """
    if min_area_factor < 0:
        raise ValueError("min_area_factor must be non-negative")
    rng = _rng(seed)
    for _ in range(MAX_DRAWS):
        z = rng.standard_normal(4)
        u = (z[:2] + 1j * z[2:]) / np.linalg.norm(z)
        if abs(u[0].real * u[1].real + u[0].imag * u[1].imag) >= min_area_factor:
            return u
    raise SamplingError(f"no state with area factor >= {min_area_factor} in {MAX_DRAWS} draws")


@dataclass(frozen=True)
class SweepResult:
    verdicts: list[RatioVerdict]
    ratio_min: float
    ratio_max: float
    ratio_mean: float

    @property
    def ratios(self) -> np.ndarray:
        return np.array([v.ratio for v in self.verdicts])


def _draw_instance(map_def, rng, min_area_factor, min_area, max_tries=10_000):
    for _ in range(max_tries):
        u = sample_object_state(rng, min_area_factor)
        pg, ph = TangentParams.random(rng), TangentParams.random(rng)
        g = tangent_from_params(map_def, u, pg)
        h = tangent_from_params(map_def, u, ph)
        if abs(symplectic_form(g, h)) >= min_area:
            return u, pg, ph
    raise SamplingError("could not draw a non-degenerate instance")


def sweep_ratios(map_def: MapDefinition, n: int, seed: SeedLike = None, method=Method.ANALYTIC,
                 jobs: int = 1, min_area_factor: float = 0.05, min_area: float = 1e-3) -> SweepResult:
    """Area ratios at ``n`` random non-degenerate instances.

    Instances are drawn sequentially from ``seed`` and may be evaluated on
    ``jobs`` threads; results keep instance order.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    method = _as_method(method)
    rng = _rng(seed)
    instances = [_draw_instance(map_def, rng, min_area_factor, min_area) for _ in range(n)]

    def run(inst):
        return area_ratio(map_def, *inst, method=method)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(run, instances))
    else:
        verdicts = [run(inst) for inst in instances]
    ratios = [v.ratio for v in verdicts]
    return SweepResult(verdicts, min(ratios), max(ratios), math.fsum(ratios) / len(ratios))
