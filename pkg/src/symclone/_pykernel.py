"""Pure-Python (numpy) integration kernel.

Reference implementation of the compiled ``_ckernel`` module; both expose
``energy``, ``vector_field`` and ``integrate`` with identical signatures.

State layout: ``(q, p, x, y)`` of the driving system, then ``(x', y')`` of
each passenger.  Passengers are quantum states carried by the driver's
effective generator without acting back on it.
"""

import numpy as np

from .errors import ConvergenceError


def _expectations(kh, x, scale):
    nz, nq = 2 * kh.n_classical, kh.n_quantum
    z = x[:nz]
    c = (x[nz:nz + nq] + 1j * x[nz + nq:nz + 2 * nq]) / scale
    ac = kh.ops @ c
    a = np.einsum("i,ki->k", c.conj(), ac).real
    return z, c, ac, a


def _monomials(base, powers):
    return np.prod(base[None, :] ** powers, axis=1) if powers.shape[1] else np.ones(powers.shape[0])


def _partials(base, powers, weights):
    """``d/d base_i`` of ``sum_t weights[t] prod_i base_i^powers[t, i]``."""
    out = np.zeros(powers.shape[1])
    for i in range(powers.shape[1]):
        e = powers[:, i]
        live = e > 0
        if not live.any():
            continue
        reduced = powers[live].copy()
        reduced[:, i] -= 1
        out[i] = np.sum(weights[live] * e[live] * _monomials(base, reduced))
    return out


def energy(kh, hbar, x):
    x = np.asarray(x, dtype=float)
    z, _, _, a = _expectations(kh, x, np.sqrt(2.0 / hbar))
    return float(np.sum(kh.coef * _monomials(z, kh.cpow) * _monomials(a, kh.qpow)))


def vector_field(kh, hbar, x, n_passengers=0):
    x = np.asarray(x, dtype=float)
    scale = np.sqrt(2.0 / hbar)
    nc, nq = kh.n_classical, kh.n_quantum
    nz = 2 * nc
    z, _, ac, a = _expectations(kh, x, scale)
    zmon = _monomials(z, kh.cpow)
    amon = _monomials(a, kh.qpow)
    dz = _partials(z, kh.cpow, kh.coef * amon)
    da = _partials(a, kh.qpow, kh.coef * zmon)

    out = np.empty_like(x)
    out[:nc] = dz[nc:]
    out[nc:nz] = -dz[:nc]
    f = 2.0 / (scale * hbar)
    v = da @ ac
    out[nz:nz + nq] = f * v.imag
    out[nz + nq:nz + 2 * nq] = -f * v.real
    if n_passengers:
        heff = np.tensordot(da, kh.ops, axes=1)
        for p in range(n_passengers):
            b = nz + 2 * nq * (p + 1)
            cp = (x[b:b + nq] + 1j * x[b + nq:b + 2 * nq]) / scale
            vp = heff @ cp
            out[b:b + nq] = f * vp.imag
            out[b + nq:b + 2 * nq] = -f * vp.real
    return out


def _midpoint(kh, hbar, x, h, tol, max_iter, n_passengers):
    y = x + h * vector_field(kh, hbar, x, n_passengers)
    for it in range(max_iter):
        y_new = x + h * vector_field(kh, hbar, 0.5 * (x + y), n_passengers)
        diff = np.max(np.abs(y_new - y))
        y = y_new
        if not np.isfinite(diff):
            return y, -2
        if diff <= tol:
            return y, it + 1
    return y, -1


def integrate(kh, hbar, x0, dt, n_steps, weights, tol, max_iter, n_passengers=0):
    """Composed implicit-midpoint steps; returns ``(states, energies)``.

    ``weights`` are the substep fractions of ``dt`` (``[1.0]`` for plain
    midpoint).
    """
    x = np.array(x0, dtype=float)
    states = np.empty((n_steps + 1, x.size))
    energies = np.empty(n_steps + 1)
    states[0] = x
    energies[0] = energy(kh, hbar, x)
    for n in range(n_steps):
        for w in weights:
            x, status = _midpoint(kh, hbar, x, w * dt, tol, max_iter, n_passengers)
            if status == -1:
                raise ConvergenceError(f"fixed-point iteration did not converge at step {n}")
            if status == -2:
                raise ConvergenceError(f"non-finite state at step {n}")
        states[n + 1] = x
        energies[n + 1] = energy(kh, hbar, x)
    return states, energies
