# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel; same interface and arithmetic as ``_pykernel``."""

import numpy as np

from libc.math cimport sqrt, fabs, isfinite

from symclone.errors import ConvergenceError

ctypedef double complex cplx


cdef inline double ipow(double b, long long e) noexcept nogil:
    cdef double r = 1.0
    while e > 0:
        r *= b
        e -= 1
    return r


cdef struct Dims:
    int nc
    int nq
    int npass
    int nops
    int nterms
    double scale
    double hbar


cdef class _Work:
    cdef cplx[::1] c
    cdef cplx[:, ::1] ac
    cdef double[::1] a
    cdef double[::1] dz
    cdef double[::1] da
    cdef cplx[:, ::1] heff
    cdef double[::1] f
    cdef double[::1] y
    cdef double[::1] mid

    def __init__(self, int nc, int nq, int nops, int dim):
        self.c = np.zeros(nq, dtype=np.complex128)
        self.ac = np.zeros((nops, nq), dtype=np.complex128)
        self.a = np.zeros(nops)
        self.dz = np.zeros(2 * nc)
        self.da = np.zeros(nops)
        self.heff = np.zeros((nq, nq), dtype=np.complex128)
        self.f = np.zeros(dim)
        self.y = np.zeros(dim)
        self.mid = np.zeros(dim)


cdef void _expect(Dims d, const cplx[:, :, ::1] ops, const double[::1] x,
                  cplx[::1] c, cplx[:, ::1] ac, double[::1] a) noexcept nogil:
    cdef int nz = 2 * d.nc
    cdef int i, j, k
    cdef cplx acc
    cdef double s
    for j in range(d.nq):
        c[j] = (x[nz + j] + 1j * x[nz + d.nq + j]) / d.scale
    for k in range(d.nops):
        s = 0.0
        for i in range(d.nq):
            acc = 0
            for j in range(d.nq):
                acc = acc + ops[k, i, j] * c[j]
            ac[k, i] = acc
            s += c[i].real * acc.real + c[i].imag * acc.imag
        a[k] = s


cdef double _energy(Dims d, const cplx[:, :, ::1] ops, const double[::1] coef,
                    const long long[:, ::1] cpow, const long long[:, ::1] qpow,
                    const double[::1] x, cplx[::1] c, cplx[:, ::1] ac, double[::1] a) noexcept nogil:
    cdef int t, i, k
    cdef double total = 0.0, term
    _expect(d, ops, x, c, ac, a)
    for t in range(d.nterms):
        term = coef[t]
        for i in range(2 * d.nc):
            term *= ipow(x[i], cpow[t, i])
        for k in range(d.nops):
            term *= ipow(a[k], qpow[t, k])
        total += term
    return total


cdef void _field(Dims d, const cplx[:, :, ::1] ops, const double[::1] coef,
                 const long long[:, ::1] cpow, const long long[:, ::1] qpow,
                 const double[::1] x, double[::1] out, _Work w) noexcept nogil:
    cdef int nz = 2 * d.nc
    cdef int t, i, j, k, m, p, b
    cdef double zmon, amon, part, f
    cdef cplx v, cj
    _expect(d, ops, x, w.c, w.ac, w.a)
    for i in range(nz):
        w.dz[i] = 0.0
    for k in range(d.nops):
        w.da[k] = 0.0
    for t in range(d.nterms):
        zmon = 1.0
        for i in range(nz):
            zmon *= ipow(x[i], cpow[t, i])
        amon = 1.0
        for k in range(d.nops):
            amon *= ipow(w.a[k], qpow[t, k])
        for i in range(nz):
            if cpow[t, i] > 0:
                part = coef[t] * amon * cpow[t, i]
                for m in range(nz):
                    part *= ipow(x[m], cpow[t, m] - 1 if m == i else cpow[t, m])
                w.dz[i] += part
        for k in range(d.nops):
            if qpow[t, k] > 0:
                part = coef[t] * zmon * qpow[t, k]
                for m in range(d.nops):
                    part *= ipow(w.a[m], qpow[t, m] - 1 if m == k else qpow[t, m])
                w.da[k] += part

    for i in range(d.nc):
        out[i] = w.dz[d.nc + i]
        out[d.nc + i] = -w.dz[i]
    f = 2.0 / (d.scale * d.hbar)
    for i in range(d.nq):
        v = 0
        for k in range(d.nops):
            v = v + w.da[k] * w.ac[k, i]
        out[nz + i] = f * v.imag
        out[nz + d.nq + i] = -f * v.real
    if d.npass > 0:
        for i in range(d.nq):
            for j in range(d.nq):
                v = 0
                for k in range(d.nops):
                    v = v + w.da[k] * ops[k, i, j]
                w.heff[i, j] = v
        for p in range(d.npass):
            b = nz + 2 * d.nq * (p + 1)
            for i in range(d.nq):
                v = 0
                for j in range(d.nq):
                    cj = (x[b + j] + 1j * x[b + d.nq + j]) / d.scale
                    v = v + w.heff[i, j] * cj
                out[b + i] = f * v.imag
                out[b + d.nq + i] = -f * v.real


cdef int _midpoint(Dims d, const cplx[:, :, ::1] ops, const double[::1] coef,
                   const long long[:, ::1] cpow, const long long[:, ::1] qpow,
                   double[::1] x, double h, double tol, int max_iter, _Work w) noexcept nogil:
    """Advance ``x`` in place by one implicit-midpoint step of size ``h``."""
    cdef int n = x.shape[0]
    cdef int i, it
    cdef double diff, ynew
    _field(d, ops, coef, cpow, qpow, x, w.f, w)
    for i in range(n):
        w.y[i] = x[i] + h * w.f[i]
    for it in range(max_iter):
        for i in range(n):
            w.mid[i] = 0.5 * (x[i] + w.y[i])
        _field(d, ops, coef, cpow, qpow, w.mid, w.f, w)
        diff = 0.0
        for i in range(n):
            ynew = x[i] + h * w.f[i]
            if not isfinite(ynew):
                return -2
            if fabs(ynew - w.y[i]) > diff:
                diff = fabs(ynew - w.y[i])
            w.y[i] = ynew
        if diff <= tol:
            for i in range(n):
                x[i] = w.y[i]
            return it + 1
    return -1


cdef Dims _dims(kh, double hbar, int n_passengers):
    cdef Dims d
    d.nc = kh.n_classical
    d.nq = kh.n_quantum
    d.npass = n_passengers
    d.nops = kh.ops.shape[0]
    d.nterms = kh.coef.shape[0]
    d.hbar = hbar
    d.scale = sqrt(2.0 / hbar)
    return d


def energy(kh, double hbar, x):
    cdef Dims d = _dims(kh, hbar, 0)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    w = _Work(d.nc, d.nq, d.nops, xv.shape[0])
    return _energy(d, kh.ops, kh.coef, kh.cpow, kh.qpow, xv, (<_Work>w).c, (<_Work>w).ac, (<_Work>w).a)


def vector_field(kh, double hbar, x, int n_passengers=0):
    cdef Dims d = _dims(kh, hbar, n_passengers)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    w = _Work(d.nc, d.nq, d.nops, xv.shape[0])
    _field(d, kh.ops, kh.coef, kh.cpow, kh.qpow, xv, ov, w)
    return out


def integrate(kh, double hbar, x0, double dt, int n_steps, weights, double tol, int max_iter,
              int n_passengers=0):
    cdef Dims d = _dims(kh, hbar, n_passengers)
    cdef const cplx[:, :, ::1] ops = kh.ops
    cdef const double[::1] coef = kh.coef
    cdef const long long[:, ::1] cpow = kh.cpow
    cdef const long long[:, ::1] qpow = kh.qpow
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] ws = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int dim = x.shape[0]
    states = np.empty((n_steps + 1, dim))
    energies = np.empty(n_steps + 1)
    cdef double[:, ::1] sv = states
    cdef double[::1] ev = energies
    cdef _Work w = _Work(d.nc, d.nq, d.nops, dim)
    cdef int n, j, i, status = 0, failed_at = -1

    sv[0, :] = x
    ev[0] = _energy(d, ops, coef, cpow, qpow, x, w.c, w.ac, w.a)
    with nogil:
        for n in range(n_steps):
            for j in range(ws.shape[0]):
                status = _midpoint(d, ops, coef, cpow, qpow, x, ws[j] * dt, tol, max_iter, w)
                if status < 0:
                    failed_at = n
                    break
            if status < 0:
                break
            for i in range(dim):
                sv[n + 1, i] = x[i]
            ev[n + 1] = _energy(d, ops, coef, cpow, qpow, x, w.c, w.ac, w.a)
    if status == -1:
        raise ConvergenceError(f"fixed-point iteration did not converge at step {failed_at}")
    if status == -2:
        raise ConvergenceError(f"non-finite state at step {failed_at}")
    return states, energies
