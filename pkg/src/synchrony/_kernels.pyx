# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tick kernel; see ``_kernels_py.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cdef void _tick(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                const double[::1] p_agent, const double[::1] T, const cnp.uint8_t[::1] a,
                const double[::1] f_row, const cnp.uint8_t[::1] forced_row,
                double a_p, double b_p, double a_T, double b_T, bint closed,
                double[::1] T1, double[::1] P1, cnp.uint8_t[::1] a1) noexcept nogil:
    cdef Py_ssize_t n = T.shape[0]
    cdef Py_ssize_t i, k
    cdef cnp.int64_t deg, count, j
    cdef double acc, lhs, rhs, f
    for i in range(n):
        deg = indptr[i + 1] - indptr[i]
        acc = 0.0
        count = 0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            acc = acc + T[j]
            count = count + a[j]
        if closed:
            acc = acc + T[i]
            T1[i] = acc / <double>(deg + 1)
        elif deg > 0:
            T1[i] = acc / <double>deg
        else:
            T1[i] = T[i]
        if deg > 0:
            P1[i] = <double>count / <double>deg
        else:
            P1[i] = 0.0
        f = f_row[i]
        lhs = f * p_agent[i] * (a_p + b_p * P1[i])
        rhs = (1.0 - f) * (1.0 - p_agent[i]) * (a_T + b_T * T1[i])
        if forced_row[i] or lhs > rhs:
            a1[i] = 1
        else:
            a1[i] = 0


def advance(indptr, indices, p_agent, T, a, f_row, forced_row, linkage, closed=False):
    """One synchronous tick; returns ``(T, P, a)`` at t+1."""
    cdef Py_ssize_t n = len(T)
    T1 = np.empty(n)
    P1 = np.empty(n)
    a1 = np.empty(n, dtype=np.uint8)
    a_p, b_p, a_T, b_T = linkage
    _tick(np.ascontiguousarray(indptr, dtype=np.int64), np.ascontiguousarray(indices, dtype=np.int64),
          np.ascontiguousarray(p_agent, dtype=np.float64), np.ascontiguousarray(T, dtype=np.float64),
          np.ascontiguousarray(a, dtype=np.uint8), np.ascontiguousarray(f_row, dtype=np.float64),
          np.ascontiguousarray(forced_row, dtype=np.uint8),
          a_p, b_p, a_T, b_T, closed, T1, P1, a1)
    return T1, P1, a1


def simulate(indptr, indices, p_agent, T0, a0, f, forced, linkage, closed=False):
    """Run ``horizon = f.shape[0]`` ticks; layout as in the numpy backend."""
    cdef Py_ssize_t horizon = f.shape[0]
    cdef Py_ssize_t n = f.shape[1]
    cdef Py_ssize_t t
    cdef double a_p, b_p, a_T, b_T
    a_p, b_p, a_T, b_T = linkage
    cdef bint c_closed = closed
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] pa = np.ascontiguousarray(p_agent, dtype=np.float64)
    cdef const double[:, ::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const cnp.uint8_t[:, ::1] fo = np.ascontiguousarray(forced, dtype=np.uint8)
    A = np.zeros((horizon + 1, n), dtype=np.uint8)
    T = np.zeros((horizon + 1, n))
    P = np.zeros((horizon + 1, n))
    A[0] = a0
    T[0] = T0
    cdef cnp.uint8_t[:, ::1] Av = A
    cdef double[:, ::1] Tv = T
    cdef double[:, ::1] Pv = P
    with nogil:
        for t in range(horizon):
            _tick(ip, ix, pa, Tv[t], Av[t], fv[t], fo[t + 1],
                  a_p, b_p, a_T, b_T, c_closed, Tv[t + 1], Pv[t + 1], Av[t + 1])
    return A, T, P


def pro_series(indptr, indices, p_agent, T0, a0, f, forced, linkage, closed=False):
    """Fraction of acting agents per tick using two rolling state buffers."""
    cdef Py_ssize_t horizon = f.shape[0]
    cdef Py_ssize_t n = f.shape[1]
    cdef Py_ssize_t t, i
    cdef long total
    cdef double a_p, b_p, a_T, b_T
    a_p, b_p, a_T, b_T = linkage
    cdef bint c_closed = closed
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] pa = np.ascontiguousarray(p_agent, dtype=np.float64)
    cdef const double[:, ::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const cnp.uint8_t[:, ::1] fo = np.ascontiguousarray(forced, dtype=np.uint8)
    Tb = np.zeros((2, n))
    Pb = np.zeros((2, n))
    Ab = np.zeros((2, n), dtype=np.uint8)
    Tb[0] = T0
    Ab[0] = a0
    out = np.zeros(horizon + 1)
    cdef double[:, ::1] Tv = Tb
    cdef double[:, ::1] Pv = Pb
    cdef cnp.uint8_t[:, ::1] Av = Ab
    cdef double[::1] ov = out
    cdef Py_ssize_t cur = 0
    with nogil:
        total = 0
        for i in range(n):
            total = total + Av[0, i]
        ov[0] = <double>total / <double>n
        for t in range(horizon):
            _tick(ip, ix, pa, Tv[cur], Av[cur], fv[t], fo[t + 1],
                  a_p, b_p, a_T, b_T, c_closed, Tv[1 - cur], Pv[1 - cur], Av[1 - cur])
            cur = 1 - cur
            total = 0
            for i in range(n):
                total = total + Av[cur, i]
            ov[t + 1] = <double>total / <double>n
    return out
