"""Numpy implementation of the tick kernel.

Mirrors ``_kernels.pyx`` operation for operation (neighbour sums are
accumulated sequentially in adjacency order) so both backends produce
bit-identical trajectories.
"""
import numpy as np

BACKEND = "python"


def _padded(indptr, indices):
    n = len(indptr) - 1
    deg = np.diff(indptr)
    width = int(deg.max()) if n else 0
    nbr = np.full((n, width), n, dtype=np.int64)
    for i in range(n):
        nbr[i, : deg[i]] = indices[indptr[i] : indptr[i + 1]]
    return nbr, deg


def _tick(nbr, deg, p_agent, T, a, f_row, forced_row, linkage, closed):
    n = T.shape[0]
    a_p, b_p, a_T, b_T = linkage
    T_ext = np.zeros(n + 1)
    T_ext[:n] = T
    a_ext = np.zeros(n + 1, dtype=np.int64)
    a_ext[:n] = a
    acc = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for col in range(nbr.shape[1]):
        idx = nbr[:, col]
        acc += T_ext[idx]
        count += a_ext[idx]
    has = deg > 0
    T1 = T.copy()
    P1 = np.zeros(n)
    if closed:
        acc += T
        T1 = acc / (deg + 1)
    else:
        T1[has] = acc[has] / deg[has]
    P1[has] = count[has] / deg[has]
    lhs = f_row * p_agent * (a_p + b_p * P1)
    rhs = (1.0 - f_row) * (1.0 - p_agent) * (a_T + b_T * T1)
    a1 = (lhs > rhs).astype(np.uint8)
    a1[forced_row.astype(bool)] = 1
    return T1, P1, a1


def advance(indptr, indices, p_agent, T, a, f_row, forced_row, linkage, closed=False):
    """One synchronous tick; returns ``(T, P, a)`` at t+1."""
    nbr, deg = _padded(indptr, indices)
    return _tick(nbr, deg, p_agent, np.asarray(T, float), np.asarray(a), np.asarray(f_row, float),
                 np.asarray(forced_row), linkage, closed)


def simulate(indptr, indices, p_agent, T0, a0, f, forced, linkage, closed=False):
    """Run ``horizon = f.shape[0]`` ticks.

    ``f[t]`` drives the transition t -> t+1; ``forced[t]`` (length horizon+1)
    pins agents to 1 at tick t for t >= 1.
    """
    horizon, n = f.shape
    nbr, deg = _padded(indptr, indices)
    A = np.zeros((horizon + 1, n), dtype=np.uint8)
    T = np.zeros((horizon + 1, n))
    P = np.zeros((horizon + 1, n))
    A[0] = a0
    T[0] = T0
    for t in range(horizon):
        T[t + 1], P[t + 1], A[t + 1] = _tick(nbr, deg, p_agent, T[t], A[t], f[t], forced[t + 1], linkage, closed)
    return A, T, P


def pro_series(indptr, indices, p_agent, T0, a0, f, forced, linkage, closed=False):
    """Fraction of acting agents per tick, without keeping full state."""
    A, _, _ = simulate(indptr, indices, p_agent, T0, a0, f, forced, linkage, closed)
    return A.sum(axis=1) / A.shape[1]
