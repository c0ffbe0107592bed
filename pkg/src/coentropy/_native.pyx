# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirrors ``_pykern`` exactly: same accumulation order, same libm calls, so
both backends return bit-identical values on one platform. See _pykern for
the conventions (nats, 0*ln(0)=0, +inf on KL support violation).
"""

from libc.math cimport log, sqrt, fabs, INFINITY

import numpy as np

BACKEND_NAME = "c"


def entropy(const double[::1] p):
    """Shannon entropy -sum(p*ln(p)) in nats."""
    cdef double acc = 0.0
    cdef double x
    cdef Py_ssize_t j
    for j in range(p.shape[0]):
        x = p[j]
        if x > 0.0:
            acc += -(x * log(x))
    return acc


def kl(const double[::1] p, const double[::1] q):
    """KL divergence sum(p*ln(p/q)); +inf on a support violation."""
    cdef double acc = 0.0
    cdef double x, y
    cdef Py_ssize_t j
    for j in range(p.shape[0]):
        x = p[j]
        if x > 0.0:
            y = q[j]
            if y == 0.0:
                return INFINITY
            acc += x * log(x / y)
    return acc


def js(const double[::1] p, const double[::1] q):
    """Jensen-Shannon divergence against the half-half mixture, in nats."""
    cdef double acc_p = 0.0
    cdef double acc_q = 0.0
    cdef double x, y, m
    cdef Py_ssize_t j
    for j in range(p.shape[0]):
        x = p[j]
        if x > 0.0:
            m = 0.5 * (x + q[j])
            acc_p += x * log(x / m)
    for j in range(q.shape[0]):
        y = q[j]
        if y > 0.0:
            m = 0.5 * (p[j] + y)
            acc_q += y * log(y / m)
    return 0.5 * acc_p + 0.5 * acc_q


def hellinger(const double[::1] p, const double[::1] q):
    """Hellinger distance sqrt(0.5*sum((sqrt(p)-sqrt(q))^2)), in [0, 1]."""
    cdef double acc = 0.0
    cdef double d, h
    cdef Py_ssize_t j
    for j in range(p.shape[0]):
        d = sqrt(p[j]) - sqrt(q[j])
        acc += d * d
    h = sqrt(0.5 * acc)
    return 1.0 if h > 1.0 else h


def tv(const double[::1] p, const double[::1] q):
    """Total variation distance 0.5*sum(|p - q|)."""
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(p.shape[0]):
        acc += fabs(p[j] - q[j])
    return 0.5 * acc


def mixture(const double[:, ::1] stack, const double[::1] weights):
    """Weight-convex combination of the rows of ``stack``; returns a list."""
    cdef Py_ssize_t n_rows = stack.shape[0]
    cdef Py_ssize_t n_cols = stack.shape[1]
    out = np.empty(n_cols, dtype=np.float64)
    cdef double[::1] mv = out
    cdef double acc
    cdef Py_ssize_t i, j
    for j in range(n_cols):
        acc = 0.0
        for i in range(n_rows):
            acc += weights[i] * stack[i, j]
        mv[j] = acc
    return out.tolist()
