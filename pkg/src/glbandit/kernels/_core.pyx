# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels: rank-one inverse updates and arm scoring.

Mirrors ``_reference.py``; keep the two implementations in lock step.
"""

import numpy as np

from libc.math cimport sqrt

NAME = "cython"


def rank_one_update(double[:, ::1] A, double[:, ::1] Ainv, double[::1] x):
    """Apply A += x x^T in place and downdate Ainv by Sherman-Morrison.

    Returns the fresh vector Ainv_new @ x.
    """
    cdef Py_ssize_t d = x.shape[0]
    w_arr = np.empty(d)
    cdef double[::1] w = w_arr
    cdef Py_ssize_t i, j
    cdef double s = 0.0, denom, acc
    with nogil:
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += Ainv[i, j] * x[j]
            w[i] = acc
            s += acc * x[i]
        denom = 1.0 + s
        for i in range(d):
            for j in range(d):
                Ainv[i, j] -= w[i] * w[j] / denom
                A[i, j] += x[i] * x[j]
        for i in range(d):
            w[i] /= denom
    return w_arr


def quad_forms(double[:, ::1] X, double[:, ::1] M):
    """Row-wise quadratic forms x_i^T M x_i for the rows of X."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, tj
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                tj = 0.0
                for k in range(d):
                    tj += M[j, k] * X[i, k]
                acc += tj * X[i, j]
            out[i] = acc
    return out_arr


def ucb_scores(double[:, ::1] X, double[::1] theta, double[:, ::1] Minv,
               double sqrt_radius):
    """x^T theta + sqrt_radius * ||x||_Minv for each row x of X."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, lin, tj
    with nogil:
        for i in range(n):
            acc = 0.0
            lin = 0.0
            for j in range(d):
                tj = 0.0
                for k in range(d):
                    tj += Minv[j, k] * X[i, k]
                acc += tj * X[i, j]
                lin += theta[j] * X[i, j]
            if acc < 0.0:
                acc = 0.0
            out[i] = lin + sqrt_radius * sqrt(acc)
    return out_arr


def quad_scores(double[:, ::1] X, double[::1] theta, double[:, ::1] Minv,
                double coef):
    """x^T theta + coef * ||x||^2_Minv for each row x of X."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, lin, tj
    with nogil:
        for i in range(n):
            acc = 0.0
            lin = 0.0
            for j in range(d):
                tj = 0.0
                for k in range(d):
                    tj += Minv[j, k] * X[i, k]
                acc += tj * X[i, j]
                lin += theta[j] * X[i, j]
            out[i] = lin + coef * acc
    return out_arr
