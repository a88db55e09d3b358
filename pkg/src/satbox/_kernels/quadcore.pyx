# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled quadratic tensor kernels; see pyref.py for the semantics.

Entries arrive sorted by output index, so quad_apply accumulates each
output run in four interleaved registers to break the floating-add
dependency chain, then stores once per run."""

import numpy as np

cimport numpy as cnp

BACKEND = "cython"


def quad_apply(cnp.int32_t[::1] c_idx, cnp.int32_t[::1] a_idx,
               cnp.int32_t[::1] b_idx, double[::1] val,
               double[::1] u, Py_ssize_t n_out):
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(n_out)
    cdef double[::1] o = out
    cdef Py_ssize_t i = 0, j, run_end, nnz = val.shape[0]
    cdef cnp.int32_t c
    cdef double s0, s1, s2, s3
    while i < nnz:
        c = c_idx[i]
        run_end = i
        while run_end < nnz and c_idx[run_end] == c:
            run_end += 1
        s0 = s1 = s2 = s3 = 0.0
        j = i
        while j + 4 <= run_end:
            s0 += val[j] * u[a_idx[j]] * u[b_idx[j]]
            s1 += val[j + 1] * u[a_idx[j + 1]] * u[b_idx[j + 1]]
            s2 += val[j + 2] * u[a_idx[j + 2]] * u[b_idx[j + 2]]
            s3 += val[j + 3] * u[a_idx[j + 3]] * u[b_idx[j + 3]]
            j += 4
        while j < run_end:
            s0 += val[j] * u[a_idx[j]] * u[b_idx[j]]
            j += 1
        o[c] += (s0 + s1) + (s2 + s3)
        i = run_end
    return out


def quad_jact(cnp.int32_t[::1] c_idx, cnp.int32_t[::1] a_idx,
              cnp.int32_t[::1] b_idx, double[::1] val,
              double[::1] u, double[::1] v, Py_ssize_t n_out):
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(n_out)
    cdef double[::1] g = out
    cdef Py_ssize_t i, nnz = val.shape[0]
    cdef double vc
    for i in range(nnz):
        vc = val[i] * v[c_idx[i]]
        g[a_idx[i]] += vc * u[b_idx[i]]
        g[b_idx[i]] += vc * u[a_idx[i]]
    return out
