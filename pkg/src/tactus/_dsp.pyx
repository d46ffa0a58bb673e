# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: sparse Viterbi/forward decoding and comb filtering.

Semantics match ``tactus._dsp_py``; see there for documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp

cnp.import_array()


def viterbi_sparse(double[:, ::1] log_lik, int[::1] from_state, int[::1] to_state,
                   double[::1] log_prob, double[::1] log_initial):
    cdef Py_ssize_t num_frames = log_lik.shape[0]
    cdef Py_ssize_t num_states = log_lik.shape[1]
    cdef Py_ssize_t num_edges = from_state.shape[0]
    cdef Py_ssize_t t, j, e, best
    cdef double cand, log_p

    pointers_arr = np.full((num_frames, num_states), -1, dtype=np.int32)
    cdef int[:, ::1] pointers = pointers_arr
    delta_arr = np.empty(num_states)
    new_arr = np.empty(num_states)
    cdef double[::1] delta = delta_arr
    cdef double[::1] new = new_arr

    for j in range(num_states):
        delta[j] = log_initial[j] + log_lik[0, j]
    for t in range(1, num_frames):
        for j in range(num_states):
            new[j] = -INFINITY
        for e in range(num_edges):
            cand = delta[from_state[e]] + log_prob[e]
            if cand > new[to_state[e]]:
                new[to_state[e]] = cand
                pointers[t, to_state[e]] = from_state[e]
        for j in range(num_states):
            delta[j] = new[j] + log_lik[t, j]

    best = 0
    for j in range(1, num_states):
        if delta[j] > delta[best]:
            best = j
    log_p = delta[best]
    path_arr = np.zeros(num_frames, dtype=np.int32)
    cdef int[::1] path = path_arr
    if log_p == -INFINITY:
        return path_arr, -INFINITY
    path[num_frames - 1] = <int>best
    for t in range(num_frames - 1, 0, -1):
        path[t - 1] = pointers[t, path[t]]
    return path_arr, log_p


def forward_sparse(double[:, ::1] log_lik, int[::1] from_state, int[::1] to_state,
                   double[::1] prob, double[::1] initial):
    cdef Py_ssize_t num_frames = log_lik.shape[0]
    cdef Py_ssize_t num_states = log_lik.shape[1]
    cdef Py_ssize_t num_edges = from_state.shape[0]
    cdef Py_ssize_t t, j, e
    cdef double shift, total

    out_arr = np.zeros((num_frames, num_states))
    cdef double[:, ::1] out = out_arr
    alpha_arr = np.array(initial, dtype=np.float64, copy=True)
    new_arr = np.empty(num_states)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] new = new_arr

    for t in range(num_frames):
        if t > 0:
            for j in range(num_states):
                new[j] = 0.0
            for e in range(num_edges):
                new[to_state[e]] += alpha[from_state[e]] * prob[e]
            for j in range(num_states):
                alpha[j] = new[j]
        shift = log_lik[t, 0]
        for j in range(1, num_states):
            if log_lik[t, j] > shift:
                shift = log_lik[t, j]
        if shift == -INFINITY:
            return out_arr, t
        total = 0.0
        for j in range(num_states):
            alpha[j] *= exp(log_lik[t, j] - shift)
            total += alpha[j]
        if total <= 0.0:
            return out_arr, t
        for j in range(num_states):
            alpha[j] /= total
            out[t, j] = alpha[j]
    return out_arr, -1


def comb_filter_bank(double[::1] x, int min_lag, int max_lag, double alpha):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, t
    cdef int lag
    cdef double strength

    strengths_arr = np.empty(max_lag - min_lag + 1)
    y_arr = np.empty(n)
    cdef double[::1] strengths = strengths_arr
    cdef double[::1] y = y_arr

    for i in range(max_lag - min_lag + 1):
        lag = min_lag + <int>i
        for t in range(n):
            y[t] = x[t]
        for t in range(lag, n):
            y[t] += alpha * y[t - lag]
        strength = 0.0
        for t in range(n):
            strength += x[t] * y[t]
        strengths[i] = strength
    return strengths_arr
