# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled lane for the sequential hot kernels.

Mirrors ``starner.kernels.pyfallback`` exactly: recurrent scan forward and
reverse, CRF log-partition forward and posterior-weighted reverse.  Gate order
is reset, update, candidate; CRF row G is the start state and column G+1 the
end state.
"""

import numpy as np

from libc.math cimport exp, log, tanh


def gru_scan_forward(double[:, :, ::1] gx, double[:, ::1] h0,
                     double[:, ::1] wh, double[::1] bh):
    cdef Py_ssize_t t_len = gx.shape[0], batch = gx.shape[1]
    cdef Py_ssize_t hidden = gx.shape[2] // 3
    h_out_arr = np.empty((t_len, batch, hidden))
    cache_arr = np.empty((t_len, batch, 4 * hidden))
    gh_arr = np.empty((batch, 3 * hidden))
    cdef double[:, :, ::1] h_out = h_out_arr
    cdef double[:, :, ::1] cache = cache_arr
    cdef double[:, ::1] gh = gh_arr
    cdef Py_ssize_t t, b, i, j
    cdef double hv, r, z, n, ghn, h_prev
    for t in range(t_len):
        for b in range(batch):
            for j in range(3 * hidden):
                gh[b, j] = bh[j]
            for i in range(hidden):
                hv = h0[b, i] if t == 0 else h_out[t - 1, b, i]
                for j in range(3 * hidden):
                    gh[b, j] += hv * wh[i, j]
            for j in range(hidden):
                h_prev = h0[b, j] if t == 0 else h_out[t - 1, b, j]
                r = 1.0 / (1.0 + exp(-(gx[t, b, j] + gh[b, j])))
                z = 1.0 / (1.0 + exp(-(gx[t, b, hidden + j] + gh[b, hidden + j])))
                ghn = gh[b, 2 * hidden + j]
                n = tanh(gx[t, b, 2 * hidden + j] + r * ghn)
                h_out[t, b, j] = (1.0 - z) * n + z * h_prev
                cache[t, b, j] = r
                cache[t, b, hidden + j] = z
                cache[t, b, 2 * hidden + j] = n
                cache[t, b, 3 * hidden + j] = ghn
    return h_out_arr, cache_arr


def gru_scan_backward(double[:, :, ::1] d_out, double[:, :, ::1] h_out,
                      double[:, :, ::1] cache, double[:, ::1] h0,
                      double[:, ::1] wh):
    cdef Py_ssize_t t_len = d_out.shape[0], batch = d_out.shape[1]
    cdef Py_ssize_t hidden = d_out.shape[2]
    dgx_arr = np.empty((t_len, batch, 3 * hidden))
    dwh_arr = np.zeros((hidden, 3 * hidden))
    dbh_arr = np.zeros(3 * hidden)
    carry_arr = np.zeros((batch, hidden))
    dgh_arr = np.empty((batch, 3 * hidden))
    cdef double[:, :, ::1] dgx = dgx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] dbh = dbh_arr
    cdef double[:, ::1] carry = carry_arr
    cdef double[:, ::1] dgh = dgh_arr
    cdef Py_ssize_t t, b, i, j
    cdef double delta, h_prev, r, z, n, ghn, dz_pre, dn_pre, dr_pre, acc, hv
    for t in range(t_len - 1, -1, -1):
        for b in range(batch):
            for j in range(hidden):
                delta = d_out[t, b, j] + carry[b, j]
                h_prev = h0[b, j] if t == 0 else h_out[t - 1, b, j]
                r = cache[t, b, j]
                z = cache[t, b, hidden + j]
                n = cache[t, b, 2 * hidden + j]
                ghn = cache[t, b, 3 * hidden + j]
                dz_pre = delta * (h_prev - n) * z * (1.0 - z)
                dn_pre = delta * (1.0 - z) * (1.0 - n * n)
                dr_pre = dn_pre * ghn * r * (1.0 - r)
                dgx[t, b, j] = dr_pre
                dgx[t, b, hidden + j] = dz_pre
                dgx[t, b, 2 * hidden + j] = dn_pre
                dgh[b, j] = dr_pre
                dgh[b, hidden + j] = dz_pre
                dgh[b, 2 * hidden + j] = dn_pre * r
                carry[b, j] = delta * z
            for i in range(hidden):
                hv = h0[b, i] if t == 0 else h_out[t - 1, b, i]
                acc = 0.0
                for j in range(3 * hidden):
                    dwh[i, j] += hv * dgh[b, j]
                    acc += dgh[b, j] * wh[i, j]
                carry[b, i] += acc
            for j in range(3 * hidden):
                dbh[j] += dgh[b, j]
    return dgx_arr, carry_arr, dwh_arr, dbh_arr


def crf_forward(double[:, ::1] emissions, double[:, ::1] transitions):
    cdef Py_ssize_t length = emissions.shape[0], tags = emissions.shape[1]
    cdef Py_ssize_t start = tags, end = tags + 1
    alpha_arr = np.empty((length, tags))
    cdef double[:, ::1] alpha = alpha_arr
    cdef Py_ssize_t i, a, b
    cdef double hi, acc, v
    for b in range(tags):
        alpha[0, b] = transitions[start, b] + emissions[0, b]
    for i in range(1, length):
        for b in range(tags):
            hi = alpha[i - 1, 0] + transitions[0, b]
            for a in range(1, tags):
                v = alpha[i - 1, a] + transitions[a, b]
                if v > hi:
                    hi = v
            acc = 0.0
            for a in range(tags):
                acc += exp(alpha[i - 1, a] + transitions[a, b] - hi)
            alpha[i, b] = log(acc) + hi + emissions[i, b]
    hi = alpha[length - 1, 0] + transitions[0, end]
    for a in range(1, tags):
        v = alpha[length - 1, a] + transitions[a, end]
        if v > hi:
            hi = v
    acc = 0.0
    for a in range(tags):
        acc += exp(alpha[length - 1, a] + transitions[a, end] - hi)
    return float(log(acc) + hi), alpha_arr


def crf_backward(double[:, ::1] emissions, double[:, ::1] transitions,
                 double[:, ::1] alpha, double log_z, double g_scale):
    cdef Py_ssize_t length = emissions.shape[0], tags = emissions.shape[1]
    cdef Py_ssize_t start = tags, end = tags + 1
    beta_arr = np.empty((length, tags))
    d_emis_arr = np.empty((length, tags))
    d_trans_arr = np.zeros((tags + 2, tags + 2))
    cdef double[:, ::1] beta = beta_arr
    cdef double[:, ::1] d_emis = d_emis_arr
    cdef double[:, ::1] d_trans = d_trans_arr
    cdef Py_ssize_t i, a, b
    cdef double hi, acc, v, unary
    for a in range(tags):
        beta[length - 1, a] = transitions[a, end]
    for i in range(length - 2, -1, -1):
        for a in range(tags):
            hi = transitions[a, 0] + emissions[i + 1, 0] + beta[i + 1, 0]
            for b in range(1, tags):
                v = transitions[a, b] + emissions[i + 1, b] + beta[i + 1, b]
                if v > hi:
                    hi = v
            acc = 0.0
            for b in range(tags):
                acc += exp(transitions[a, b] + emissions[i + 1, b] + beta[i + 1, b] - hi)
            beta[i, a] = log(acc) + hi
    for i in range(length):
        for a in range(tags):
            d_emis[i, a] = exp(alpha[i, a] + beta[i, a] - log_z) * g_scale
    for i in range(length - 1):
        for a in range(tags):
            for b in range(tags):
                d_trans[a, b] += exp(
                    alpha[i, a] + transitions[a, b]
                    + emissions[i + 1, b] + beta[i + 1, b] - log_z
                ) * g_scale
    for b in range(tags):
        d_trans[start, b] = d_emis[0, b]
        d_trans[b, end] = d_emis[length - 1, b]
    return d_emis_arr, d_trans_arr
