"""NumPy reference implementations of the sequential hot kernels.

Semantics are the contract for the compiled lane: the Cython module must
reproduce these bit patterns (same order of operations, same log-sum-exp
shifts).  Gate order everywhere is reset, update, candidate.
"""

from __future__ import annotations

import numpy as np


def gru_scan_forward(gx, h0, wh, bh):
    """Scan a gated recurrent cell over time.

    gx : (T, B, 3H) input-side pre-activations (x @ Wx + bx)
    h0 : (B, H) initial state
    wh : (H, 3H), bh : (3H,) recurrent weights

    Returns (h_out (T, B, H), cache (T, B, 4H)); the cache stores per step
    the reset gate, update gate, candidate, and recurrent candidate
    pre-activation needed by the reverse scan.
    """
    t_len, batch, triple = gx.shape
    hidden = triple // 3
    h_out = np.empty((t_len, batch, hidden))
    cache = np.empty((t_len, batch, 4 * hidden))
    h = h0
    for t in range(t_len):
        gh = h @ wh + bh
        r = 1.0 / (1.0 + np.exp(-(gx[t, :, :hidden] + gh[:, :hidden])))
        z = 1.0 / (1.0 + np.exp(-(gx[t, :, hidden : 2 * hidden] + gh[:, hidden : 2 * hidden])))
        ghn = gh[:, 2 * hidden :]
        n = np.tanh(gx[t, :, 2 * hidden :] + r * ghn)
        h = (1.0 - z) * n + z * h
        h_out[t] = h
        cache[t, :, :hidden] = r
        cache[t, :, hidden : 2 * hidden] = z
        cache[t, :, 2 * hidden : 3 * hidden] = n
        cache[t, :, 3 * hidden :] = ghn
    return h_out, cache


def gru_scan_backward(d_out, h_out, cache, h0, wh):
    """Reverse scan: gradients of the per-step states back to the inputs.

    d_out : (T, B, H) gradient w.r.t. every emitted state
    Returns (dgx (T, B, 3H), dh0 (B, H), dwh (H, 3H), dbh (3H,)).
    """
    t_len, batch, hidden = d_out.shape
    dgx = np.empty((t_len, batch, 3 * hidden))
    dwh = np.zeros_like(wh)
    dbh = np.zeros(3 * hidden)
    carry = np.zeros((batch, hidden))
    for t in range(t_len - 1, -1, -1):
        delta = d_out[t] + carry
        h_prev = h_out[t - 1] if t > 0 else h0
        r = cache[t, :, :hidden]
        z = cache[t, :, hidden : 2 * hidden]
        n = cache[t, :, 2 * hidden : 3 * hidden]
        ghn = cache[t, :, 3 * hidden :]
        dz_pre = delta * (h_prev - n) * z * (1.0 - z)
        dn_pre = delta * (1.0 - z) * (1.0 - n * n)
        dr_pre = dn_pre * ghn * r * (1.0 - r)
        dgx[t, :, :hidden] = dr_pre
        dgx[t, :, hidden : 2 * hidden] = dz_pre
        dgx[t, :, 2 * hidden :] = dn_pre
        dgh = np.concatenate([dr_pre, dz_pre, dn_pre * r], axis=1)
        dwh += h_prev.T @ dgh
        dbh += dgh.sum(axis=0)
        carry = delta * z + dgh @ wh.T
    return dgx, carry, dwh, dbh


def crf_forward(emissions, transitions):
    """Log partition of a linear-chain CRF with boundary states.

    emissions : (L, G) per-position tag scores
    transitions : (G+2, G+2); row G is the start state, column G+1 the end.
    Returns (log_partition, alpha (L, G)).
    """
    length, tags = emissions.shape
    start, end = tags, tags + 1
    alpha = np.empty((length, tags))
    alpha[0] = transitions[start, :tags] + emissions[0]
    inner = transitions[:tags, :tags]
    for i in range(1, length):
        scores = alpha[i - 1][:, None] + inner
        hi = scores.max(axis=0)
        alpha[i] = np.log(np.exp(scores - hi).sum(axis=0)) + hi + emissions[i]
    final = alpha[length - 1] + transitions[:tags, end]
    hi = final.max()
    log_z = float(np.log(np.exp(final - hi).sum()) + hi)
    return log_z, alpha


def crf_backward(emissions, transitions, alpha, log_z, g_scale):
    """Gradient of ``g_scale * log_partition`` w.r.t. emissions/transitions.

    Runs the reverse recursion, forms per-position and per-edge posterior
    probabilities, and scales them.
    """
    length, tags = emissions.shape
    start, end = tags, tags + 1
    inner = transitions[:tags, :tags]
    beta = np.empty((length, tags))
    beta[length - 1] = transitions[:tags, end]
    for i in range(length - 2, -1, -1):
        scores = inner + (emissions[i + 1] + beta[i + 1])[None, :]
        hi = scores.max(axis=1)
        beta[i] = np.log(np.exp(scores - hi[:, None]).sum(axis=1)) + hi
    unary = np.exp(alpha + beta - log_z)
    d_emissions = unary * g_scale
    d_transitions = np.zeros_like(transitions)
    for i in range(length - 1):
        edge = np.exp(
            alpha[i][:, None] + inner + (emissions[i + 1] + beta[i + 1])[None, :] - log_z
        )
        d_transitions[:tags, :tags] += edge
    d_transitions[start, :tags] = unary[0]
    d_transitions[:tags, end] = unary[length - 1]
    d_transitions *= g_scale
    return d_emissions, d_transitions


def viterbi(emissions, transitions):
    """Best-scoring tag path; ties resolve to the lowest tag index.

    Returns (path list[int], score float) including boundary transitions.
    """
    length, tags = emissions.shape
    start, end = tags, tags + 1
    inner = transitions[:tags, :tags]
    score = transitions[start, :tags] + emissions[0]
    back = np.empty((length, tags), dtype=np.intp)
    for i in range(1, length):
        total = score[:, None] + inner
        back[i] = total.argmax(axis=0)
        score = total[back[i], np.arange(tags)] + emissions[i]
    final = score + transitions[:tags, end]
    last = int(final.argmax())
    best = float(final[last])
    path = [last]
    for i in range(length - 1, 0, -1):
        last = int(back[i, last])
        path.append(last)
    path.reverse()
    return path, best
