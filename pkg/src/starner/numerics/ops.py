"""Differentiable primitive operations.

Closed set used by the whole model: linear algebra (matmul, affine),
elementwise arithmetic and nonlinearities, concatenation, masked softmax,
log-sum-exp, pooling, row gather, and a handful of structural helpers
(reshape, transpose, axis sum).  Each primitive computes forward with NumPy
and, when recording, attaches a closure with the exact reverse rule.  The
fused recurrent scan lives here too and dispatches to the active kernel lane.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels
from .tensor import Tensor, as_tensor, record


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape of a broadcast operand."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1
    )
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def build():
        sa, sb = a.data.shape, b.data.shape
        return lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))

    return record(out, (a, b), build, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def build():
        sa, sb = a.data.shape, b.data.shape
        return lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb))

    return record(out, (a, b), build, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def build():
        ad, bd = a.data, b.data
        return lambda g: (
            _unbroadcast(g * bd, ad.shape),
            _unbroadcast(g * ad, bd.shape),
        )

    return record(out, (a, b), build, "mul")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def build():
        ad, bd = a.data, b.data

        def bwd(g):
            if ad.ndim == 1 and bd.ndim >= 2:
                ga = g @ np.swapaxes(bd, -1, -2)
                gb = np.multiply.outer(ad, g) if bd.ndim == 2 else None
                if gb is None:
                    raise ValueError("unsupported matmul arity")
            elif bd.ndim == 1 and ad.ndim >= 2:
                ga = np.multiply.outer(g, bd) if ad.ndim == 2 else None
                if ga is None:
                    raise ValueError("unsupported matmul arity")
                gb = np.swapaxes(ad, -1, -2) @ g
            else:
                ga = g @ np.swapaxes(bd, -1, -2)
                gb = np.swapaxes(ad, -1, -2) @ g
            return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

        return bwd

    return record(out, (a, b), build, "matmul")


def affine(x, w, b) -> Tensor:
    """x @ w + b with w strictly 2-D and b 1-D; x may carry leading axes."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    out = x.data @ w.data + b.data

    def build():
        xd, wd = x.data, w.data

        def bwd(g):
            gx = g @ wd.T
            gw = xd.reshape(-1, xd.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            gb = g.reshape(-1, g.shape[-1]).sum(axis=0)
            return gx.reshape(xd.shape), gw, gb

        return bwd

    return record(out, (x, w, b), build, "affine")


def concat(parts: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(p) for p in parts]
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def build():
        sizes = [t.data.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]
        return lambda g: tuple(np.split(g, splits, axis=axis))

    return record(out, tuple(tensors), build, "concat")


def maximum(a, b) -> Tensor:
    """Elementwise max; ties route the gradient to the first operand."""
    a, b = as_tensor(a), as_tensor(b)
    out = np.maximum(a.data, b.data)

    def build():
        take_a = a.data >= b.data
        sa, sb = a.data.shape, b.data.shape
        return lambda g: (
            _unbroadcast(np.where(take_a, g, 0.0), sa),
            _unbroadcast(np.where(take_a, 0.0, g), sb),
        )

    return record(out, (a, b), build, "maximum")


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = 1.0 / (1.0 + np.exp(-x.data))

    def build():
        return lambda g: (g * out * (1.0 - out),)

    return record(out, (x,), build, "sigmoid")


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)

    def build():
        return lambda g: (g * (1.0 - out * out),)

    return record(out, (x,), build, "tanh")


def leaky_relu(x, slope: float = 0.01) -> Tensor:
    x = as_tensor(x)
    out = np.where(x.data > 0.0, x.data, slope * x.data)

    def build():
        scale = np.where(x.data > 0.0, 1.0, slope)
        return lambda g: (g * scale,)

    return record(out, (x,), build, "leaky_relu")


def masked_softmax(x, mask, axis: int = -1) -> Tensor:
    """Softmax over ``axis`` with boolean ``mask`` (True = participate).

    Masked slots receive exactly zero weight; each row must keep at least one
    unmasked slot.
    """
    x = as_tensor(x)
    m = np.broadcast_to(np.asarray(mask, dtype=bool), x.data.shape)
    if not m.any(axis=axis).all():
        raise ValueError("masked_softmax row with every slot masked")
    neg = np.where(m, x.data, -np.inf)
    shift = neg - neg.max(axis=axis, keepdims=True)
    weights = np.where(m, np.exp(shift), 0.0)
    out = weights / weights.sum(axis=axis, keepdims=True)

    def build():
        def bwd(g):
            inner = (g * out).sum(axis=axis, keepdims=True)
            return (out * (g - inner),)

        return bwd

    return record(out, (x,), build, "masked_softmax")


def logsumexp(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    hi = x.data.max(axis=axis, keepdims=True)
    out = np.log(np.exp(x.data - hi).sum(axis=axis, keepdims=True)) + hi

    def build():
        soft = np.exp(x.data - out)
        return lambda g: (np.expand_dims(g, axis) * soft,)

    squeezed = np.squeeze(out, axis=axis)
    return record(squeezed, (x,), build, "logsumexp")


def max_pool(x, axis: int = 0) -> Tensor:
    """Max over one axis; ties route the gradient to the lowest index."""
    x = as_tensor(x)
    idx = np.argmax(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis)

    def build():
        def bwd(g):
            gx = np.zeros_like(x.data)
            np.put_along_axis(
                gx, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis
            )
            return (gx,)

        return bwd

    return record(np.squeeze(out, axis=axis), (x,), build, "max_pool")


def mean_pool(x, axis: int = 0) -> Tensor:
    x = as_tensor(x)
    out = x.data.mean(axis=axis)

    def build():
        n = x.data.shape[axis]
        shape = x.data.shape
        return lambda g: (np.broadcast_to(np.expand_dims(g / n, axis), shape).copy(),)

    return record(out, (x,), build, "mean_pool")


def gather_rows(x, indices) -> Tensor:
    """Select rows along axis 0; duplicate indices accumulate on backward."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.intp)
    out = x.data[idx]

    def build():
        def bwd(g):
            gx = np.zeros_like(x.data)
            np.add.at(gx, idx, g)
            return (gx,)

        return bwd

    return record(out, (x,), build, "gather_rows")


def sum_along(x, axis: int, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def build():
        shape = x.data.shape

        def bwd(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return bwd

    return record(out, (x,), build, "sum")


def reshape(x, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)

    def build():
        orig = x.data.shape
        return lambda g: (g.reshape(orig),)

    return record(x.data.reshape(shape), (x,), build, "reshape")


def transpose(x, axes: tuple[int, ...] | None = None) -> Tensor:
    x = as_tensor(x)
    out = np.transpose(x.data, axes)

    def build():
        inverse = None if axes is None else tuple(np.argsort(axes))
        return lambda g: (np.transpose(g, inverse),)

    return record(out, (x,), build, "transpose")


def gru_scan(x_seq, h0, wx, wh, bx, bh) -> Tensor:
    """Run a gated recurrent cell over a sequence, one fused tape node.

    ``x_seq`` is (T, B, d_in), ``h0`` (B, H); weights are stacked gate-wise
    as (d_in, 3H), (H, 3H), (3H,), (3H,) in gate order reset, update,
    candidate.  Returns every step's state, shape (T, B, H).  Forward and
    reverse run on the active kernel lane.
    """
    x_seq, h0 = as_tensor(x_seq), as_tensor(h0)
    wx, wh, bx, bh = as_tensor(wx), as_tensor(wh), as_tensor(bx), as_tensor(bh)
    t_len, batch, d_in = x_seq.data.shape
    hidden = h0.data.shape[-1]
    gx = x_seq.data.reshape(t_len * batch, d_in) @ wx.data + bx.data
    gx = np.ascontiguousarray(gx.reshape(t_len, batch, 3 * hidden))
    h_out, cache = kernels.gru_scan_forward(
        gx, np.ascontiguousarray(h0.data), np.ascontiguousarray(wh.data), bh.data
    )

    def build():
        def bwd(g):
            dgx, dh0, dwh, dbh = kernels.gru_scan_backward(
                np.ascontiguousarray(g), h_out, cache, h0.data, wh.data
            )
            flat_dgx = dgx.reshape(t_len * batch, 3 * hidden)
            flat_x = x_seq.data.reshape(t_len * batch, d_in)
            dx = (flat_dgx @ wx.data.T).reshape(x_seq.data.shape)
            dwx = flat_x.T @ flat_dgx
            dbx = flat_dgx.sum(axis=0)
            return dx, dh0, dwx, dwh, dbx, dbh

        return bwd

    return record(h_out, (x_seq, h0, wx, wh, bx, bh), build, "gru_scan")
