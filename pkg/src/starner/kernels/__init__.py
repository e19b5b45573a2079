"""Kernel lane selection: compiled extension with a NumPy fallback.

The sequential hot loops (recurrent scans, CRF recursions) exist twice: in
``starner._core`` (Cython) and in ``pyfallback`` (NumPy).  At import time the
compiled lane is chosen when available; ``STARNER_KERNELS`` (``auto``, ``ext``,
``py``) or ``set_lane`` overrides.  Both lanes implement identical contracts
and the test suite asserts their outputs agree.
"""

from __future__ import annotations

import os

import numpy as np

from . import pyfallback

try:
    from .. import _core
except ImportError:
    _core = None

_LANE = "py"


def available_lanes() -> tuple[str, ...]:
    return ("py", "ext") if _core is not None else ("py",)


def active_lane() -> str:
    return _LANE


def set_lane(name: str) -> str:
    """Select ``py``, ``ext``, or ``auto`` (prefer compiled); returns choice."""
    global _LANE
    if name == "auto":
        name = "ext" if _core is not None else "py"
    if name not in available_lanes():
        raise ValueError(f"kernel lane {name!r} unavailable")
    _LANE = name
    return _LANE


set_lane(os.environ.get("STARNER_KERNELS", "auto"))


def _f(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def gru_scan_forward(gx, h0, wh, bh):
    if _LANE == "ext":
        return _core.gru_scan_forward(_f(gx), _f(h0), _f(wh), _f(bh))
    return pyfallback.gru_scan_forward(gx, h0, wh, bh)


def gru_scan_backward(d_out, h_out, cache, h0, wh):
    if _LANE == "ext":
        return _core.gru_scan_backward(_f(d_out), _f(h_out), _f(cache), _f(h0), _f(wh))
    return pyfallback.gru_scan_backward(d_out, h_out, cache, h0, wh)


def crf_forward(emissions, transitions):
    if _LANE == "ext":
        return _core.crf_forward(_f(emissions), _f(transitions))
    return pyfallback.crf_forward(emissions, transitions)


def crf_backward(emissions, transitions, alpha, log_z, g_scale):
    if _LANE == "ext":
        return _core.crf_backward(
            _f(emissions), _f(transitions), _f(alpha), float(log_z), float(g_scale)
        )
    return pyfallback.crf_backward(emissions, transitions, alpha, log_z, g_scale)


def viterbi(emissions, transitions):
    return pyfallback.viterbi(emissions, transitions)
