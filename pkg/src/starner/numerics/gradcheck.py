"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .params import Parameter
from .tensor import Tensor, backward, no_grad


@dataclass
class CoordinateError:
    name: str
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    max_rel_error: float
    coords_checked: int
    worst: CoordinateError | None


def grad_check(
    loss_fn: Callable[[], Tensor],
    parameters: Sequence[Parameter],
    *,
    epsilon: float = 1e-5,
    min_coords: int = 64,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic parameter gradients against central differences.

    ``loss_fn`` rebuilds and evaluates the scalar loss from the current
    parameter values.  It must be deterministic: it is evaluated twice up
    front and any discrepancy is an error.  Per parameter, up to
    ``min_coords`` coordinates are sampled (all of them for small arrays);
    each is perturbed by ±epsilon with the tape off.  The relative error of a
    coordinate is |a − n| / max(1e-8, |a| + |n|).
    """
    if not 1e-6 <= epsilon <= 1e-4:
        raise ValueError(f"epsilon {epsilon} outside [1e-6, 1e-4]")
    with no_grad():
        first = float(loss_fn().data)
        second = float(loss_fn().data)
    if first != second:
        raise RuntimeError(
            f"loss_fn is not deterministic ({first!r} vs {second!r})"
        )

    for p in parameters:
        p.grad[...] = 0.0
    backward(loss_fn(), parameters)
    analytic = {p.name: p.grad.copy() for p in parameters}

    rng = np.random.default_rng(seed)
    worst: CoordinateError | None = None
    checked = 0
    for p in parameters:
        flat = p.data.reshape(-1)
        size = flat.size
        if size <= min_coords:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=min_coords, replace=False)
        a_flat = analytic[p.name].reshape(-1)
        for c in coords:
            original = flat[c]
            with no_grad():
                flat[c] = original + epsilon
                plus = float(loss_fn().data)
                flat[c] = original - epsilon
                minus = float(loss_fn().data)
            flat[c] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            a = float(a_flat[c])
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            checked += 1
            if worst is None or rel > worst.rel_error:
                worst = CoordinateError(p.name, int(c), a, numeric, rel)
    return GradCheckReport(
        max_rel_error=worst.rel_error if worst else 0.0,
        coords_checked=checked,
        worst=worst,
    )
