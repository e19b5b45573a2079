"""Named trainable parameters and their seeded initialization.

A ``ParameterStore`` owns every parameter of a model, keyed by a unique
path-like name, created in a deterministic order from one seeded generator.
``finalize`` packs values and gradients into two flat master buffers and
rebinds each parameter's arrays as views, so the optimizer and the gradient
clipper work on two vectors instead of hundreds of small arrays.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Parameter(Tensor):
    """A leaf tensor with a name, a persistent gradient buffer, and a flag."""

    __slots__ = ("name", "trainable")

    def __init__(self, data: np.ndarray, name: str, trainable: bool = True):
        super().__init__(data)
        self.name = name
        self.trainable = trainable
        self.grad = np.zeros_like(self.data)
        self.op = f"param:{name}"


def scaled_uniform_bound(shape: tuple[int, ...]) -> float:
    """Bound of the init range: sqrt(6 / (fan_in + fan_out)).

    Matrices and tables use their two dims as fans; vectors treated as
    fan_out 1.
    """
    fan_in = shape[0] if shape else 1
    fan_out = shape[1] if len(shape) > 1 else 1
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class ParameterStore:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self._params: dict[str, Parameter] = {}
        self.flat_values: np.ndarray | None = None
        self.flat_grads: np.ndarray | None = None

    def weight(self, name: str, *shape: int) -> Parameter:
        bound = scaled_uniform_bound(shape)
        data = self.rng.uniform(-bound, bound, size=shape)
        return self._register(Parameter(data, name))

    def bias(self, name: str, *shape: int) -> Parameter:
        return self._register(Parameter(np.zeros(shape), name))

    def _register(self, param: Parameter) -> Parameter:
        if self.flat_values is not None:
            raise ValueError("parameter store already finalized")
        if param.name in self._params:
            raise ValueError(f"duplicate parameter name {param.name!r}")
        self._params[param.name] = param
        return param

    def parameters(self) -> list[Parameter]:
        return list(self._params.values())

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    @property
    def size(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def finalize(self) -> None:
        """Pack values/grads into master vectors; parameters become views."""
        if self.flat_values is not None:
            return
        total = self.size
        self.flat_values = np.empty(total)
        self.flat_grads = np.zeros(total)
        offset = 0
        for p in self._params.values():
            n = p.data.size
            view = self.flat_values[offset : offset + n].reshape(p.data.shape)
            view[...] = p.data
            p.data = view
            p.grad = self.flat_grads[offset : offset + n].reshape(p.data.shape)
            offset += n

    def zero_grad(self) -> None:
        if self.flat_grads is not None:
            self.flat_grads[:] = 0.0
        else:
            for p in self._params.values():
                p.grad[...] = 0.0

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise ValueError(
                f"parameter name mismatch (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})"
            )
        for name, p in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: "
                    f"{value.shape} vs {p.data.shape}"
                )
            p.data[...] = value
