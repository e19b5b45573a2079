"""Minimal reverse-mode autodiff: tensors, primitives, parameters, checking."""

from . import ops
from .gradcheck import GradCheckReport, grad_check
from .params import Parameter, ParameterStore, scaled_uniform_bound
from .tensor import Tensor, as_tensor, backward, grad_enabled, no_grad

__all__ = [
    "GradCheckReport",
    "Parameter",
    "ParameterStore",
    "Tensor",
    "as_tensor",
    "backward",
    "grad_check",
    "grad_enabled",
    "no_grad",
    "ops",
    "scaled_uniform_bound",
]
