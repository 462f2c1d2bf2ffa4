"""Minimal float64 reverse-mode differentiation kernel with Adam."""

from . import ops
from .adam import Adam, AdamState, adam_step
from .ops import primitive_forward
from .tensor import Tape, Tensor, active_tape, as_tensor, backward

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "active_tape",
    "adam_step",
    "as_tensor",
    "backward",
    "ops",
    "primitive_forward",
]
