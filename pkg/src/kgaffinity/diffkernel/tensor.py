"""Dense float64 tensors and the tape that records primitive applications.

A :class:`Tape` is activated with a ``with`` block.  Every primitive from
:mod:`kgaffinity.diffkernel.ops` whose inputs include a gradient-tracking
tensor appends a node to the active tape; :meth:`Tape.backward` then walks
the nodes in reverse and accumulates vector-Jacobian products.
"""

from __future__ import annotations

import contextvars
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError, TapeError

_ACTIVE_TAPE: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "kgaffinity_active_tape", default=None
)


class Tensor:
    """A float64 array with an optional gradient-tracking flag.

    Leaf tensors created with ``requires_grad=True`` are parameters.  Outputs
    of recorded primitives also track gradients but are never reported by
    :meth:`Tape.backward`.
    """

    __slots__ = ("value", "requires_grad", "name", "_tape", "__weakref__")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.array(value, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._tape: Tape | None = None

    @classmethod
    def _wrap(cls, value: np.ndarray) -> "Tensor":
        t = cls.__new__(cls)
        t.value = value
        t.requires_grad = False
        t.name = None
        t._tape = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def numpy(self) -> np.ndarray:
        return self.value

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


class _Node:
    __slots__ = ("inputs", "output", "vjp")

    def __init__(self, inputs: tuple[Tensor, ...], output: Tensor, vjp: Callable):
        self.inputs = inputs
        self.output = output
        self.vjp = vjp


class Tape:
    """Ordered record of primitive applications for one forward pass.

    One tape supports exactly one backward pass.  Use as a context manager::

        with Tape() as tape:
            loss = ops.l2_norm(p)
        grads = tape.backward(loss, [p])
    """

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._consumed = False
        self._tokens: list[contextvars.Token] = []

    def __enter__(self) -> "Tape":
        if self._consumed:
            raise TapeError("tape already consumed by a backward pass")
        self._tokens.append(_ACTIVE_TAPE.set(self))
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._tokens.pop())

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def record(self, inputs: tuple[Tensor, ...], output: Tensor, vjp: Callable) -> None:
        if self._consumed:
            raise TapeError("cannot record on a consumed tape")
        for t in inputs:
            if t._tape is not None and t._tape is not self:
                raise TapeError("input tensor was produced on a different tape")
        output.requires_grad = True
        output._tape = self
        self._nodes.append(_Node(inputs, output, vjp))

    def backward(
        self, root: Tensor, params: Sequence[Tensor] | None = None
    ) -> "dict[Tensor, np.ndarray] | list[np.ndarray]":
        """Accumulate d(root)/d(leaf) for every gradient-tracking leaf.

        With ``params`` given, returns a list aligned with it; parameters that
        did not participate receive zero arrays.  Otherwise returns a dict
        keyed by the participating leaf tensors.
        """
        if self._consumed:
            raise TapeError("backward already ran on this tape")
        if root.value.shape != ():
            raise ContractError(f"backward root must be a scalar, got shape {root.shape}")
        if root._tape is not None and root._tape is not self:
            raise TapeError("root was produced on a different tape")
        self._consumed = True

        grads: dict[int, np.ndarray] = {id(root): np.ones((), dtype=np.float64)}
        leaves: dict[int, Tensor] = {}
        if root.requires_grad and root._tape is None:
            leaves[id(root)] = root

        for node in reversed(self._nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            needs = tuple(t.requires_grad for t in node.inputs)
            in_grads = node.vjp(g, needs)
            for t, need, gi in zip(node.inputs, needs, in_grads):
                if not need or gi is None:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
                if t._tape is None:
                    leaves[key] = t
        self._nodes.clear()

        if params is not None:
            out = []
            for p in params:
                g = grads.get(id(p)) if id(p) in leaves else None
                out.append(np.zeros_like(p.value) if g is None else np.asarray(g, dtype=np.float64))
            return out
        return {leaves[k]: np.asarray(grads[k], dtype=np.float64) for k in leaves}


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


def backward(tape: Tape, root: Tensor, params: Sequence[Tensor] | None = None):
    """Functional alias for :meth:`Tape.backward`."""
    return tape.backward(root, params)


def parameters_requiring_grad(tensors: Iterable[Tensor]) -> list[Tensor]:
    return [t for t in tensors if t.requires_grad and t.is_leaf]
