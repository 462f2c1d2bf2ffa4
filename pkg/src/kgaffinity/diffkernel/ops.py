"""Differentiable primitives.

Vectors are 1-D, matrices 2-D, scalars 0-D.  There is no implicit
broadcasting: every primitive checks its operand shapes and raises
:class:`~kgaffinity.errors.DimensionError` on mismatch.  Masks are boolean
vectors over the reduced axis; ``True`` marks a valid position.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError, DimensionError
from .tensor import Tensor, _ACTIVE_TAPE, as_tensor

PRIMITIVES = (
    "matmul",
    "add",
    "hadamard",
    "scale",
    "tanh",
    "relu",
    "softmax_masked",
    "mean_masked",
    "l2_norm",
    "concat",
    "transpose",
    "mae",
    "sum_columns",
    # structural helpers used by the encoders, the KG tables and the ablations
    "column",
    "outer",
    "max_masked",
    "column_norms",
)


def _emit(value: np.ndarray, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor._wrap(value)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape.record(inputs, out, vjp)
    return out


def _mask(mask, length: int, what: str) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.shape != (length,):
        raise DimensionError(f"{what}: mask shape {m.shape} does not match axis length {length}")
    if not m.any():
        raise DegenerateInputError(f"{what}: every position is masked")
    return m


def matmul(a, b) -> Tensor:
    """Matrix/vector product: (m,k)@(k,n), (m,k)@(k,), (k,)@(k,n) or (k,)@(k,)."""
    a, b = as_tensor(a), as_tensor(b)
    A, B = a.value, b.value
    if A.ndim not in (1, 2) or B.ndim not in (1, 2) or A.shape[-1] != B.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {A.shape} by {B.shape}")
    out = A @ B

    def vjp(g, needs):
        ga = gb = None
        if A.ndim == 2 and B.ndim == 2:
            if needs[0]:
                ga = g @ B.T
            if needs[1]:
                gb = A.T @ g
        elif A.ndim == 2:
            if needs[0]:
                ga = np.outer(g, B)
            if needs[1]:
                gb = A.T @ g
        elif B.ndim == 2:
            if needs[0]:
                ga = B @ g
            if needs[1]:
                gb = np.outer(A, g)
        else:
            if needs[0]:
                ga = g * B
            if needs[1]:
                gb = g * A
        return ga, gb

    return _emit(np.asarray(out, dtype=np.float64), (a, b), vjp)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"add: shape {a.shape} != {b.shape}")
    return _emit(a.value + b.value, (a, b), lambda g, needs: (g, g))


def hadamard(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard: shape {a.shape} != {b.shape}")
    A, B = a.value, b.value
    return _emit(A * B, (a, b), lambda g, needs: (g * B if needs[0] else None, g * A if needs[1] else None))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _emit(a.value * c, (a,), lambda g, needs: (g * c,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.value)
    return _emit(y, (a,), lambda g, needs: (g * (1.0 - y * y),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    pos = a.value > 0
    return _emit(np.where(pos, a.value, 0.0), (a,), lambda g, needs: (np.where(pos, g, 0.0),))


def softmax_masked(x, mask=None) -> Tensor:
    """Softmax over the valid entries of a vector; masked entries are exactly 0."""
    x = as_tensor(x)
    if x.ndim != 1:
        raise DimensionError(f"softmax_masked: expected a vector, got shape {x.shape}")
    m = np.ones(x.shape, dtype=bool) if mask is None else _mask(mask, x.shape[0], "softmax_masked")
    if x.shape[0] == 0:
        raise DegenerateInputError("softmax_masked: empty input")
    z = x.value[m]
    e = np.exp(z - z.max())
    s = np.zeros_like(x.value)
    s[m] = e / e.sum()

    def vjp(g, needs):
        return (s * (g - np.dot(g, s)),)

    return _emit(s, (x,), vjp)


def mean_masked(x, mask=None) -> Tensor:
    """Mean over valid entries of a vector, or over valid columns of a matrix.

    For a matrix of shape (r, c) the mask has length c and the result is the
    r-vector of per-row means restricted to valid columns.
    """
    x = as_tensor(x)
    if x.ndim not in (1, 2):
        raise DimensionError(f"mean_masked: expected vector or matrix, got shape {x.shape}")
    n = x.shape[-1]
    if n == 0:
        raise DegenerateInputError("mean_masked: empty axis")
    m = np.ones(n, dtype=bool) if mask is None else _mask(mask, n, "mean_masked")
    k = int(m.sum())
    w = m.astype(np.float64) / k
    if x.ndim == 1:
        out = np.asarray(x.value[m].sum() / k)
        return _emit(out, (x,), lambda g, needs: (g * w,))
    out = x.value[:, m].sum(axis=1) / k
    return _emit(out, (x,), lambda g, needs: (np.outer(g, w),))


def max_masked(x, mask=None) -> Tensor:
    """Row-wise maximum over the valid columns of a matrix (max pooling)."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"max_masked: expected a matrix, got shape {x.shape}")
    n = x.shape[1]
    if n == 0:
        raise DegenerateInputError("max_masked: empty axis")
    m = np.ones(n, dtype=bool) if mask is None else _mask(mask, n, "max_masked")
    cols = np.flatnonzero(m)
    sub = x.value[:, cols]
    arg = cols[np.argmax(sub, axis=1)]
    rows = np.arange(x.shape[0])
    out = x.value[rows, arg]

    def vjp(g, needs):
        gx = np.zeros_like(x.value)
        gx[rows, arg] = g
        return (gx,)

    return _emit(out, (x,), vjp)


def l2_norm(x) -> Tensor:
    """Euclidean norm of a vector; the gradient at the origin is taken as 0."""
    x = as_tensor(x)
    if x.ndim != 1:
        raise DimensionError(f"l2_norm: expected a vector, got shape {x.shape}")
    v = x.value
    scale_ = np.max(np.abs(v)) if v.size else 0.0
    if scale_ == 0.0:
        n = 0.0
    else:
        r = v / scale_
        n = scale_ * np.sqrt(np.dot(r, r))

    def vjp(g, needs):
        if n == 0.0:
            return (np.zeros_like(v),)
        return (g * v / n,)

    return _emit(np.asarray(n, dtype=np.float64), (x,), vjp)


def concat(*parts) -> Tensor:
    """Concatenate scalars and vectors into one vector."""
    ts = tuple(as_tensor(p) for p in parts)
    if not ts:
        raise DimensionError("concat: nothing to concatenate")
    for t in ts:
        if t.ndim > 1:
            raise DimensionError(f"concat: expected scalars or vectors, got shape {t.shape}")
    sizes = [1 if t.ndim == 0 else t.shape[0] for t in ts]
    out = np.concatenate([np.atleast_1d(t.value) for t in ts])
    bounds = np.cumsum([0] + sizes)

    def vjp(g, needs):
        res = []
        for t, lo, hi, need in zip(ts, bounds[:-1], bounds[1:], needs):
            if not need:
                res.append(None)
            elif t.ndim == 0:
                res.append(np.asarray(g[lo]))
            else:
                res.append(g[lo:hi].copy())
        return tuple(res)

    return _emit(out, ts, vjp)


def transpose(x) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {x.shape}")
    return _emit(np.ascontiguousarray(x.value.T), (x,), lambda g, needs: (g.T,))


def mae(pred, target) -> Tensor:
    """Mean absolute error between two equal-length vectors."""
    p, t = as_tensor(pred), as_tensor(target)
    if p.ndim != 1 or p.shape != t.shape:
        raise DimensionError(f"mae: shapes {p.shape} and {t.shape} must be equal vectors")
    n = p.shape[0]
    if n == 0:
        raise DegenerateInputError("mae: empty input")
    d = p.value - t.value
    sgn = np.sign(d) / n
    return _emit(np.asarray(np.abs(d).sum() / n), (p, t), lambda g, needs: (g * sgn, -g * sgn))


def sum_columns(x) -> Tensor:
    """Sum across columns: matrix (r, c) -> r-vector, vector -> scalar."""
    x = as_tensor(x)
    if x.ndim == 2:
        return _emit(x.value.sum(axis=1), (x,), lambda g, needs: (np.repeat(g[:, None], x.shape[1], axis=1),))
    if x.ndim == 1:
        return _emit(np.asarray(x.value.sum()), (x,), lambda g, needs: (np.full(x.shape, float(g)),))
    raise DimensionError(f"sum_columns: expected vector or matrix, got shape {x.shape}")


def column(x, j: int) -> Tensor:
    """Select column ``j`` of a matrix as a vector (embedding-table lookup)."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"column: expected a matrix, got shape {x.shape}")
    j = int(j)
    if not 0 <= j < x.shape[1]:
        raise DimensionError(f"column: index {j} out of range for {x.shape[1]} columns")

    def vjp(g, needs):
        gx = np.zeros_like(x.value)
        gx[:, j] = g
        return (gx,)

    return _emit(x.value[:, j].copy(), (x,), vjp)


def outer(a, b) -> Tensor:
    """Outer product of two vectors; used to place a bias on valid columns."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionError(f"outer: expected vectors, got {a.shape} and {b.shape}")
    A, B = a.value, b.value
    return _emit(np.outer(A, B), (a, b), lambda g, needs: (g @ B if needs[0] else None, A @ g if needs[1] else None))


def column_norms(x) -> Tensor:
    """Euclidean norm of every column of a matrix; zero columns get zero gradient."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"column_norms: expected a matrix, got shape {x.shape}")
    X = x.value
    scale_ = np.max(np.abs(X), axis=0) if X.size else np.zeros(X.shape[1])
    safe = np.where(scale_ > 0, scale_, 1.0)
    n = scale_ * np.sqrt(((X / safe) ** 2).sum(axis=0))

    def vjp(g, needs):
        inv = np.divide(g, n, out=np.zeros_like(n), where=n > 0)
        return (X * inv,)

    return _emit(n, (x,), vjp)


def sum_of_squares(x) -> Tensor:
    """Squared Frobenius norm, composed from primitives."""
    x = as_tensor(x)
    sq = hadamard(x, x)
    if x.ndim == 0:
        return sq
    s = sum_columns(sq)
    return sum_columns(s) if x.ndim == 2 else s


def primitive_forward(op: str, inputs, **kwargs) -> Tensor:
    """Apply a primitive by name."""
    if op not in PRIMITIVES:
        raise ValueError(f"unknown primitive {op!r}")
    return globals()[op](*inputs, **kwargs)
