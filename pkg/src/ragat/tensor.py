"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every differentiable primitive records itself on the thread's active
:class:`Tape` when at least one input requires a gradient.  Calling
:func:`backward` on a scalar walks that tape once in reverse and then
marks it consumed.

    >>> w = Tensor([1.0, 2.0], requires_grad=True)
    >>> loss = reduce("sum", mul(w, w))
    >>> backward(loss)
    >>> w.grad
    array([2., 4.])
"""

from __future__ import annotations

import contextlib
import threading
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ContractError, DimensionError, StateError

__all__ = [
    "Tensor",
    "Tape",
    "tape",
    "no_grad",
    "backward",
    "matmul",
    "elementwise",
    "add",
    "sub",
    "mul",
    "relu",
    "sigmoid",
    "tanh",
    "log",
    "clamp_min",
    "scale",
    "add_scalar",
    "softmax_rows",
    "reduce",
    "concat",
    "transpose",
    "reshape",
    "take_rows",
    "slice_rows",
    "slice_cols",
    "pad_rows",
]


class Tensor:
    """A dense row-major array of float64 values with an optional gradient."""

    __slots__ = ("data", "requires_grad", "grad", "_tape", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._tape: Tape | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _not_scalar(self)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # thin operator sugar; every path goes through the recorded primitives
    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __add__(self, other):
        return add(self, _wrap(other)) if isinstance(other, (Tensor, np.ndarray)) else add_scalar(self, other)

    def __sub__(self, other):
        return sub(self, _wrap(other)) if isinstance(other, (Tensor, np.ndarray)) else add_scalar(self, -other)

    def __mul__(self, other):
        return mul(self, _wrap(other)) if isinstance(other, (Tensor, np.ndarray)) else scale(self, other)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    @property
    def T(self):
        return transpose(self)


def _not_scalar(t):
    raise ContractError(f"item() needs a single-element tensor, got shape {t.shape}")


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Op:
    __slots__ = ("out", "inputs", "backward_fn")

    def __init__(self, out, inputs, backward_fn):
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive operations for one forward pass."""

    def __init__(self):
        self.ops: list[_Op] = []
        self.consumed = False

    def __len__(self) -> int:
        return len(self.ops)

    def record(self, out: Tensor, inputs: Sequence[Tensor], backward_fn: Callable) -> None:
        if self.consumed:
            raise StateError("cannot record on a tape that has already been differentiated")
        out.requires_grad = True
        out._tape = self
        self.ops.append(_Op(out, tuple(inputs), backward_fn))

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if self.consumed:
            raise StateError("backward already ran on this tape; run a new forward pass first")
        self.consumed = True
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for op in reversed(self.ops):
            g = grads.pop(id(op.out), None)
            if g is None:
                continue
            in_grads = op.backward_fn(g)
            for t, gi in zip(op.inputs, in_grads):
                if gi is None or not t.requires_grad:
                    continue
                if t._tape is self:
                    prev = grads.get(id(t))
                    grads[id(t)] = gi if prev is None else prev + gi
                else:
                    # leaf: accumulate into the persistent slot
                    t.grad = gi.copy() if t.grad is None else t.grad + gi
        # drop references so intermediate arrays can be freed
        self.ops.clear()


_state = threading.local()


def _active_tape() -> Tape | None:
    if getattr(_state, "disabled", 0):
        return None
    current = getattr(_state, "tape", None)
    if current is None or current.consumed:
        current = Tape()
        _state.tape = current
    return current


@contextlib.contextmanager
def tape() -> Iterator[Tape]:
    """Record operations on a fresh tape for the duration of the block."""
    previous = getattr(_state, "tape", None)
    fresh = Tape()
    _state.tape = fresh
    try:
        yield fresh
    finally:
        _state.tape = previous


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    _state.disabled = getattr(_state, "disabled", 0) + 1
    try:
        yield
    finally:
        _state.disabled -= 1


@contextlib.contextmanager
def watch_kinks() -> Iterator[list[float]]:
    """Collect the smallest nonzero ``|input|`` of every relu evaluated in the block."""
    previous = getattr(_state, "kinks", None)
    seen: list[float] = []
    _state.kinks = seen
    try:
        yield seen
    finally:
        _state.kinks = previous


def _result(data: np.ndarray, inputs: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = False
    out.grad = None
    out._tape = None
    out.name = None
    if any(t.requires_grad for t in inputs):
        active = _active_tape()
        if active is not None:
            active.record(out, inputs, backward_fn)
    return out


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every leaf reachable from ``loss``."""
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._tape is None:
        raise StateError("loss was not produced by recorded operations")
    loss._tape.backward(loss)


# ---------------------------------------------------------------- primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    A, B = a.data, b.data

    def bw(g):
        return (g @ B.T if a.requires_grad else None, A.T @ g if b.requires_grad else None)

    return _result(A @ B, (a, b), bw)


def _check_binary(a: Tensor, b: Tensor) -> bool:
    """Return True when b is a trailing vector broadcast over a."""
    if a.shape == b.shape:
        return False
    if b.data.ndim == 1 and a.data.ndim >= 1 and a.shape[-1] == b.shape[0]:
        return True
    raise DimensionError(f"shapes {a.shape} and {b.shape} are not broadcastable")


def _unbroadcast(g: np.ndarray, bcast: bool) -> np.ndarray:
    return g.reshape(-1, g.shape[-1]).sum(axis=0) if bcast else g


def add(a: Tensor, b: Tensor) -> Tensor:
    bc = _check_binary(a, b)
    return _result(a.data + b.data, (a, b), lambda g: (g, _unbroadcast(g, bc)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    bc = _check_binary(a, b)
    return _result(a.data - b.data, (a, b), lambda g: (g, -_unbroadcast(g, bc)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    bc = _check_binary(a, b)
    A, B = a.data, b.data

    def bw(g):
        return (g * B if a.requires_grad else None, _unbroadcast(g * A, bc) if b.requires_grad else None)

    return _result(A * B, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0
    watch = getattr(_state, "kinks", None)
    if watch is not None:
        # exact zeros come from empty neighbourhoods and stay zero under any perturbation
        live = np.abs(x.data[x.data != 0])
        if live.size:
            watch.append(float(live.min()))
    return _result(np.where(pos, x.data, 0.0), (x,), lambda g: (g * pos,))


def sigmoid(x: Tensor) -> Tensor:
    # split by sign so exp never overflows
    v = x.data
    e = np.exp(-np.abs(v))
    y = np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),))


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise ContractError("log of a non-positive value")
    v = x.data
    return _result(np.log(v), (x,), lambda g: (g / v,))


def clamp_min(x: Tensor, floor: float) -> Tensor:
    keep = x.data >= floor
    return _result(np.where(keep, x.data, floor), (x,), lambda g: (g * keep,))


def scale(x: Tensor, factor: float) -> Tensor:
    return _result(x.data * factor, (x,), lambda g: (g * factor,))


def add_scalar(x: Tensor, value: float) -> Tensor:
    return _result(x.data + value, (x,), lambda g: (g,))


_UNARY = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, a: Tensor, b: Tensor | None = None) -> Tensor:
    """Dispatch one of relu, sigmoid, tanh, add, mul, sub by name."""
    if op in _UNARY:
        if b is not None:
            raise ContractError(f"{op} takes a single operand")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise ContractError(f"{op} needs two operands")
        return _BINARY[op](a, b)
    raise ValueError(f"unknown elementwise op {op!r}")


def softmax_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2 or x.shape[1] == 0:
        raise DimensionError(f"softmax_rows needs a non-empty m x n matrix, got {x.shape}")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def bw(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return _result(y, (x,), bw)


def reduce(op: str, x: Tensor, axis: int | None = None) -> Tensor:
    """Reduce with max, mean or sum along ``axis`` (None means all entries).

    For max, the gradient goes to the first maximal entry of each slice in
    scan order.
    """
    nd = x.data.ndim
    if axis is not None and not -nd <= axis < nd:
        raise DimensionError(f"axis {axis} invalid for shape {x.shape}")
    v = x.data
    if op == "sum":
        out = v.sum(axis=axis)
        return _result(np.asarray(out), (x,), lambda g: (_expand(g, v.shape, axis),))
    if op == "mean":
        n = v.size if axis is None else v.shape[axis]
        out = v.mean(axis=axis)
        return _result(np.asarray(out), (x,), lambda g: (_expand(g, v.shape, axis) / n,))
    if op == "max":
        if v.size == 0:
            raise DimensionError("max over an empty tensor")
        if axis is None:
            idx = int(np.argmax(v))
            out = np.asarray(v.reshape(-1)[idx])

            def bw(g):
                full = np.zeros(v.size)
                full[idx] = g
                return (full.reshape(v.shape),)

            return _result(out, (x,), bw)
        idx = np.expand_dims(np.argmax(v, axis=axis), axis)  # argmax returns the first hit
        out = np.take_along_axis(v, idx, axis=axis).squeeze(axis)

        def bw(g):
            full = np.zeros_like(v)
            np.put_along_axis(full, idx, np.expand_dims(g, axis), axis=axis)
            return (full,)

        return _result(out, (x,), bw)
    raise ValueError(f"unknown reduction {op!r}")


def _expand(g, shape, axis):
    if axis is None:
        return np.broadcast_to(g, shape).copy()
    return np.broadcast_to(np.expand_dims(g, axis), shape).copy()


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise DimensionError("concat of nothing")
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"cannot concat shapes {[p.shape for p in parts]}: {exc}") from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(out, tuple(parts), bw)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"transpose needs a matrix, got {x.shape}")
    return _result(x.data.T.copy(), (x,), lambda g: (g.T,))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"cannot reshape {x.shape} to {shape}")
    old = x.shape
    return _result(x.data.reshape(shape).copy(), (x,), lambda g: (g.reshape(old),))


def take_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather rows of a matrix; repeated ids accumulate gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2:
        raise DimensionError(f"take_rows needs a matrix, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(f"row index out of range for table of {table.shape[0]} rows")
    n = table.shape

    def bw(g):
        full = np.zeros(n)
        np.add.at(full, ids, g)
        return (full,)

    return _result(table.data[ids], (table,), bw)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    n = x.shape[0]
    if not 0 <= start <= stop <= n:
        raise DimensionError(f"row slice {start}:{stop} out of range for {x.shape}")

    def bw(g):
        full = np.zeros_like(x.data)
        full[start:stop] = g
        return (full,)

    return _result(x.data[start:stop].copy(), (x,), bw)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2 or not 0 <= start <= stop <= x.shape[1]:
        raise DimensionError(f"column slice {start}:{stop} out of range for {x.shape}")

    def bw(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        return (full,)

    return _result(x.data[:, start:stop].copy(), (x,), bw)


def pad_rows(x: Tensor, before: int, after: int) -> Tensor:
    """Zero-pad a matrix along its first axis."""
    if x.data.ndim != 2:
        raise DimensionError(f"pad_rows needs a matrix, got {x.shape}")
    n = x.shape[0]
    out = np.pad(x.data, ((before, after), (0, 0)))
    return _result(out, (x,), lambda g: (g[before : before + n],))
