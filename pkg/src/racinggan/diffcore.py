"""Tape-based reverse-mode autodiff over dense float64 matrices.

Operations record themselves on the tape that is active in the current thread
(see :class:`Tape`). Outside of a tape, or inside :func:`no_grad`, they only
compute values. A minimal example::

    w = Tensor(np.ones((2, 1)), requires_grad=True)
    with Tape():
        loss = mean(matmul(x, w))
    backward(loss)
    w.grad
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np

LOG_EPS = 1e-7

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class AutodiffError(RuntimeError):
    pass


class ShapeError(AutodiffError, ValueError):
    pass


class NonFiniteError(AutodiffError, FloatingPointError):
    pass


_local = threading.local()


def _current_tape() -> "Tape | None":
    return getattr(_local, "tape", None)


class Tensor:
    """A 2-D float64 matrix that may take part in differentiation."""

    __slots__ = ("values", "requires_grad", "grad", "_tape")

    def __init__(self, values, requires_grad: bool = False):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got ndim={arr.ndim}")
        if not np.isfinite(arr).all():
            raise NonFiniteError("tensor values must be finite")
        self.values = arr
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(arr) if requires_grad else None
        self._tape: Tape | None = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        # skips the copy and finiteness check done by __init__
        t = cls.__new__(cls)
        t.values = arr
        t.requires_grad = requires_grad
        t.grad = None
        t._tape = None
        return t

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.values[0, 0])

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.values, False)

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.values)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return scale(self, float(other))

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output: Tensor, inputs: tuple[Tensor, ...], backward: Callable):
        self.output = output
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Ordered record of differentiable operations.

    Use as a context manager; the tape becomes the active one for the current
    thread. A tape supports a single reverse sweep.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False
        self._previous: Tape | None = None

    def __enter__(self) -> "Tape":
        self._previous = _current_tape()
        _local.tape = self
        return self

    def __exit__(self, *exc) -> None:
        _local.tape = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, output: Tensor, inputs: tuple[Tensor, ...], backward: Callable) -> None:
        if self.consumed:
            raise AutodiffError("cannot record on a consumed tape")
        output._tape = self
        self.nodes.append(_Node(output, inputs, backward))


@contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording in the current thread."""
    previous = _current_tape()
    _local.tape = None
    try:
        yield
    finally:
        _local.tape = previous


def _emit(out: np.ndarray, inputs: tuple[Tensor, ...], backward: Callable, kind: str) -> Tensor:
    if not np.isfinite(out).all():
        raise NonFiniteError(f"non-finite output from {kind}")
    tape = _current_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    result = Tensor._wrap(out, needs)
    if needs:
        tape.record(result, inputs, backward)
    return result


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, kind: str) -> None:
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{kind}: incompatible shapes {a.shape} and {b.shape}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    av, bv = a.values, b.values

    def backward(g):
        return g @ bv.T, av.T @ g

    return _emit(av @ bv, (a, b), backward, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; a (1, n) row or (1, 1) scalar broadcasts."""
    _check_broadcast(a, b, "add")
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return _emit(a.values + b.values, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), -_unbroadcast(g, sb)

    return _emit(a.values - b.values, (a, b), backward, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "mul")
    av, bv = a.values, b.values

    def backward(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return _emit(av * bv, (a, b), backward, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    def backward(g):
        return (g * c,)

    return _emit(a.values * c, (a,), backward, "scale")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)

    def backward(g):
        return (g * (1.0 - out * out),)

    return _emit(out, (a,), backward, "tanh")


def sigmoid(a: Tensor) -> Tensor:
    x = a.values
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        return (g * out * (1.0 - out),)

    return _emit(out, (a,), backward, "sigmoid")


def relu(a: Tensor) -> Tensor:
    mask = a.values > 0.0  # subgradient 0 at exactly 0

    def backward(g):
        return (g * mask,)

    return _emit(np.where(mask, a.values, 0.0), (a,), backward, "relu")


def log(a: Tensor) -> Tensor:
    """Natural log with the argument clamped to ``[LOG_EPS, inf)``."""
    x = a.values
    clamped = np.maximum(x, LOG_EPS)
    live = x >= LOG_EPS

    def backward(g):
        return (np.where(live, g / clamped, 0.0),)

    return _emit(np.log(clamped), (a,), backward, "log")


def mean(a: Tensor) -> Tensor:
    n = a.values.size
    shape = a.shape

    def backward(g):
        return (np.full(shape, g[0, 0] / n),)

    return _emit(np.array([[a.values.mean()]]), (a,), backward, "mean")


_KINDS = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "tanh": tanh,
    "sigmoid": sigmoid,
    "relu": relu,
    "log": log,
    "mean": mean,
}


def forward_op(kind: str, *inputs, **kwargs) -> Tensor:
    """Dispatch an operation by name, e.g. ``forward_op("scale", x, 2.0)``."""
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown op kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    return fn(*inputs, **kwargs)


def backward(loss: Tensor) -> None:
    """Reverse sweep from a scalar loss, accumulating into ``.grad``.

    Leaves that require grad but are not on the loss path keep whatever grad
    they held (zero after :meth:`ParameterSet.zero_grad`).
    """
    if loss.values.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss._tape
    if tape is None:
        raise AutodiffError("loss was not recorded on a tape")
    if tape.consumed:
        raise AutodiffError("tape already consumed")
    tape.consumed = True

    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    produced = {id(node.output) for node in tape.nodes}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        node.output.grad = g
        for inp, gi in zip(node.inputs, node.backward(g)):
            if not inp.requires_grad:
                continue
            key = id(inp)
            if key in produced:
                prev = grads.get(key)
                grads[key] = gi if prev is None else prev + gi
            elif inp.grad is None:
                inp.grad = np.array(gi, dtype=np.float64)
            else:
                inp.grad = inp.grad + gi


class ParameterSet:
    """Named trainable tensors plus their optimizer state."""

    def __init__(self, params: dict[str, Tensor] | None = None):
        self.params: dict[str, Tensor] = {}
        self.state: dict[str, dict] = {}
        for name, t in (params or {}).items():
            self.add(name, t)

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter name {name!r}")
        if not tensor.requires_grad:
            tensor.requires_grad = True
            tensor.grad = np.zeros_like(tensor.values)
        self.params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __iter__(self):
        return iter(self.params.items())

    def __len__(self) -> int:
        return len(self.params)

    def count(self) -> int:
        return sum(t.values.size for t in self.params.values())

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.values.copy() for name, t in self.params.items()}

    def flat(self) -> np.ndarray:
        return np.concatenate([t.values.ravel() for t in self.params.values()])


def sgd_step(params: ParameterSet, lr: float) -> None:
    for name, p in params:
        if p.grad is None:
            raise AutodiffError(f"missing grad for {name!r}")
        p.values = p.values - lr * p.grad
    params.zero_grad()


def adam_step(params: ParameterSet, lr: float, betas: Sequence[float] = ADAM_BETAS,
              eps: float = ADAM_EPS) -> None:
    b1, b2 = betas
    for name, p in params:
        if p.grad is None:
            raise AutodiffError(f"missing grad for {name!r}")
        st = params.state.get(name)
        if st is None:
            st = params.state[name] = {
                "step": 0,
                "m": np.zeros_like(p.values),
                "v": np.zeros_like(p.values),
            }
        g = p.grad
        st["step"] += 1
        st["m"] = b1 * st["m"] + (1.0 - b1) * g
        st["v"] = b2 * st["v"] + (1.0 - b2) * g * g
        m_hat = st["m"] / (1.0 - b1 ** st["step"])
        v_hat = st["v"] / (1.0 - b2 ** st["step"])
        p.values = p.values - lr * m_hat / (np.sqrt(v_hat) + eps)
    params.zero_grad()


def optimizer_step(params: ParameterSet, method: str, lr: float) -> None:
    if method == "sgd":
        sgd_step(params, lr)
    elif method == "adam":
        adam_step(params, lr)
    else:
        raise ValueError(f"unknown optimizer {method!r}")
