"""A small tape-based reverse-mode differentiation engine over numpy arrays.

Each operation appends one node (value, parent indices, vector-Jacobian
product) to a :class:`Tape`. Parents always precede children, so the backward
pass is a single sweep over the tape in reverse order.

    tape = Tape()
    x = tape.var(np.ones((2, 3)))
    w = tape.var(np.ones((3, 4)))
    y = tanh(x @ w)
    gx, gw = tape.gradients(y, np.ones((2, 4)), [x, w])
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class Var:
    __slots__ = ("tape", "index")

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.index]

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def __repr__(self):
        return f"Var(#{self.index}, shape={self.shape})"


class Tape:
    def __init__(self):
        self.values: list[np.ndarray] = []
        self.parents: list[tuple[int, ...]] = []
        self.vjps: list[Callable | None] = []

    def __len__(self):
        return len(self.values)

    def var(self, value) -> Var:
        """Register a leaf (parameter, input or constant)."""
        return self._push(np.asarray(value, dtype=np.float64), (), None)

    def _push(self, value, parents, vjp) -> Var:
        self.values.append(value)
        self.parents.append(parents)
        self.vjps.append(vjp)
        return Var(self, len(self.values) - 1)

    def backward(self, seeds: dict) -> list[np.ndarray | None]:
        """Propagate output cotangents ``{Var: grad}`` back to every node.

        Returns the accumulated gradient of each node (``None`` where nothing
        flowed).
        """
        grads: list[np.ndarray | None] = [None] * len(self.values)
        for v, g in seeds.items():
            g = np.asarray(g, dtype=np.float64)
            if g.shape != v.value.shape:
                raise ValueError(f"seed shape {g.shape} != value shape {v.value.shape}")
            grads[v.index] = g if grads[v.index] is None else grads[v.index] + g
        for idx in range(len(self.values) - 1, -1, -1):
            g = grads[idx]
            vjp = self.vjps[idx]
            if g is None or vjp is None:
                continue
            for p, pg in zip(self.parents[idx], vjp(g)):
                if pg is None:
                    continue
                grads[p] = pg if grads[p] is None else grads[p] + pg
        return grads

    def gradients(self, output: Var, grad, wrt: Sequence[Var]) -> list[np.ndarray]:
        grads = self.backward({output: grad})
        return [np.zeros_like(w.value) if grads[w.index] is None else grads[w.index]
                for w in wrt]


def _lift(tape: Tape, x) -> Var:
    if isinstance(x, Var):
        if x.tape is not tape:
            raise ValueError("cannot mix variables from different tapes")
        return x
    return tape.var(x)


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    raise TypeError("at least one operand must be a Var")


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    sa, sb = a.shape, b.shape
    return tape._push(a.value + b.value, (a.index, b.index),
                      lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    sa, sb = a.shape, b.shape
    return tape._push(a.value - b.value, (a.index, b.index),
                      lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    av, bv = a.value, b.value
    return tape._push(av * bv, (a.index, b.index),
                      lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def matmul(a, b) -> Var:
    """Batched rows times a matrix: ``(B, k) @ (k, m)``."""
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    return tape._push(av @ bv, (a.index, b.index), lambda g: (g @ bv.T, av.T @ g))


def sigmoid(a: Var) -> Var:
    out = 1.0 / (1.0 + np.exp(-a.value))
    return a.tape._push(out, (a.index,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)
    return a.tape._push(out, (a.index,), lambda g: (g * (1.0 - out * out),))


def concat(parts: Sequence, axis: int = -1) -> Var:
    tape = _tape_of(*parts)
    parts = [_lift(tape, p) for p in parts]
    values = [p.value for p in parts]
    out = np.concatenate(values, axis=axis)
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return tape._push(out, tuple(p.index for p in parts), vjp)


def take(a: Var, key) -> Var:
    """Basic (slice) indexing."""
    src_shape = a.shape

    def vjp(g):
        full = np.zeros(src_shape)
        full[key] = g
        return (full,)

    return a.tape._push(a.value[key], (a.index,), vjp)
