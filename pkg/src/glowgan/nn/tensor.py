"""Reverse-mode automatic differentiation over float64 numpy arrays."""

from __future__ import annotations

import contextlib

import numpy as np

from .. import kernels


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording the graph."""
    global _grad_enabled
    prev, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check(data, op):
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite value produced by {op}")
    return data


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


def as_tensor(x) -> "Tensor":
    return x if isinstance(x, Tensor) else Tensor(x)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")
    __array_ufunc__ = None  # make ndarray (op) Tensor defer to Tensor

    def __init__(self, data, requires_grad=False, _parents=(), op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self, grad=None):
        """Populate ``.grad`` on every leaf that requires it."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accum(np.broadcast_to(grad, self.shape))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)


def _make(data, parents, backward, op):
    _check(data, op)
    parents = tuple(p for p in parents if isinstance(p, Tensor))
    needs = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs, _parents=parents if needs else (), op=op)
    if needs:
        out._backward = backward
    return out


def _send(t, g):
    if t.requires_grad:
        t._accum(_check(_unbroadcast(g, t.shape), "backward"))


# -- binary --------------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        _send(a, g)
        _send(b, g)

    return _make(a.data + b.data, (a, b), back, "add")


def neg(a):
    def back(g):
        _send(a, -g)

    return _make(-a.data, (a,), back, "neg")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        _send(a, g * b.data)
        _send(b, g * a.data)

    return _make(a.data * b.data, (a, b), back, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def back(g):
        _send(a, g / b.data)
        _send(b, -g * out / b.data)

    return _make(out, (a, b), back, "div")


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def back(g):
        _send(a, g @ b.data.T)
        _send(b, a.data.T @ g)

    return _make(a.data @ b.data, (a, b), back, "matmul")


def power(x, p):
    """x ** p for x > 0 (or x >= 0 with a constant exponent >= 1)."""
    x, p = as_tensor(x), as_tensor(p)
    out = x.data ** p.data

    def back(g):
        if x.requires_grad:
            _send(x, g * p.data * x.data ** (p.data - 1.0))
        if p.requires_grad:
            _send(p, g * out * np.log(x.data))

    return _make(out, (x, p), back, "power")


# -- pointwise -----------------------------------------------------------------


def exp2(x):
    out = np.exp2(x.data)

    def back(g):
        _send(x, g * out * np.log(2.0))

    return _make(out, (x,), back, "exp2")


def softplus(x):
    out = np.logaddexp(0.0, x.data)

    def back(g):
        _send(x, g * _sigmoid(x.data))

    return _make(out, (x,), back, "softplus")


def _sigmoid(v):
    e = np.exp(-np.abs(v))
    return np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x):
    out = _sigmoid(x.data)

    def back(g):
        _send(x, g * out * (1.0 - out))

    return _make(out, (x,), back, "sigmoid")


def tanh(x):
    out = np.tanh(x.data)

    def back(g):
        _send(x, g * (1.0 - out * out))

    return _make(out, (x,), back, "tanh")


def leaky_relu(x, slope=0.2):
    pos = x.data > 0

    def back(g):
        _send(x, np.where(pos, g, slope * g))

    return _make(np.where(pos, x.data, slope * x.data), (x,), back, "leaky_relu")


def minimum(x, c):
    """min(x, c) for a constant c; subgradient 1 at x == c, 0 above."""
    live = x.data <= c

    def back(g):
        _send(x, g * live)

    return _make(np.minimum(x.data, c), (x,), back, "minimum")


def maximum(x, c):
    """max(x, c) for a constant c; subgradient 1 at x == c, 0 below."""
    live = x.data >= c

    def back(g):
        _send(x, g * live)

    return _make(np.maximum(x.data, c), (x,), back, "maximum")


def clamp(x, lo, hi):
    return maximum(minimum(x, hi), lo)


# -- reductions / shape ------------------------------------------------------------


def sum(x, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy naming
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _send(x, np.broadcast_to(g, x.shape))

    return _make(out, (x,), back, "sum")


def mean(x, axis=None, keepdims=False):
    n = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(x, shape):
    def back(g):
        _send(x, g.reshape(x.shape))

    return _make(x.data.reshape(shape), (x,), back, "reshape")


def stack_rows(rows):
    """Stack (1, n) tensors into a (len(rows), n) tensor."""
    data = np.concatenate([r.data for r in rows], axis=0)

    def back(g):
        for i, r in enumerate(rows):
            _send(r, g[i : i + 1])

    return _make(data, tuple(rows), back, "stack_rows")


# -- fused camera projection -----------------------------------------------------------


def camera(r, e, beta, gamma):
    """Fused ``CRF(min(2**(e/2) * r, 1))`` per row of ``r``.

    ``r`` is (B, N); ``e`` is a tensor or array of B log exposures; ``beta`` and
    ``gamma`` are constants (scalars or length-B arrays). Gradients flow to r
    and e. Uses the compiled kernel when available.
    """
    e = as_tensor(e)
    ev = np.broadcast_to(e.data.reshape(-1), (r.shape[0],))
    factor = np.exp2(ev / 2.0)
    out = kernels.camera_forward(r.data, factor, beta, gamma)

    def back(g):
        gr, ge = kernels.camera_vjp(r.data, factor, beta, gamma, g)
        _send(r, gr)
        if e.requires_grad:
            _send(e, ge.reshape(e.shape) if e.data.size == ge.size else ge.sum().reshape(e.shape))

    return _make(out, (r, e), back, "camera")


def camera_composite(r, e, beta, gamma):
    """Same map as :func:`camera`, built from primitive ops (gradient oracle)."""
    e = as_tensor(e)
    beta = as_tensor(np.asarray(beta, dtype=np.float64).reshape(-1, 1))
    gamma = as_tensor(gamma if isinstance(gamma, Tensor) else np.asarray(gamma, dtype=np.float64).reshape(-1, 1))
    factor = exp2(mul(reshape(e, (-1, 1)), 0.5))
    x = minimum(mul(r, factor), 1.0)
    xg = power(x, gamma)
    return div(mul(add(beta, 1.0), xg), add(beta, xg))
