"""Finite-difference verification of the backward pass."""

import numpy as np

from .tensor import Tensor


def grad_check(fn, params, h=1e-6, mode="central", floor=1e-7, names=None):
    """Largest relative error between backward-pass and finite-difference gradients.

    ``fn`` maps a dict of leaf Tensors to a scalar Tensor; ``params`` is a dict of
    float64 arrays. ``mode`` is ``"central"``, ``"forward"`` or ``"backward"``
    (one-sided differences for points on a kink). Relative error per entry is
    ``|a - n| / max(|a|, |n|, floor)``.
    """
    names = list(params) if names is None else list(names)
    leaves = {k: Tensor(np.array(v, dtype=np.float64), requires_grad=k in names) for k, v in params.items()}
    out = fn(leaves)
    out.backward()
    analytic = {k: (leaves[k].grad if leaves[k].grad is not None else np.zeros(leaves[k].shape)) for k in names}

    def evaluate(k, idx, delta):
        probe = {n: Tensor(leaves[n].data.copy()) for n in leaves}
        probe[k].data[idx] += delta
        return fn(probe).item()

    worst = 0.0
    for k in names:
        base = leaves[k].data
        for idx in np.ndindex(base.shape):
            if mode == "central":
                num = (evaluate(k, idx, h) - evaluate(k, idx, -h)) / (2 * h)
            elif mode == "forward":
                num = (evaluate(k, idx, h) - out.item()) / h
            elif mode == "backward":
                num = (out.item() - evaluate(k, idx, -h)) / h
            else:
                raise ValueError(f"unknown mode {mode!r}")
            a = analytic[k][idx]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            worst = max(worst, err)
    return worst
