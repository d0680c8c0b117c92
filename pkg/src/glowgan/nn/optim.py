"""Bias-corrected Adam over dicts of numpy parameter arrays."""

import numpy as np


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        """Update ``params`` in place. Parameters missing from ``grads`` are skipped."""
        for k, g in grads.items():
            if k not in params:
                raise KeyError(f"gradient for unknown parameter {k!r}")
            if np.shape(g) != params[k].shape:
                raise ValueError(f"gradient shape {np.shape(g)} != parameter shape {params[k].shape} for {k!r}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params


def adam_step(state: Adam, params, grads):
    """Functional spelling of :meth:`Adam.step`."""
    state.step(params, grads)
    return params, state
