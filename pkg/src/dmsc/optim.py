"""ADAM optimizer over named parameter tensors."""

from __future__ import annotations

import numpy as np


class Adam:
    """Bias-corrected ADAM over a dict of named `Tensor` parameters.

    Reads `.grad` from each parameter (None is treated as zero, so a fresh
    optimizer with zero gradients is a fixed point: parameters unchanged,
    step incremented). A NaN in any gradient aborts with the parameter name.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.step_count
        bias2 = 1.0 - b2**self.step_count
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = 0.0
            elif not np.all(np.isfinite(g)):
                raise FloatingPointError(
                    f"adam: non-finite gradient for parameter {name!r} "
                    f"at step {self.step_count}"
                )
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * np.square(g)
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
