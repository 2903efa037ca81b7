"""First-order optimizers over a single parameter array (minimization)."""

from __future__ import annotations

import numpy as np


class GradientDescent:
    def __init__(self, learning_rate: float):
        self.learning_rate = float(learning_rate)

    def delta(self, grad: np.ndarray) -> np.ndarray:
        return -self.learning_rate * grad

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        params += self.delta(grad)


class Adam:
    """Adam with bias correction; updates ``params`` in place."""

    def __init__(self, learning_rate: float = 3e-2, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-5):
        self.learning_rate = float(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def delta(self, grad: np.ndarray) -> np.ndarray:
        """Advance the moment estimates and return the parameter change."""
        if self.m is None:
            self.m = np.zeros_like(grad, dtype=np.float64)
            self.v = np.zeros_like(grad, dtype=np.float64)
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return -self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        params += self.delta(grad)


def make_optimizer(name: str, learning_rate: float):
    if name in ("adam", "adaptive-moment"):
        return Adam(learning_rate)
    if name in ("sgd", "gd", "gradient-descent"):
        return GradientDescent(learning_rate)
    raise ValueError(f"unknown optimizer {name!r}")
