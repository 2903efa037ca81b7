"""Tabular softmax policies and the stable logistic primitives shared by the
preference losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_softmax, softmax


def sigmoid(z):
    return expit(z)


def log_sigmoid(z):
    """log(sigmoid(z)) without overflow for either sign of z."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=np.float64))


@dataclass
class LogitPolicy:
    """Per-state action logits with softmax semantics.

    ``logits`` has shape (S, A), or (H, S, A) for a time-indexed policy.
    Adding a constant to any row leaves the policy unchanged.
    """

    logits: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        self.logits = np.array(self.logits, dtype=np.float64)
        if self.logits.ndim not in (2, 3):
            raise ValueError("logits must be (S, A) or (H, S, A)")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def uniform(cls, n_states: int, n_actions: int, alpha: float = 1.0) -> "LogitPolicy":
        return cls(np.zeros((n_states, n_actions)), alpha)

    @property
    def time_indexed(self) -> bool:
        return self.logits.ndim == 3

    @property
    def n_states(self) -> int:
        return self.logits.shape[-2]

    @property
    def n_actions(self) -> int:
        return self.logits.shape[-1]

    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=-1)

    def log_probs(self) -> np.ndarray:
        return log_softmax(self.logits, axis=-1)

    def copy(self) -> "LogitPolicy":
        return LogitPolicy(self.logits.copy(), self.alpha)

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.logits, axis=-1)


def save_policy(policy: LogitPolicy, path) -> None:
    """Write a stationary policy as ``state action logit`` lines."""
    if policy.time_indexed:
        raise ValueError("only stationary policies serialize to the text table")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# alpha {float(policy.alpha)!r}\n")
        for s in range(policy.n_states):
            for a in range(policy.n_actions):
                fh.write(f"{s} {a} {float(policy.logits[s, a])!r}\n")


def load_policy(path) -> LogitPolicy:
    alpha = 1.0
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "alpha":
                    alpha = float(parts[1])
                continue
            s, a, v = line.split()
            rows.append((int(s), int(a), float(v)))
    if not rows:
        raise ValueError(f"{path}: empty policy table")
    n_s = max(r[0] for r in rows) + 1
    n_a = max(r[1] for r in rows) + 1
    logits = np.full((n_s, n_a), np.nan)
    for s, a, v in rows:
        logits[s, a] = v
    if np.isnan(logits).any():
        raise ValueError(f"{path}: policy table is incomplete")
    return LogitPolicy(logits, alpha)
