"""Exact entropy-regularized planning on tabular MDPs.

Two Bellman conventions are supported:

``"standard"``
    Q(s,a) = r(s,a) + gamma * E[V(s')],  V(s) = lam * logsumexp(Q(s,.)/lam).

``"entropy-augmented"``
    Q(s,a) = r(s,a) + gamma * E[V(s')] + lam * H(pi(.|s)), with the same V.
    The entropy bonus is constant across actions at a state, so the Gibbs
    policy at that state is unchanged; only the values passed upstream move.
    Under this convention, in a deterministic finite-horizon MDP with
    gamma = 1, the product of per-step Gibbs probabilities along a path is
    exp((G(tau) - V_0(s_0)) / lam), where G is the entropy-bonus return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .mdp import TabularMdp, Trajectory
from .policy import LogitPolicy, sigmoid

CONVENTIONS = ("standard", "entropy-augmented")


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SoftValues:
    """Soft-optimal values.  ``q`` is (H, S, A) in finite-horizon mode and
    (S, A) in discounted mode; ``v`` drops the action axis."""

    q: np.ndarray
    v: np.ndarray
    entropy_coeff: float
    mode: str
    convention: str = "standard"

    @property
    def finite_horizon(self) -> bool:
        return self.mode == "finite-horizon"

    def q_at(self, s: int, t: int = 0) -> np.ndarray:
        return self.q[t, s] if self.finite_horizon else self.q[s]


def soft_v(q: np.ndarray, lam: float) -> np.ndarray:
    """lam * logsumexp(q / lam) over the last axis."""
    return lam * logsumexp(q / lam, axis=-1)


def policy_entropy(q: np.ndarray, lam: float) -> np.ndarray:
    """Entropy of the Gibbs policy softmax(q / lam), last axis."""
    p = softmax(q / lam, axis=-1)
    logp = q / lam - logsumexp(q / lam, axis=-1, keepdims=True)
    return -np.sum(p * logp, axis=-1)


def soft_bellman(mdp: TabularMdp, q: np.ndarray, lam: float,
                 convention: str = "standard") -> np.ndarray:
    """One application of the discounted soft Bellman operator to ``q`` (S, A)."""
    q_new = mdp.reward + mdp.gamma * mdp.transition @ soft_v(q, lam)
    if convention == "entropy-augmented":
        q_new = q_new + lam * policy_entropy(q_new, lam)[:, None]
    return q_new


def soft_value_iteration(mdp: TabularMdp, entropy_coeff: float, tol: float = 1e-10,
                         max_iter: int = 100_000, mode: str | None = None,
                         convention: str = "standard") -> SoftValues:
    """Soft-optimal Q and V by backward induction or fixed-point iteration.

    ``mode`` defaults to finite-horizon when ``mdp.gamma == 1`` and to the
    discounted fixed point otherwise.
    """
    lam = float(entropy_coeff)
    if lam <= 0:
        raise ValueError("entropy_coeff must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if mode is None:
        mode = "finite-horizon" if mdp.gamma == 1.0 else "discounted-fixed-point"

    if mode == "finite-horizon":
        H, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
        q = np.zeros((H, S, A))
        v = np.zeros((H + 1, S))
        for t in range(H - 1, -1, -1):
            q_t = mdp.reward + mdp.gamma * mdp.transition @ v[t + 1]
            if convention == "entropy-augmented":
                q_t = q_t + lam * policy_entropy(q_t, lam)[:, None]
            q[t] = q_t
            v[t] = soft_v(q_t, lam)
        return SoftValues(q, v[:H], lam, mode, convention)

    if mode != "discounted-fixed-point":
        raise ValueError(f"unknown mode {mode!r}")
    if mdp.gamma >= 1.0:
        raise ValueError("discounted mode needs gamma < 1")
    q = np.zeros((mdp.n_states, mdp.n_actions))
    residual = np.inf
    for _ in range(max_iter):
        q_new = soft_bellman(mdp, q, lam, convention)
        residual = float(np.max(np.abs(q_new - q)))
        q = q_new
        if residual < tol:
            return SoftValues(q, soft_v(q, lam), lam, mode, convention)
    raise ConvergenceError("soft value iteration did not converge", residual)


def value_iteration(mdp: TabularMdp, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Plain hard-max discounted value iteration; returns V (S,)."""
    v = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        v_new = np.max(mdp.reward + mdp.gamma * mdp.transition @ v, axis=1)
        if np.max(np.abs(v_new - v)) < tol:
            return v_new
        v = v_new
    raise ConvergenceError("value iteration did not converge", float(np.max(np.abs(v_new - v))))


def gibbs_policy(values: SoftValues, inv_temp: float) -> LogitPolicy:
    """Logits ``inv_temp * Q``; time-indexed when the values are."""
    if inv_temp <= 0:
        raise ValueError("inv_temp must be positive")
    return LogitPolicy(inv_temp * values.q)


def soft_return(traj: Trajectory, policy: LogitPolicy, entropy_coeff: float,
                gamma: float) -> float:
    """sum_t gamma^t (r_t + lam * H(pi(.|s_t))) along ``traj``."""
    traj.check_bounds(policy.n_states, policy.n_actions)
    p = policy.probs()
    logp = policy.log_probs()
    ent = -np.sum(p * logp, axis=-1)
    T = len(traj)
    if policy.time_indexed:
        if ent.shape[0] < T:
            raise ValueError("time-indexed policy shorter than trajectory")
        h = ent[np.arange(T), traj.states]
    else:
        h = ent[traj.states]
    disc = gamma ** np.arange(T)
    return float(np.sum(disc * (traj.rewards + entropy_coeff * h)))


def bt_state_prob(values: SoftValues, s: int, a: int, b: int, beta: float,
                  t: int = 0) -> float:
    """Bradley-Terry probability that action ``a`` beats ``b`` at state ``s``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    q = values.q_at(s, t)
    return float(sigmoid(beta * (q[a] - q[b])))


def bt_traj_prob(g_plus: float, g_minus: float, beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return float(sigmoid(beta * (g_plus - g_minus)))
