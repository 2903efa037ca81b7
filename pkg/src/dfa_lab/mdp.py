"""Finite tabular MDPs, the stochastic GridWorld, and seeded rollouts."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

# action order: up, down, left, right
ACTION_NAMES = ("up", "down", "left", "right")
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))
_OPPOSITE = (1, 0, 3, 2)

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class TabularMdp:
    """A finite MDP with explicit transition tensor ``P[s, a, s']``.

    ``reward[s, a]`` is the expected one-step reward used by planners.  When
    ``destination_reward`` is set, rollouts record the reward of the cell that
    was actually entered instead (the GridWorld convention).
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    horizon: int
    initial_dist: np.ndarray
    destination_reward: np.ndarray | None = None
    _cum_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        r = np.asarray(self.reward, dtype=np.float64)
        p0 = np.asarray(self.initial_dist, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {P.shape}")
        if r.shape != P.shape[:2]:
            raise ValueError(f"reward shape {r.shape} does not match transition {P.shape}")
        if p0.shape != (P.shape[0],):
            raise ValueError("initial_dist must be a vector over states")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > _PROB_TOL:
            raise ValueError("transition rows must be probability vectors")
        if np.any(p0 < 0) or abs(p0.sum() - 1.0) > _PROB_TOL:
            raise ValueError("initial_dist must sum to 1")
        if not np.all(np.isfinite(r)):
            raise ValueError("rewards must be finite")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "initial_dist", p0)
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.destination_reward is not None:
            d = np.asarray(self.destination_reward, dtype=np.float64)
            if d.shape != (P.shape[0],):
                raise ValueError("destination_reward must be a vector over states")
            object.__setattr__(self, "destination_reward", d)
        for arr in (self.transition, self.reward, self.initial_dist, self.destination_reward):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def cumulative_tables(self):
        """Cumulative transition rows and initial distribution as Python lists.

        Cached; used by the pure-Python sampler, which beats numpy for the
        tiny per-step draws of a single rollout.
        """
        if not self._cum_cache:
            cum = np.cumsum(self.transition, axis=2)
            cum[..., -1] = 1.0
            p0 = np.cumsum(self.initial_dist)
            p0[-1] = 1.0
            self._cum_cache["P"] = cum.tolist()
            self._cum_cache["p0"] = p0.tolist()
            self._cum_cache["r"] = self.reward.tolist()
            if self.destination_reward is not None:
                self._cum_cache["dest"] = self.destination_reward.tolist()
        return self._cum_cache


@dataclass(frozen=True)
class Trajectory:
    """Length-H sequence of (state, action) pairs with realized rewards."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    final_state: int | None = None

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int64)
        a = np.asarray(self.actions, dtype=np.int64)
        r = np.asarray(self.rewards, dtype=np.float64)
        if not (s.shape == a.shape == r.shape) or s.ndim != 1 or s.size == 0:
            raise ValueError("states, actions and rewards must be equal-length 1-d arrays")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "actions", a)
        object.__setattr__(self, "rewards", r)

    def __len__(self):
        return self.states.size

    @property
    def steps(self) -> list[tuple[int, int]]:
        return list(zip(self.states.tolist(), self.actions.tolist()))

    def check_bounds(self, n_states: int, n_actions: int):
        if self.states.min() < 0 or self.states.max() >= n_states:
            raise ValueError("trajectory state index out of range")
        if self.actions.min() < 0 or self.actions.max() >= n_actions:
            raise ValueError("trajectory action index out of range")


@dataclass(frozen=True)
class GridWorldSpec:
    side: int = 5
    reverse_prob: float = 0.4
    reward_coin_prob: float = 0.5
    horizon: int = 20
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.side) < 2:
            raise ValueError("grid side must be at least 2")
        if not 0.0 <= self.reverse_prob <= 1.0:
            raise ValueError("reverse_prob must lie in [0, 1]")
        if not 0.0 <= self.reward_coin_prob <= 1.0:
            raise ValueError("reward_coin_prob must lie in [0, 1]")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be positive")
        if int(self.rng_seed) < 0:
            raise ValueError("rng_seed must be unsigned")

    @property
    def start_cell(self) -> tuple[int, int]:
        return self.side // 2, self.side // 2


def cell_index(row: int, col: int, side: int) -> int:
    return row * side + col


def cell_coords(state: int, side: int) -> tuple[int, int]:
    return divmod(int(state), side)


def grid_embedding(side: int) -> np.ndarray:
    """(row, col) coordinates for every GridWorld state index."""
    rows, cols = np.divmod(np.arange(side * side), side)
    return np.stack([rows, cols], axis=1).astype(np.float64)


def _move(row, col, action, side):
    dr, dc = _MOVES[action]
    r, c = row + dr, col + dc
    if 0 <= r < side and 0 <= c < side:
        return r, c
    return row, col


def build_gridworld(spec: GridWorldSpec) -> TabularMdp:
    """Stochastic GridWorld: each cell holds an N(0, 1) reward with probability
    ``reward_coin_prob`` (else 0); each action is reversed with probability
    ``reverse_prob``; off-grid moves leave the agent in place."""
    side = spec.side
    n = side * side
    rng = np.random.default_rng(spec.rng_seed)
    heads = rng.random(n) < spec.reward_coin_prob
    values = rng.standard_normal(n)
    cell_reward = np.where(heads, values, 0.0)

    P = np.zeros((n, 4, n))
    for s in range(n):
        row, col = cell_coords(s, side)
        for a in range(4):
            intended = cell_index(*_move(row, col, a, side), side)
            reversed_ = cell_index(*_move(row, col, _OPPOSITE[a], side), side)
            P[s, a, intended] += 1.0 - spec.reverse_prob
            P[s, a, reversed_] += spec.reverse_prob
    reward = P @ cell_reward
    p0 = np.zeros(n)
    p0[cell_index(*spec.start_cell, side)] = 1.0
    return TabularMdp(P, reward, gamma=1.0, horizon=spec.horizon, initial_dist=p0,
                      destination_reward=cell_reward)


def _policy_cumprobs(policy, n_states, n_actions):
    probs = policy.probs()
    if probs.shape[-2:] != (n_states, n_actions):
        raise ValueError(
            f"policy shape {probs.shape} does not match MDP ({n_states}, {n_actions})")
    cum = np.cumsum(probs, axis=-1)
    cum[..., -1] = 1.0
    return cum.tolist(), probs.ndim == 3


def rollout(mdp: TabularMdp, policy, rng: np.random.Generator) -> Trajectory:
    """Sample one length-H trajectory under ``policy`` (a LogitPolicy)."""
    cum_pi, timed = _policy_cumprobs(policy, mdp.n_states, mdp.n_actions)
    return _sample(mdp, cum_pi, timed, rng)


def rollouts(mdp: TabularMdp, policy, rng: np.random.Generator, n: int) -> list[Trajectory]:
    """``n`` independent rollouts; consumes the stream exactly as ``n`` calls to
    :func:`rollout` would."""
    cum_pi, timed = _policy_cumprobs(policy, mdp.n_states, mdp.n_actions)
    return [_sample(mdp, cum_pi, timed, rng) for _ in range(n)]


def _sample(mdp, cum_pi, timed, rng):
    tables = mdp.cumulative_tables()
    cum_P, r_tab, dest = tables["P"], tables["r"], tables.get("dest")
    H = mdp.horizon
    u = rng.random(2 * H + 1).tolist()
    s = bisect_right(tables["p0"], u[0])
    states, actions, rewards = [0] * H, [0] * H, [0.0] * H
    for t in range(H):
        row = cum_pi[t][s] if timed else cum_pi[s]
        a = bisect_right(row, u[2 * t + 1])
        s_next = bisect_right(cum_P[s][a], u[2 * t + 2])
        states[t] = s
        actions[t] = a
        rewards[t] = dest[s_next] if dest is not None else r_tab[s][a]
        s = s_next
    return Trajectory(np.array(states), np.array(actions), np.array(rewards), final_state=s)


def batch_returns(mdp: TabularMdp, probs: np.ndarray, rng: np.random.Generator,
                  n: int) -> np.ndarray:
    """Undiscounted-by-default returns of ``n`` parallel rollouts (vectorized).

    Used for evaluation, where only returns are needed.
    """
    H = mdp.horizon
    cum_pi = np.cumsum(probs, axis=-1)
    cum_pi[..., -1] = 1.0
    cum_P = np.cumsum(mdp.transition, axis=2)
    cum_P[..., -1] = 1.0
    p0 = np.cumsum(mdp.initial_dist)
    p0[-1] = 1.0
    timed = probs.ndim == 3
    u = rng.random((2 * H + 1, n))
    s = np.minimum(np.searchsorted(p0, u[0], side="right"), mdp.n_states - 1)
    total = np.zeros(n)
    discount = 1.0
    for t in range(H):
        rows = cum_pi[t, s] if timed else cum_pi[s]
        a = (u[2 * t + 1][:, None] >= rows).sum(axis=1)
        a = np.minimum(a, mdp.n_actions - 1)
        s_next = (u[2 * t + 2][:, None] >= cum_P[s, a]).sum(axis=1)
        s_next = np.minimum(s_next, mdp.n_states - 1)
        if mdp.destination_reward is not None:
            total += discount * mdp.destination_reward[s_next]
        else:
            total += discount * mdp.reward[s, a]
        discount *= mdp.gamma
        s = s_next
    return total


def trajectory_return(traj: Trajectory, gamma: float) -> float:
    """Discounted sum of realized rewards."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if gamma == 1.0:
        return float(np.sum(traj.rewards))
    return float(np.sum(traj.rewards * gamma ** np.arange(len(traj))))


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, gamma: float = 0.9,
               horizon: int = 1, deterministic: bool = False) -> TabularMdp:
    """Random MDP with N(0, 1) rewards, uniform start, and Dirichlet(1)
    transitions (or a random next state per (s, a) if ``deterministic``)."""
    S, A = n_states, n_actions
    if deterministic:
        P = np.zeros((S, A, S))
        P[np.arange(S)[:, None], np.arange(A)[None, :], rng.integers(0, S, size=(S, A))] = 1.0
    else:
        P = rng.dirichlet(np.ones(S), size=(S, A))
        P /= P.sum(axis=2, keepdims=True)
    reward = rng.standard_normal((S, A))
    return TabularMdp(P, reward, gamma=gamma, horizon=horizon, initial_dist=np.full(S, 1.0 / S))
