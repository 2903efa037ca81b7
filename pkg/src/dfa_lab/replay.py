"""Off-policy DFA: replay buffer, nearest-state retrieval, Q-ordered preference
synthesis, a tabular soft-Q critic, and tabular SAC for comparison."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dfa import DfaConfig, minimize_population_loss, pref_loss_grad
from .harness.evaluation import EvalSchedule
from .harness.records import RunRecord
from .mdp import TabularMdp, rollout
from .optim import make_optimizer
from .policy import LogitPolicy, sigmoid
from .preference import StatePrefPair, pref_matrix_from_q
from .soft import soft_v


class ReplayBuffer:
    """Bounded FIFO of (state, action, reward, next_state, terminal) tuples.

    Entries are addressed by a monotonically increasing id (insertion order),
    so ``id`` doubles as recency.  A per-state index of live ids makes the
    nearest-state lookup O(n_states) instead of O(size).
    """

    def __init__(self, capacity: int, state_embedding: np.ndarray):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.embedding = np.asarray(state_embedding, dtype=np.float64)
        n_states = self.embedding.shape[0]
        self._data = np.zeros((self.capacity, 5))
        self._first_id = 0
        self._next_id = 0
        self._by_state = [deque() for _ in range(n_states)]
        # pairwise squared distances between state embeddings
        diff = self.embedding[:, None, :] - self.embedding[None, :, :]
        self._dist2 = np.sum(diff * diff, axis=-1)
        self._order = np.argsort(self._dist2, axis=1, kind="stable").tolist()
        self._dist2_rows = self._dist2.tolist()

    def __len__(self):
        return self._next_id - self._first_id

    @property
    def n_states(self) -> int:
        return self.embedding.shape[0]

    def ids(self) -> np.ndarray:
        return np.arange(self._first_id, self._next_id)

    def push(self, state, action, reward, next_state, terminal=False) -> int:
        if not (0 <= state < self.n_states and 0 <= next_state < self.n_states):
            raise ValueError("state index out of range")
        if len(self) == self.capacity:
            old = self._first_id
            old_state = int(self._data[old % self.capacity, 0])
            self._by_state[old_state].popleft()
            self._first_id += 1
        eid = self._next_id
        self._data[eid % self.capacity] = (state, action, reward, next_state, float(terminal))
        self._by_state[int(state)].append(eid)
        self._next_id += 1
        return eid

    def entry(self, eid: int):
        if not self._first_id <= eid < self._next_id:
            raise KeyError(f"entry {eid} is not in the buffer")
        s, a, r, s2, done = self._data[eid % self.capacity]
        return int(s), int(a), float(r), int(s2), bool(done)

    def arrays(self, ids):
        rows = self._data[np.asarray(ids) % self.capacity]
        return (rows[:, 0].astype(np.int64), rows[:, 1].astype(np.int64), rows[:, 2],
                rows[:, 3].astype(np.int64), rows[:, 4].astype(bool))

    def sample_ids(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(self._first_id, self._next_id, size=n)

    def _latest_other(self, state: int, exclude: int):
        ids = self._by_state[state]
        if not ids:
            return None
        if ids[-1] != exclude:
            return ids[-1]
        return ids[-2] if len(ids) > 1 else None


def nearest_state_action(buffer: ReplayBuffer, s: int, exclude_entry: int) -> tuple[int, int]:
    """(state, action) of the entry whose state embedding is closest to
    ``s``'s, skipping ``exclude_entry``; ties go to the most recent entry."""
    return buffer.entry(_nearest_entry(buffer, s, exclude_entry))[:2]


def _nearest_entry(buffer, s, exclude):
    if len(buffer) < 2:
        raise ValueError("nearest-state lookup needs at least two buffer entries")
    best_d, best_id = np.inf, -1
    dist = buffer._dist2_rows[s]
    for other in buffer._order[s]:
        d = dist[other]
        if d > best_d:
            break
        eid = buffer._latest_other(other, exclude)
        if eid is not None and (d < best_d or eid > best_id):
            best_d, best_id = d, eid
    return best_id


@dataclass
class TabularCritic:
    q: np.ndarray
    entropy_coeff: float = 0.1
    learning_rate: float = 0.1
    gamma: float = 0.9

    def __post_init__(self):
        self.q = np.array(self.q, dtype=np.float64)
        if self.entropy_coeff <= 0:
            raise ValueError("entropy_coeff must be positive")

    @classmethod
    def zeros(cls, n_states, n_actions, **kw) -> "TabularCritic":
        return cls(np.zeros((n_states, n_actions)), **kw)


def synthesize_batch(buffer: ReplayBuffer, critic: TabularCritic, batch,
                     soft_labels: bool = False, beta: float = 1.0, rng=None):
    """Q-ordered preference pairs for the sampled buffer entries.

    Each entry (s_i, a_i) is paired with the action of its nearest-state
    neighbour; the higher-Q action is preferred, exact ties going to a_i, and
    pairs with identical actions are dropped.  With ``soft_labels`` the order
    is instead sampled with probability sigmoid(beta * dQ).
    """
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    out = []
    for eid in batch:
        s, a = buffer.entry(int(eid))[:2]
        _, a_other = buffer.entry(_nearest_entry(buffer, s, int(eid)))[:2]
        if a_other == a:
            continue
        qa, qb = critic.q[s, a], critic.q[s, a_other]
        if soft_labels:
            first = rng.random() < sigmoid(beta * (qa - qb))
        else:
            first = qa >= qb
        out.append(StatePrefPair(s, a, a_other) if first else StatePrefPair(s, a_other, a))
    return out


def soft_q_update(critic: TabularCritic, transition, target: np.ndarray | None = None):
    """One TD step toward r + gamma * lam * logsumexp(q_target(s', .) / lam).

    ``transition`` is (s, a, r, s_next, terminal) or a tuple of equal-length
    arrays for a mini-batch (averaged per (s, a) cell).
    """
    s, a, r, s2, done = (np.atleast_1d(np.asarray(x)) for x in transition)
    q_t = critic.q if target is None else target
    lam = critic.entropy_coeff
    y = r + critic.gamma * np.where(done.astype(bool), 0.0, soft_v(q_t[s2.astype(int)], lam))
    s, a = s.astype(int), a.astype(int)
    td = y - critic.q[s, a]
    S, A = critic.q.shape
    flat = s * A + a
    total = np.bincount(flat, weights=td, minlength=S * A)
    count = np.bincount(flat, minlength=S * A)
    mean_td = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    critic.q += critic.learning_rate * mean_td.reshape(S, A)
    return critic


def policy_improvement_from_critic(q: np.ndarray, alpha: float, beta: float,
                                   tol: float = 1e-8, max_iter: int = 200_000) -> np.ndarray:
    """DFA policy steps on exact Bradley-Terry labels built from a frozen critic.

    Returns the probability table reached by minimizing the population
    preference loss at every state.
    """
    pstar = np.stack([pref_matrix_from_q(row, beta) for row in q])
    return np.exp(minimize_population_loss(pstar, alpha, tol=tol, max_iter=max_iter))


@dataclass(frozen=True)
class CriticConfig:
    entropy_coeff: float = 0.1
    learning_rate: float = 0.1
    gamma: float = 0.9
    batch_size: int = 64
    updates_per_step: int = 1
    warmup: int = 200
    buffer_capacity: int = 20_000


def _collect_episode(mdp, policy, rng, buffer):
    traj = rollout(mdp, policy, rng)
    nxt = np.append(traj.states[1:], traj.final_state)
    for s, a, r, s2 in zip(traj.states, traj.actions, traj.rewards, nxt):
        # time-limit truncation is not a terminal state
        buffer.push(int(s), int(a), float(r), int(s2), False)
    return len(traj)


def _default_embedding(mdp, state_embedding):
    if state_embedding is not None:
        return state_embedding
    return np.eye(mdp.n_states)


def dfa_train_offpolicy(mdp: TabularMdp, config: DfaConfig, critic_config: CriticConfig,
                        rng: np.random.Generator, *, episodes: int = 500,
                        state_embedding=None, eval_episodes: int = 100,
                        eval_interval: int = 2000, eval_rng=None, algorithm="dfa-offpolicy",
                        seed: int = 0, policy_steps_per_update: int = 1):
    """Off-policy DFA with synthetic preferences.

    Per environment step after warm-up: one soft-Q critic update on a sampled
    mini-batch, preference synthesis on a fresh sample, and a DFA policy step
    on the state-wise preference loss.
    """
    cc = critic_config
    buffer = ReplayBuffer(cc.buffer_capacity, _default_embedding(mdp, state_embedding))
    critic = TabularCritic.zeros(mdp.n_states, mdp.n_actions, entropy_coeff=cc.entropy_coeff,
                                 learning_rate=cc.learning_rate, gamma=cc.gamma)
    policy = LogitPolicy.uniform(mdp.n_states, mdp.n_actions, alpha=config.alpha)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    record = RunRecord(algorithm, seed)
    schedule = EvalSchedule(mdp, record, eval_interval, eval_episodes,
                            eval_rng if eval_rng is not None else np.random.default_rng(seed))
    steps = 0
    schedule.update(steps, policy)
    for _ in range(episodes):
        steps += _collect_episode(mdp, policy, rng, buffer)
        if len(buffer) >= max(cc.warmup, 2):
            for _ in range(mdp.horizon * cc.updates_per_step):
                soft_q_update(critic, buffer.arrays(buffer.sample_ids(rng, cc.batch_size)))
                for _ in range(policy_steps_per_update):
                    pairs = synthesize_batch(buffer, critic,
                                             buffer.sample_ids(rng, cc.batch_size))
                    if pairs:
                        opt.step(policy.logits,
                                 pref_loss_grad(policy, pairs, config.reweight_pairs))
        schedule.update(steps, policy)
    return policy, record, critic


def sac_tabular_train(mdp: TabularMdp, critic_config: CriticConfig, rng: np.random.Generator,
                      *, episodes: int = 500, eval_episodes: int = 100,
                      eval_interval: int = 2000, eval_rng=None, algorithm: str = "sac",
                      seed: int = 0):
    """Tabular SAC: soft-Q critic on replayed transitions, actor held at the
    Gibbs policy softmax(Q / lam) of the current critic."""
    cc = critic_config
    buffer = ReplayBuffer(cc.buffer_capacity, np.eye(mdp.n_states))
    critic = TabularCritic.zeros(mdp.n_states, mdp.n_actions, entropy_coeff=cc.entropy_coeff,
                                 learning_rate=cc.learning_rate, gamma=cc.gamma)
    policy = LogitPolicy(critic.q / cc.entropy_coeff)
    record = RunRecord(algorithm, seed)
    schedule = EvalSchedule(mdp, record, eval_interval, eval_episodes,
                            eval_rng if eval_rng is not None else np.random.default_rng(seed))
    steps = 0
    schedule.update(steps, policy)
    for _ in range(episodes):
        steps += _collect_episode(mdp, policy, rng, buffer)
        if len(buffer) >= max(cc.warmup, 1):
            for _ in range(mdp.horizon * cc.updates_per_step):
                soft_q_update(critic, buffer.arrays(buffer.sample_ids(rng, cc.batch_size)))
            policy = LogitPolicy(critic.q / cc.entropy_coeff)
        schedule.update(steps, policy)
    return policy, record, critic
