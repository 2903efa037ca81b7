"""Reward-modelling baselines: a tabular Bradley-Terry reward model and a
KL-penalized PPO that can train on either the true or a learned reward."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness.evaluation import EvalSchedule
from .harness.records import RunRecord
from .mdp import TabularMdp, Trajectory, rollouts
from .optim import make_optimizer
from .policy import LogitPolicy, log_sigmoid, sigmoid
from .preference import AnnotatorPanel, annotate_trajectories


@dataclass
class RewardModel:
    r_hat: np.ndarray

    def __post_init__(self):
        self.r_hat = np.array(self.r_hat, dtype=np.float64)
        if not np.all(np.isfinite(self.r_hat)):
            raise ValueError("reward model entries must be finite")

    def save(self, path) -> None:
        S, A = self.r_hat.shape
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for s in range(S):
                for a in range(A):
                    fh.write(f"{s} {a} {float(self.r_hat[s, a])!r}\n")

    @classmethod
    def load(cls, path) -> "RewardModel":
        rows = [line.split() for line in Path(path).read_text(encoding="utf-8").splitlines()
                if line.strip()]
        S = max(int(r[0]) for r in rows) + 1
        A = max(int(r[1]) for r in rows) + 1
        r_hat = np.zeros((S, A))
        for s, a, v in rows:
            r_hat[int(s), int(a)] = float(v)
        return cls(r_hat)


def model_return(model: RewardModel, traj: Trajectory, gamma: float = 1.0) -> float:
    disc = gamma ** np.arange(len(traj))
    return float(np.sum(disc * model.r_hat[traj.states, traj.actions]))


def _features(pairs, n_states, n_actions, gamma):
    X = np.zeros((len(pairs), n_states * n_actions))
    for k, p in enumerate(pairs):
        for traj, sign in ((p.preferred, 1.0), (p.rejected, -1.0)):
            disc = gamma ** np.arange(len(traj))
            np.add.at(X[k], traj.states * n_actions + traj.actions, sign * disc)
    return X


def fit_reward_model(pairs, n_states: int, n_actions: int, gamma: float = 1.0,
                     learning_rate: float = 3e-2, epochs: int = 200,
                     optimizer: str = "adam"):
    """Full-batch maximum-likelihood fit of a tabular reward under
    P(tau+ > tau-) = sigmoid(R(tau+) - R(tau-)).

    Returns the model and the per-epoch training losses (loss before each
    update, then the final loss).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no preference pairs to fit")
    X = _features(pairs, n_states, n_actions, gamma)
    w = np.zeros(n_states * n_actions)
    opt = make_optimizer(optimizer, learning_rate)
    losses = []
    for _ in range(epochs):
        z = X @ w
        losses.append(float(-np.mean(log_sigmoid(z))))
        grad = -(X.T @ sigmoid(-z)) / len(pairs)
        opt.step(w, grad)
    losses.append(float(-np.mean(log_sigmoid(X @ w))))
    return RewardModel(w.reshape(n_states, n_actions)), losses


@dataclass(frozen=True)
class PpoConfig:
    kl_coeff: float = 0.1
    gae_lambda: float = 0.95
    gamma: float = 1.0
    learning_rate: float = 3e-2
    iterations: int = 1000
    rollouts_per_iter: int = 2
    value_lr: float = 0.1

    def __post_init__(self):
        if self.kl_coeff < 0 or self.learning_rate <= 0:
            raise ValueError("kl_coeff must be >= 0 and learning_rate > 0")
        if not 0.0 <= self.gae_lambda <= 1.0 or not 0.0 < self.gamma <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1] and gamma in (0, 1]")
        if self.iterations < 0 or self.rollouts_per_iter < 1:
            raise ValueError("iterations must be >= 0 and rollouts_per_iter >= 1")


def gae(rewards: np.ndarray, values: np.ndarray, gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates for one batch of equal-length episodes.

    ``rewards`` is (N, H); ``values`` is (N, H + 1) with the bootstrap value
    of the state after the last step in the final column.
    """
    N, H = rewards.shape
    delta = rewards + gamma * values[:, 1:] - values[:, :-1]
    adv = np.zeros((N, H))
    running = np.zeros(N)
    for t in range(H - 1, -1, -1):
        running = delta[:, t] + gamma * lam * running
        adv[:, t] = running
    return adv


def returns_to_go(rewards: np.ndarray, gamma: float) -> np.ndarray:
    N, H = rewards.shape
    out = np.zeros((N, H))
    running = np.zeros(N)
    for t in range(H - 1, -1, -1):
        running = rewards[:, t] + gamma * running
        out[:, t] = running
    return out


def _kl_penalized_step(policy, opt, W, visit_weight, old_probs, kl_coeff):
    """One update maximizing sum_sa W[s,a] pi(a|s) - c * sum_s rho_s KL(pi || pi_old).

    The optimizer proposes a logit change d from the surrogate gradient; the
    step length along d maximizes a second-order model of the penalized
    objective, g * eta - c * kappa * eta^2 / 2, clipped to [0, 1].  Here g is
    the surrogate's directional derivative and kappa = sum_s rho_s Var(d_s)
    the KL curvature.  Small c leaves the optimizer step untouched; large c
    shrinks it toward zero.
    """
    surr_grad = old_probs * (W - np.sum(W * old_probs, axis=1, keepdims=True))
    d = opt.delta(-surr_grad)
    g = float(np.sum(surr_grad * d))
    centered = d - np.sum(old_probs * d, axis=1, keepdims=True)
    kappa = float(np.sum(visit_weight * np.sum(old_probs * centered**2, axis=1)))
    if g <= 0.0:
        return
    eta = 1.0 if kl_coeff * kappa <= g else g / (kl_coeff * kappa)
    policy.logits += eta * d


def ppo_train(mdp: TabularMdp, reward_source, config: PpoConfig, rng: np.random.Generator, *,
              eval_episodes: int = 100, eval_interval: int = 2000, eval_rng=None,
              algorithm: str = "oracle-ppo", seed: int = 0, step_offset: int = 0,
              schedule: EvalSchedule | None = None, init: LogitPolicy | None = None):
    """KL-penalized policy optimization on a tabular softmax policy.

    ``reward_source`` is ``"true"`` (the MDP's expected reward table r(s, a))
    or a RewardModel.  Advantages come from GAE against a time-indexed tabular
    value baseline fitted to Monte-Carlo returns.  Evaluation always uses the
    true reward.  ``step_offset`` counts environment steps already spent
    (e.g. on reward-model data) before PPO starts.
    """
    use_true = isinstance(reward_source, str)
    if use_true and reward_source != "true":
        raise ValueError(f"unknown reward source {reward_source!r}")
    S, A, H = mdp.n_states, mdp.n_actions, mdp.horizon
    policy = init.copy() if init is not None else LogitPolicy.uniform(S, A)
    opt = make_optimizer("adam", config.learning_rate)
    values = np.zeros((H + 1, S))
    if schedule is None:
        record = RunRecord(algorithm, seed)
        schedule = EvalSchedule(mdp, record, eval_interval, eval_episodes,
                                eval_rng if eval_rng is not None else np.random.default_rng(seed))
    steps = step_offset
    schedule.update(steps, policy)
    k = config.rollouts_per_iter
    t_idx = np.arange(H)
    for _ in range(config.iterations):
        old_probs = policy.probs()
        trajs = rollouts(mdp, policy, rng, k)
        steps += k * H
        states = np.stack([tr.states for tr in trajs])
        actions = np.stack([tr.actions for tr in trajs])
        finals = np.array([tr.final_state for tr in trajs])
        r_table = mdp.reward if use_true else reward_source.r_hat
        rewards = r_table[states, actions]
        nxt = np.concatenate([states[:, 1:], finals[:, None]], axis=1)
        v_now = values[t_idx, states]
        v_next = values[t_idx + 1, nxt]
        adv = gae(rewards, np.concatenate([v_now, v_next[:, -1:]], axis=1),
                  config.gamma, config.gae_lambda)

        n = states.size
        flat = (states * A + actions).ravel()
        ratio_w = (adv / old_probs[states, actions]).ravel()
        W = np.bincount(flat, weights=ratio_w, minlength=S * A).reshape(S, A) / n
        visit_weight = np.bincount(states.ravel(), minlength=S) / n
        _kl_penalized_step(policy, opt, W, visit_weight, old_probs, config.kl_coeff)

        G = returns_to_go(rewards, config.gamma)
        cell = (t_idx * S + states).ravel()
        tot = np.bincount(cell, weights=G.ravel(), minlength=H * S)
        cnt = np.bincount(cell, minlength=H * S)
        seen = cnt > 0
        vflat = values[:H].reshape(-1)
        vflat[seen] += config.value_lr * (tot[seen] / cnt[seen] - vflat[seen])
        values[:H] = vflat.reshape(H, S)
        schedule.update(steps, policy)
    return policy, schedule.record


def collect_preference_pairs(mdp: TabularMdp, panel: AnnotatorPanel, n_pairs: int,
                             rng: np.random.Generator, policy: LogitPolicy | None = None):
    """Roll out ``2 * n_pairs`` trajectories and label them with the panel."""
    policy = policy or LogitPolicy.uniform(mdp.n_states, mdp.n_actions)
    trajs = rollouts(mdp, policy, rng, 2 * n_pairs)
    return [annotate_trajectories(panel, trajs[2 * k], trajs[2 * k + 1], gamma=1.0)
            for k in range(n_pairs)]


def rm_ppo_train(mdp: TabularMdp, panel: AnnotatorPanel, n_pairs: int, config: PpoConfig,
                 rng: np.random.Generator, *, rm_epochs: int = 1000, rm_learning_rate: float = 3e-2,
                 eval_episodes: int = 100, eval_interval: int = 2000, eval_rng=None,
                 algorithm: str = "rm-ppo", seed: int = 0):
    """Two-stage RLHF: fit a reward model offline on ``n_pairs`` labelled pairs
    from the initial policy, then run PPO on the learned reward.

    The pairs cost ``2 * H`` environment steps each and are charged to the
    run's step counter before PPO begins.
    """
    record = RunRecord(algorithm, seed)
    schedule = EvalSchedule(mdp, record, eval_interval, eval_episodes,
                            eval_rng if eval_rng is not None else np.random.default_rng(seed))
    policy = LogitPolicy.uniform(mdp.n_states, mdp.n_actions)
    schedule.update(0, policy)
    pairs = collect_preference_pairs(mdp, panel, n_pairs, rng, policy)
    pretrain_steps = 2 * mdp.horizon * n_pairs
    model, _ = fit_reward_model(pairs, mdp.n_states, mdp.n_actions, gamma=1.0,
                                learning_rate=rm_learning_rate, epochs=rm_epochs)
    policy, record = ppo_train(mdp, model, config, rng, step_offset=pretrain_steps,
                               schedule=schedule, init=policy)
    return policy, record, model
