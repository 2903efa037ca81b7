"""Policy evaluation with a dedicated random stream, and the periodic
evaluation schedule used by every training loop."""

from __future__ import annotations

import numpy as np

from ..mdp import TabularMdp, batch_returns
from .records import RunRecord


def _as_generator(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def evaluate_policy(mdp: TabularMdp, policy, eval_episodes: int = 100, eval_seed=0) -> float:
    """Mean true return over ``eval_episodes`` stochastic rollouts.

    ``eval_seed`` may be an integer or a Generator owned by the caller.
    """
    if eval_episodes < 1:
        raise ValueError("eval_episodes must be at least 1")
    rng = _as_generator(eval_seed)
    return float(np.mean(batch_returns(mdp, policy.probs(), rng, eval_episodes)))


class EvalSchedule:
    """Records the current policy's return at env_steps 0, k, 2k, ...

    Every multiple of ``interval`` that the step counter passes gets a point,
    labelled with that multiple, so all runs sharing ``interval`` and a budget
    share one step grid.
    """

    def __init__(self, mdp: TabularMdp, record: RunRecord, interval: int = 2000,
                 episodes: int = 100, rng=None):
        if interval < 1:
            raise ValueError("eval_interval must be positive")
        self.mdp = mdp
        self.record = record
        self.interval = int(interval)
        self.episodes = int(episodes)
        self.rng = _as_generator(rng)
        self._next = 0

    def update(self, env_steps: int, policy) -> None:
        if self._next > env_steps:
            return
        value = evaluate_policy(self.mdp, policy, self.episodes, self.rng)
        while self._next <= env_steps:
            self.record.append(self._next, value)
            self._next += self.interval
