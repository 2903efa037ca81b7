"""Seeded GridWorld experiments under a shared environment-step budget."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..baselines import PpoConfig, ppo_train, rm_ppo_train
from ..dfa import DfaConfig, dfa_train_onpolicy
from ..mdp import GridWorldSpec, build_gridworld, grid_embedding
from ..preference import AnnotatorPanel
from ..replay import CriticConfig, dfa_train_offpolicy, sac_tabular_train
from .config import ConfigError, ExperimentConfig
from .records import RunRecord, write_csv


def sweep_name(alpha: float) -> str:
    return f"dfa-alpha-{alpha:g}"


def expand_algorithms(config: ExperimentConfig) -> list[str]:
    """Run names in config order, with the alpha sweep expanded."""
    names = []
    for alg in config.algorithms:
        if alg == "dfa-alpha-sweep":
            names.extend(sweep_name(a) for a in config.alpha_sweep)
        else:
            names.append(alg)
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate run names: {', '.join(names)}")
    return names


def grid_mdp(config: ExperimentConfig):
    spec = GridWorldSpec(side=config.side, reverse_prob=config.reverse_prob,
                         reward_coin_prob=config.reward_coin_prob, horizon=config.horizon,
                         rng_seed=config.grid_seed)
    return build_gridworld(spec)


def dfa_config(config: ExperimentConfig, alpha: float | None = None) -> DfaConfig:
    steps_per_iter = 2 * config.dfa_pairs_per_iter * config.horizon
    return DfaConfig(alpha=config.dfa_alpha if alpha is None else alpha,
                     learning_rate=config.dfa_learning_rate,
                     iterations=config.budget // steps_per_iter,
                     pairs_per_iter=config.dfa_pairs_per_iter,
                     optimizer=config.dfa_optimizer,
                     reweight_pairs=config.dfa_reweight_pairs)


def ppo_config(config: ExperimentConfig, iterations: int, rollouts_per_iter: int) -> PpoConfig:
    return PpoConfig(kl_coeff=config.ppo_kl_coeff, gae_lambda=config.ppo_gae_lambda,
                     gamma=config.ppo_gamma, learning_rate=config.ppo_learning_rate,
                     iterations=iterations, rollouts_per_iter=rollouts_per_iter,
                     value_lr=config.ppo_value_lr)


def critic_config(config: ExperimentConfig) -> CriticConfig:
    return CriticConfig(entropy_coeff=config.critic_entropy_coeff,
                        learning_rate=config.critic_learning_rate,
                        gamma=config.critic_gamma, batch_size=config.critic_batch_size,
                        warmup=config.critic_warmup,
                        buffer_capacity=config.critic_buffer_capacity)


def rm_schedule(config: ExperimentConfig, name: str) -> tuple[int, int]:
    """(preference pairs, rollouts per PPO iteration) for an RM+PPO variant.

    Pretraining pairs cost 2 * H steps each; the rest of the budget is spread
    over the fixed number of PPO iterations.
    """
    pretrain = config.rm_pretrain_steps(name)
    n_pairs = pretrain // (2 * config.horizon)
    k = (config.budget - pretrain) // (config.rm_ppo_iterations * config.horizon)
    return n_pairs, k


def check_config(config: ExperimentConfig) -> list[str]:
    """Validate everything a run needs; returns the expanded run names."""
    config.validate()
    names = expand_algorithms(config)
    try:
        grid_mdp(config)
        dfa_config(config)
        for a in config.alpha_sweep:
            dfa_config(config, a)
        ppo_config(config, 1, config.ppo_rollouts_per_iter)
        critic_config(config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # every learner must spend exactly the budget so all curves share one grid
    H = config.horizon
    units = {"dfa": 2 * config.dfa_pairs_per_iter * H,
             "oracle-ppo": config.ppo_rollouts_per_iter * H,
             "dfa-offpolicy": H, "sac": H}
    for name in names:
        key = "dfa" if name.startswith("dfa-alpha-") else name
        if key in units and config.budget % units[key]:
            raise ConfigError(f"{name}: budget {config.budget} is not a multiple of its "
                              f"{units[key]} steps per iteration")
        if key in ("rm-ppo-1", "rm-ppo-2"):
            rest = config.budget - config.rm_pretrain_steps(key)
            if rest % (config.rm_ppo_iterations * H):
                raise ConfigError(f"{name}: budget minus pretraining ({rest}) is not a "
                                  f"multiple of rm.ppo_iterations * horizon")
    return names


def seed_streams(seed: int):
    """Independent (train, panel, eval) generators for one run seed."""
    train, panel, evaluation = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(train), np.random.default_rng(panel),
            np.random.default_rng(evaluation))


def run_single(config: ExperimentConfig, name: str, seed: int, mdp=None) -> RunRecord:
    mdp = mdp if mdp is not None else grid_mdp(config)
    train_rng, panel_rng, eval_rng = seed_streams(seed)
    common = dict(eval_episodes=config.eval_episodes, eval_interval=config.eval_interval,
                  eval_rng=eval_rng, algorithm=name, seed=seed)
    panel = AnnotatorPanel(config.panel_size, config.panel_beta, panel_rng)
    H = config.horizon
    if name == "dfa" or name.startswith("dfa-alpha-"):
        alpha = None if name == "dfa" else _sweep_alpha(config, name)
        _, record = dfa_train_onpolicy(mdp, panel, dfa_config(config, alpha), train_rng,
                                       **common)
    elif name == "oracle-ppo":
        k = config.ppo_rollouts_per_iter
        _, record = ppo_train(mdp, "true", ppo_config(config, config.budget // (k * H), k),
                              train_rng, **common)
    elif name in ("rm-ppo-1", "rm-ppo-2"):
        n_pairs, k = rm_schedule(config, name)
        _, record, _ = rm_ppo_train(mdp, panel, n_pairs,
                                    ppo_config(config, config.rm_ppo_iterations, k), train_rng,
                                    rm_epochs=config.rm_epochs,
                                    rm_learning_rate=config.rm_learning_rate, **common)
    elif name == "dfa-offpolicy":
        _, record, _ = dfa_train_offpolicy(
            mdp, dfa_config(config), critic_config(config), train_rng,
            episodes=config.budget // H, state_embedding=grid_embedding(config.side), **common)
    elif name == "sac":
        _, record, _ = sac_tabular_train(mdp, critic_config(config), train_rng,
                                         episodes=config.budget // H, **common)
    else:
        raise ConfigError(f"unknown algorithm {name!r}")
    return record


def _sweep_alpha(config, name):
    for a in config.alpha_sweep:
        if sweep_name(a) == name:
            return a
    raise ConfigError(f"{name} is not in the configured alpha sweep")


def run_experiment(config: ExperimentConfig, out_dir=None, progress=None
                   ) -> dict[str, list[RunRecord]]:
    """Run every (algorithm, seed) cell and write ``<out_dir>/<algorithm>.csv``.

    The configuration is validated in full before the first run starts.
    ``progress``, if given, is called with (name, seed, record) after each cell.
    """
    names = check_config(config)
    out = Path(out_dir if out_dir is not None else config.out_dir)
    mdp = grid_mdp(config)
    results = {}
    for name in names:
        records = []
        for seed in config.seeds:
            record = run_single(config, name, seed, mdp)
            records.append(record)
            if progress is not None:
                progress(name, seed, record)
        write_csv(records, out / f"{name}.csv")
        results[name] = records
    return results
