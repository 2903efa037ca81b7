"""Experiment configuration: a flat ``key = value`` text format with dotted
section prefixes, e.g.::

    # GridWorld comparison
    experiment.algorithms = dfa, rm-ppo-1, rm-ppo-2, oracle-ppo
    experiment.seeds = 3, 1, 14, 4, 50
    dfa.alpha = 0.001

Blank lines and ``#`` comments are ignored.  Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

ALGORITHMS = ("dfa", "oracle-ppo", "rm-ppo-1", "rm-ppo-2", "dfa-alpha-sweep",
              "dfa-offpolicy", "sac")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    # grid
    side: int = 5
    reverse_prob: float = 0.4
    reward_coin_prob: float = 0.5
    horizon: int = 20
    grid_seed: int = 0
    # experiment
    algorithms: tuple[str, ...] = ("dfa", "rm-ppo-1", "rm-ppo-2", "oracle-ppo")
    seeds: tuple[int, ...] = (3, 1, 14, 4, 50)
    budget: int = 4_000_000
    out_dir: str = "results"
    # evaluation
    eval_episodes: int = 100
    eval_interval: int = 2000
    # annotator panel
    panel_size: int = 500
    panel_beta: float = 1.0
    # on-policy DFA
    dfa_alpha: float = 1e-3
    dfa_learning_rate: float = 3e-2
    dfa_pairs_per_iter: int = 1
    dfa_optimizer: str = "adam"
    dfa_reweight_pairs: bool = False
    alpha_sweep: tuple[float, ...] = (1.0, 1e-3, 1e-8)
    # PPO (shared by Oracle-PPO and RM+PPO)
    ppo_kl_coeff: float = 0.1
    ppo_gae_lambda: float = 0.95
    ppo_gamma: float = 1.0
    ppo_learning_rate: float = 3e-2
    ppo_rollouts_per_iter: int = 2
    ppo_value_lr: float = 0.1
    # reward model + PPO
    rm_pretrain_steps_1: int = 200_000
    rm_pretrain_steps_2: int = 400_000
    rm_ppo_iterations: int = 1000
    rm_epochs: int = 1000
    rm_learning_rate: float = 3e-2
    # replay-based learners
    critic_entropy_coeff: float = 0.1
    critic_learning_rate: float = 0.1
    critic_gamma: float = 0.9
    critic_batch_size: int = 64
    critic_warmup: int = 200
    critic_buffer_capacity: int = 20_000
    _source: str = field(default="<defaults>", repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("experiment.seeds must not be empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative integers")
        if self.eval_episodes < 1:
            raise ConfigError("eval.episodes must be at least 1")
        if self.eval_interval < 1:
            raise ConfigError("eval.interval must be positive")
        if self.budget < 1:
            raise ConfigError("experiment.budget must be positive")
        if not self.algorithms:
            raise ConfigError("experiment.algorithms must not be empty")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithm(s) {', '.join(unknown)}; "
                              f"choose from {', '.join(ALGORITHMS)}")
        if "dfa-alpha-sweep" in self.algorithms and not self.alpha_sweep:
            raise ConfigError("dfa.alpha_sweep must not be empty")
        if self.panel_size < 1 or self.panel_beta <= 0:
            raise ConfigError("panel.size must be >= 1 and panel.beta > 0")
        for name in ("rm-ppo-1", "rm-ppo-2"):
            if name in self.algorithms:
                pretrain = self.rm_pretrain_steps(name)
                if pretrain % (2 * self.horizon):
                    raise ConfigError(f"{name}: pretraining steps must be a multiple of "
                                      f"2 * horizon = {2 * self.horizon}")
                if self.budget - pretrain < self.rm_ppo_iterations * self.horizon:
                    raise ConfigError(f"{name}: budget {self.budget} leaves less than one "
                                      f"rollout per PPO iteration after {pretrain} "
                                      "pretraining steps")

    def rm_pretrain_steps(self, name: str) -> int:
        return self.rm_pretrain_steps_1 if name == "rm-ppo-1" else self.rm_pretrain_steps_2

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# config key -> (dataclass field, parser)
def _int(text):
    return int(text.replace("_", ""))


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _names(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(_int(x) for x in _names(text))


def _floats(text):
    return tuple(float(x) for x in _names(text))


_KEYS = {
    "grid.side": ("side", _int),
    "grid.reverse_prob": ("reverse_prob", float),
    "grid.reward_coin_prob": ("reward_coin_prob", float),
    "grid.horizon": ("horizon", _int),
    "grid.seed": ("grid_seed", _int),
    "experiment.algorithms": ("algorithms", _names),
    "experiment.seeds": ("seeds", _ints),
    "experiment.budget": ("budget", _int),
    "experiment.out_dir": ("out_dir", str),
    "eval.episodes": ("eval_episodes", _int),
    "eval.interval": ("eval_interval", _int),
    "panel.size": ("panel_size", _int),
    "panel.beta": ("panel_beta", float),
    "dfa.alpha": ("dfa_alpha", float),
    "dfa.learning_rate": ("dfa_learning_rate", float),
    "dfa.pairs_per_iter": ("dfa_pairs_per_iter", _int),
    "dfa.optimizer": ("dfa_optimizer", str),
    "dfa.reweight_pairs": ("dfa_reweight_pairs", _bool),
    "dfa.alpha_sweep": ("alpha_sweep", _floats),
    "ppo.kl_coeff": ("ppo_kl_coeff", float),
    "ppo.gae_lambda": ("ppo_gae_lambda", float),
    "ppo.gamma": ("ppo_gamma", float),
    "ppo.learning_rate": ("ppo_learning_rate", float),
    "ppo.rollouts_per_iter": ("ppo_rollouts_per_iter", _int),
    "ppo.value_lr": ("ppo_value_lr", float),
    "rm.pretrain_steps_1": ("rm_pretrain_steps_1", _int),
    "rm.pretrain_steps_2": ("rm_pretrain_steps_2", _int),
    "rm.ppo_iterations": ("rm_ppo_iterations", _int),
    "rm.epochs": ("rm_epochs", _int),
    "rm.learning_rate": ("rm_learning_rate", float),
    "critic.entropy_coeff": ("critic_entropy_coeff", float),
    "critic.learning_rate": ("critic_learning_rate", float),
    "critic.gamma": ("critic_gamma", float),
    "critic.batch_size": ("critic_batch_size", _int),
    "critic.warmup": ("critic_warmup", _int),
    "critic.buffer_capacity": ("critic_buffer_capacity", _int),
}

CONFIG_KEYS = tuple(_KEYS)


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse flat config text on top of the defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        name, parse = _KEYS[key]
        try:
            values[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    try:
        return ExperimentConfig(**values, _source=source)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def format_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (every key, in canonical order)."""
    lines = []
    for key, (name, _) in _KEYS.items():
        value = getattr(config, name)
        if isinstance(value, tuple):
            text = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
