"""Tabular laboratory for the Dual-Feedback Actor: preference losses built on
policy log-probabilities, exact soft planning oracles, and reward-model
baselines on a stochastic GridWorld."""

__version__ = "0.1.0"
