"""Variance-aware dynamic sampling for group-based RL, with a rollout simulator."""

__version__ = "0.1.0"
