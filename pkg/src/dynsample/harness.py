"""Experiment runner over the simulated environment.

One run does the following:

1. roll out every sample once and seed the estimator from the results;
2. for each step, pick a batch with the configured strategy, roll it out,
   train the simulated policy on it, and update the estimator (fast decay
   for the batch, slow decay for everything else);
3. record one :class:`StepMetrics` row per step.

Strategies ``thompson``, ``greedy`` and ``random`` pay exactly ``B * G``
rollouts per step. ``dapo`` pays for every candidate it filters.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .baselines import RolloutBudget, dapo_fill_batch
from .environment import (EnvironmentState, apply_training_update, make_environment,
                          rollout_many, validation_proxy)
from .errors import ConfigError, ContractViolation
from .estimator import DecayConfig, EstimatorStore, init_from_rollouts, normalize_mode
from .grouprl import batch_signal_proxy, effective_ratio, group_advantages
from .selector import (BatchSelection, InfoGainObjective, info_gain, select_greedy,
                       select_random, select_thompson)
from .substreams import SubstreamRNG

log = logging.getLogger(__name__)

ALL_STRATEGIES = ("thompson", "greedy", "random", "dapo")
METRIC_COLUMNS = ("step", "effective_ratio", "cumulative_rollouts", "validation_proxy",
                  "batch_signal_proxy", "regret")


@dataclass
class EnvironmentConfig:
    n_samples: int = 2000
    eta1: float = 0.2
    eta2: float = 0.001
    noise: float = 0.0
    init_dist: dict = field(default_factory=lambda: {"kind": "beta", "a": 0.6, "b": 1.2})
    # None means "use the experiment's master seed".
    seed: Optional[int] = None


@dataclass
class ExperimentConfig:
    batch_size: int = 64
    group_size: int = 8
    steps: int = 300
    strategy: str = "thompson"
    objective: str = "asym"
    estimator_mode: str = "two-scale-decay"
    lambda1: float = 0.2
    lambda2: float = 0.999
    seed: int = 0
    validation_fraction: float = 0.1
    dapo_budget_multiplier: float = 3.0
    output: Optional[str] = None
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)

    @property
    def n_samples(self) -> int:
        return self.environment.n_samples

    @property
    def n_heldout(self) -> int:
        return max(1, int(round(self.validation_fraction * self.n_samples)))

    def decay(self) -> DecayConfig:
        return DecayConfig(self.lambda1, self.lambda2)

    def validate(self) -> "ExperimentConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.strategy in ALL_STRATEGIES,
             f"strategy must be one of {ALL_STRATEGIES}, got {self.strategy!r}")
        need(self.objective in {o.value for o in InfoGainObjective},
             f"objective must be 'asym' or 'sym', got {self.objective!r}")
        try:
            self.estimator_mode = normalize_mode(self.estimator_mode)
            self.decay()
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None
        need(self.steps >= 1, f"steps must be >= 1, got {self.steps}")
        need(self.group_size >= 2, f"group_size must be >= 2, got {self.group_size}")
        need(self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}")
        need(0.0 < self.validation_fraction < 1.0, "validation_fraction must lie in (0, 1)")
        n_train = self.n_samples - self.n_heldout
        need(n_train >= 1, "no training samples left after the held-out split")
        need(self.batch_size <= n_train,
             f"batch_size {self.batch_size} exceeds the {n_train} selectable training samples")
        need(self.dapo_budget_multiplier >= 1.0, "dapo_budget_multiplier must be >= 1")
        env = self.environment
        need(min(env.eta1, env.eta2, env.noise) >= 0, "eta1, eta2 and noise must be >= 0")
        need(isinstance(self.seed, int), "seed must be an explicit integer")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_ENV_KEYS = {f.name for f in dataclasses.fields(EnvironmentConfig)}
_TOP_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"environment"}


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a config from a nested or flat mapping.

    Environment keys (``n_samples``, ``eta1`` ...) may sit under an
    ``environment`` block or at the top level. Unknown keys are rejected.
    """
    raw = dict(raw or {})
    env_raw = dict(raw.pop("environment", None) or {})
    for key in list(raw):
        if key in _ENV_KEYS and key not in _TOP_KEYS:
            env_raw.setdefault(key, raw.pop(key))
    unknown = (set(raw) - _TOP_KEYS) | (set(env_raw) - _ENV_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(environment=EnvironmentConfig(**env_raw), **raw).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a key/value mapping")
    return config_from_dict(raw or {})


@dataclass(frozen=True)
class StepMetrics:
    step: int
    effective_ratio: float
    cumulative_rollouts: int
    validation_proxy: float
    batch_signal_proxy: float
    regret: float


def compute_regret(env: EnvironmentState, selection, B: int | None = None, candidates=None,
                   objective="asym") -> float:
    """Shortfall of the selection's true information gain against the best ``B`` candidates."""
    ids = np.asarray(getattr(selection, "ids", selection), dtype=np.int64)
    B = ids.size if B is None else B
    pool = np.arange(env.n_samples) if candidates is None else np.asarray(candidates, dtype=np.int64)
    if B > pool.size:
        raise ContractViolation(f"B={B} exceeds the candidate pool of {pool.size}")
    gains = info_gain(env.true_p[pool], objective)
    best = float(np.sort(gains)[::-1][:B].sum())
    realized = float(info_gain(env.true_p[ids], objective).sum())
    return max(best - realized, 0.0)


def _child_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, tag]).generate_state(1, np.uint32)[0])


Observer = Callable[[int, EnvironmentState, EstimatorStore, BatchSelection, list], None]


class Experiment:
    """Mutable state of one run: environment, estimator and random streams."""

    def __init__(self, config: ExperimentConfig):
        self.config = config.validate()
        cfg = self.config
        env_cfg = cfg.environment
        env_seed = cfg.seed if env_cfg.seed is None else env_cfg.seed
        self.env = make_environment(env_cfg.n_samples, env_cfg.eta1, env_cfg.eta2,
                                    env_cfg.noise, env_cfg.init_dist, env_seed)
        self.store = EstimatorStore(cfg.n_samples, cfg.decay(), cfg.estimator_mode)
        n = cfg.n_samples
        self.heldout_ids = np.arange(n - cfg.n_heldout, n)
        self.train_ids = np.arange(n - cfg.n_heldout)
        self.draw_rng = SubstreamRNG(_child_seed(cfg.seed, 1))
        self.select_rng = np.random.default_rng(_child_seed(cfg.seed, 2))
        self.budget = RolloutBudget(
            cap=int(cfg.dapo_budget_multiplier * cfg.steps * cfg.batch_size * cfg.group_size))
        self.cumulative_rollouts = 0
        self.metrics: list[StepMetrics] = []

    def initialize(self) -> None:
        G = self.config.group_size
        outcomes = rollout_many(self.env, np.arange(self.config.n_samples), G)
        init_from_rollouts(self.store, outcomes)
        self.cumulative_rollouts = len(outcomes) * G

    def select(self, step: int) -> tuple[BatchSelection, list]:
        cfg = self.config
        B, G = cfg.batch_size, cfg.group_size
        if cfg.strategy == "dapo":
            before = self.budget.consumed
            outcomes, _ = dapo_fill_batch(self.env, self.train_ids, B, G, self.budget,
                                          self.select_rng)
            self.cumulative_rollouts += self.budget.consumed - before
            ids = np.array([o.sample_id for o in outcomes], dtype=np.int64)
            return BatchSelection(step, ids), outcomes

        if cfg.strategy == "thompson":
            sel = select_thompson(self.store, B, cfg.objective, self.draw_rng,
                                  candidates=self.train_ids, step=step)
        elif cfg.strategy == "greedy":
            sel = select_greedy(self.store, B, cfg.objective, candidates=self.train_ids, step=step)
        else:
            sel = select_random(self.train_ids, B, self.select_rng, step=step)
        outcomes = rollout_many(self.env, sel.ids, G)
        self.cumulative_rollouts += len(outcomes) * G
        return sel, outcomes

    def step(self, step: int, observer: Observer | None = None) -> StepMetrics:
        cfg = self.config
        sel, outcomes = self.select(step)
        regret = compute_regret(self.env, sel, cfg.batch_size, candidates=self.train_ids)
        f = effective_ratio(outcomes)
        signal = batch_signal_proxy([group_advantages(o.rewards()) for o in outcomes])

        apply_training_update(self.env, sel, outcomes)
        self.store.update_step(sel.ids, [o.r for o in outcomes], cfg.group_size)

        row = StepMetrics(step, f, self.cumulative_rollouts,
                          validation_proxy(self.env, self.heldout_ids), signal, regret)
        self.metrics.append(row)
        if observer is not None:
            observer(step, self.env, self.store, sel, outcomes)
        return row

    def run(self, observer: Observer | None = None) -> list[StepMetrics]:
        self.initialize()
        for t in range(1, self.config.steps + 1):
            self.step(t, observer)
        return self.metrics


def run_experiment(config: ExperimentConfig, observer: Observer | None = None) -> list[StepMetrics]:
    return Experiment(config).run(observer)


def write_metrics_csv(metrics, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for m in metrics:
            writer.writerow([getattr(m, c) for c in METRIC_COLUMNS])


def read_metrics_csv(path: str | Path) -> list[StepMetrics]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRIC_COLUMNS:
            raise ContractViolation(f"{path}: unexpected metrics columns {reader.fieldnames}")
        return [StepMetrics(int(r["step"]), float(r["effective_ratio"]),
                            int(r["cumulative_rollouts"]), float(r["validation_proxy"]),
                            float(r["batch_signal_proxy"]), float(r["regret"])) for r in reader]


def write_outputs(metrics, config: ExperimentConfig, path: str | Path,
                  store: EstimatorStore | None = None) -> Path:
    """Write ``metrics.csv``, ``config.json`` and, given a store, ``estimator_final.json``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(metrics, out / "metrics.csv")
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
        if store is not None:
            store.save(out / "estimator_final.json")
    except OSError as exc:
        raise OSError(f"failed writing run outputs to {out}: {exc}") from exc
    log.info("wrote %d metric rows to %s", len(metrics), out)
    return out
