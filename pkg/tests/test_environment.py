import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynsample.environment import (
    EnvironmentState,
    RolloutOutcome,
    apply_training_update,
    make_environment,
    rollout,
    rollout_many,
    validation_proxy,
)
from dynsample.errors import ContractViolation
from dynsample.estimator import DecayConfig, EstimatorStore, init_from_rollouts
from dynsample.selector import BatchSelection


def env_with(p, eta1=0.0, eta2=0.0, noise=0.0, seed=0):
    return EnvironmentState(np.asarray(p, dtype=float), eta1, eta2, noise,
                            np.random.default_rng(seed), np.random.default_rng(seed + 1))


class TestRollout:
    def test_degenerate_probabilities(self):
        env = env_with([1.0, 0.0])
        for _ in range(100):
            assert rollout(env, 0, 8).r == 8
            assert rollout(env, 1, 8).r == 0

    def test_binomial_moments(self):
        env = env_with(np.full(100_000, 0.5), seed=3)
        r = np.array([o.r for o in rollout_many(env, np.arange(100_000), 8)])
        assert abs(r.mean() - 4.0) <= 0.05
        assert abs(r.var() - 2.0) <= 0.1

    def test_unknown_id(self):
        env = env_with([0.5])
        with pytest.raises(KeyError):
            rollout(env, 3, 8)

    def test_outcome_contract(self):
        with pytest.raises(ContractViolation):
            RolloutOutcome(0, 8, 9)
        assert RolloutOutcome(0, 4, 3).rewards() == [1, 1, 1, 0]


class TestTrainingUpdate:
    def test_degenerate_batch_changes_nothing(self):
        env = env_with([0.0, 1.0, 0.3], eta1=0.5)
        before = env.true_p.copy()
        apply_training_update(env, [0, 1], [RolloutOutcome(0, 8, 0), RolloutOutcome(1, 8, 8)])
        np.testing.assert_array_equal(env.true_p, before)

    def test_single_trained_sample(self):
        env = env_with([0.5, 0.2], eta1=0.1)
        sel = BatchSelection(1, np.array([0]))
        apply_training_update(env, sel, [RolloutOutcome(0, 8, 4)])
        assert env.true_p[0] == pytest.approx(0.55)
        assert env.true_p[1] == 0.2

    def test_transfer_uses_effective_ratio(self):
        env = env_with([0.5, 0.5, 0.2, 0.6], eta1=0.0, eta2=0.1)
        apply_training_update(env, [0, 1], [RolloutOutcome(0, 8, 3), RolloutOutcome(1, 8, 8)])
        # f = 1/2 for this batch.
        np.testing.assert_allclose(env.true_p[2:], [0.2 + 0.05 * 0.8, 0.6 + 0.05 * 0.4])
        np.testing.assert_array_equal(env.true_p[:2], [0.5, 0.5])

    def test_mismatched_outcomes(self):
        env = env_with([0.5, 0.5])
        with pytest.raises(ContractViolation):
            apply_training_update(env, [0, 1], [RolloutOutcome(0, 8, 3)])
        with pytest.raises(ContractViolation):
            apply_training_update(env, [0], [RolloutOutcome(1, 8, 3)])

    def test_stationary_limit(self):
        env = make_environment(200, 0.0, 0.0, 0.0, seed=5)
        before = env.true_p.copy()
        for _ in range(20):
            ids = np.arange(10)
            apply_training_update(env, ids, rollout_many(env, ids, 8))
        np.testing.assert_array_equal(env.true_p, before)

    @given(st.integers(0, 1000), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.2))
    @settings(max_examples=40, deadline=None)
    def test_bounded(self, seed, eta1, eta2, noise):
        env = make_environment(50, eta1, eta2, noise, {"kind": "uniform"}, seed)
        rng = np.random.default_rng(seed)
        for _ in range(20):
            ids = rng.choice(50, 5, replace=False)
            apply_training_update(env, ids, rollout_many(env, ids, 8))
            assert np.all((env.true_p >= 0) & (env.true_p <= 1))

    @given(st.integers(0, 1000), st.floats(0, 0.5), st.floats(0, 0.5))
    @settings(max_examples=40, deadline=None)
    def test_validation_proxy_monotone_without_noise(self, seed, eta1, eta2):
        env = make_environment(60, eta1, eta2, 0.0, None, seed)
        heldout = np.arange(50, 60)
        rng = np.random.default_rng(seed)
        last = validation_proxy(env, np.arange(60))
        last_h = validation_proxy(env, heldout)
        for _ in range(15):
            ids = rng.choice(50, 5, replace=False)
            apply_training_update(env, ids, rollout_many(env, ids, 8))
            now, now_h = validation_proxy(env, np.arange(60)), validation_proxy(env, heldout)
            assert now >= last and now_h >= last_h
            last, last_h = now, now_h

    def test_deterministic_given_seed_and_batches(self):
        def trajectory():
            env = make_environment(100, 0.2, 0.05, 0.01, None, seed=9)
            out = []
            for t in range(10):
                ids = np.arange(t, t + 10)
                apply_training_update(env, ids, rollout_many(env, ids, 8))
                out.append(env.true_p.copy())
            return np.array(out)

        np.testing.assert_array_equal(trajectory(), trajectory())


class TestValidationProxy:
    def test_examples(self):
        assert validation_proxy(env_with([0.7] * 5), np.arange(5)) == pytest.approx(0.7)
        assert validation_proxy(env_with([0.2, 0.8, 0.0]), [0, 1]) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(ContractViolation):
            validation_proxy(env_with([0.5]), [])


def test_make_environment_init_kinds():
    env = make_environment(20000, init_dist=None, seed=1)
    assert env.true_p.mean() == pytest.approx(0.6 / 1.8, abs=0.01)
    assert np.all(make_environment(5, init_dist={"kind": "constant", "value": 0.3}).true_p == 0.3)
    with pytest.raises(ContractViolation):
        make_environment(5, init_dist={"kind": "zipf"})


@pytest.mark.parametrize("seed", range(20))
def test_stationary_estimator_converges(seed):
    # A sample rolled out every step: posterior mean tracks the true p.
    env = make_environment(10, 0.0, 0.0, 0.0, {"kind": "uniform"}, seed)
    store = EstimatorStore(10, DecayConfig(0.2, 0.999))
    init_from_rollouts(store, rollout_many(env, np.arange(10), 8))
    means = []
    for _ in range(200):
        outs = rollout_many(env, np.arange(10), 8)
        store.update_step(np.arange(10), [o.r for o in outs], 8)
        means.append(store.posterior_means())
    # Sampled every step, alpha + beta settles at G / (1 - lambda1) = 10, so the
    # stationary expectation of the posterior mean is (10 p + 1) / 12. A single
    # step's value has sd ~0.12 at this window, so compare the tail average.
    np.testing.assert_allclose(store.alpha + store.beta, 10.0, rtol=1e-9)
    tail = np.mean(means[-150:], axis=0)
    np.testing.assert_allclose(tail, (env.true_p * 10 + 1) / 12, atol=0.05)
    assert np.all(np.abs(tail - env.true_p) <= 0.05 + np.abs(1 - 2 * env.true_p) / 12)
