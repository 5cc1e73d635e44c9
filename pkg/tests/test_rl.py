"""PPO machinery: forward passes, analytic gradients, updates, persistence."""

from __future__ import annotations

import numpy as np
import pytest

from drim.datasets import load_urv_email
from drim.network import full_view
from drim.opinion import NOM, UOM
from drim.population import Party
from drim.propagation import EpisodeConfig
from drim.rl import (
    Batch,
    CimLearnerEnv,
    PolicyAgent,
    PPOConfig,
    actor_loss_and_grads,
    collect_episode,
    collect_rollouts,
    critic_loss_and_grads,
    init_params,
    load_params,
    make_cim_env_factory,
    policy_forward,
    ppo_update,
    sample_action,
    save_params,
    train_loop,
    value_forward,
)
from drim.strategies import Scheme, StrategyKind, action_space, make_heuristic_agent


class BanditEnv:
    """One-step environment: a single action pays 1, the rest pay 0."""

    def __init__(self, best: int = 2):
        self.best = best

    def reset(self):
        return np.ones(2)

    def step(self, action):
        return np.ones(2), 1.0 if action == self.best else 0.0, True


def random_batch(rng, n=48, n_actions=4):
    return Batch(
        states=rng.normal(0.5, 0.4, (n, 2)),
        actions=rng.integers(0, n_actions, n),
        log_probs=np.log(rng.uniform(0.1, 0.5, n)),
        returns=rng.normal(0.0, 5.0, n),
        values=rng.normal(0.0, 5.0, n),
    )


class TestPolicyForward:
    def test_valid_distribution(self):
        params = init_params(4, 16, rng_seed=0)
        probs = policy_forward(params, (0.3, 0.8))
        assert probs.shape == (4,)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert np.all(probs >= 0)

    def test_zero_head_gives_uniform(self):
        params = init_params(5, 16, rng_seed=0)  # head initialized to zeros
        probs = policy_forward(params, (0.2, 0.9))
        assert np.allclose(probs, 0.2, atol=1e-12)

    def test_deterministic(self):
        params = init_params(3, 16, rng_seed=1)
        a = policy_forward(params, (0.4, 0.5))
        b = policy_forward(params, (0.4, 0.5))
        assert np.array_equal(a, b)

    def test_rejects_non_finite_state(self):
        params = init_params(3, 16, rng_seed=1)
        with pytest.raises(ValueError):
            policy_forward(params, (np.nan, 0.5))

    def test_value_forward_scalar(self):
        params = init_params(3, 16, rng_seed=1)
        assert value_forward(params, (0.5, 0.5)) == 0.0  # zero head


class TestGradients:
    def test_actor_matches_finite_differences(self):
        cfg = PPOConfig(hidden=8)
        h = 1e-5
        for batch_seed in range(5):
            rng = np.random.default_rng(batch_seed)
            params = init_params(4, 8, rng)
            params.actor.w3 += rng.normal(0, 0.3, params.actor.w3.shape)
            params.actor.b3 += rng.normal(0, 0.3, params.actor.b3.shape)
            batch = random_batch(rng)
            adv = batch.returns - batch.values
            adv = (adv - adv.mean()) / adv.std()
            _, grads, _, _ = actor_loss_and_grads(params, batch, adv, cfg)
            names = ["w1", "b1", "w2", "b2", "w3", "b3"]
            for _ in range(10):
                name = names[rng.integers(len(names))]
                flat = getattr(params.actor, name).reshape(-1)
                idx = int(rng.integers(flat.size))
                orig = flat[idx]
                flat[idx] = orig + h
                lp, _, _, _ = actor_loss_and_grads(params, batch, adv, cfg)
                flat[idx] = orig - h
                lm, _, _, _ = actor_loss_and_grads(params, batch, adv, cfg)
                flat[idx] = orig
                fd = (lp - lm) / (2 * h)
                an = grads[name].reshape(-1)[idx]
                rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
                assert rel < 1e-4, f"{name}[{idx}]: fd={fd} analytic={an}"

    def test_critic_matches_finite_differences(self):
        h = 1e-5
        for batch_seed in range(5):
            rng = np.random.default_rng(100 + batch_seed)
            params = init_params(4, 8, rng)
            params.critic.w3 += rng.normal(0, 0.3, params.critic.w3.shape)
            batch = random_batch(rng)
            _, grads = critic_loss_and_grads(params, batch)
            names = ["w1", "b1", "w2", "b2", "w3", "b3"]
            for _ in range(10):
                name = names[rng.integers(len(names))]
                flat = getattr(params.critic, name).reshape(-1)
                idx = int(rng.integers(flat.size))
                orig = flat[idx]
                flat[idx] = orig + h
                lp, _ = critic_loss_and_grads(params, batch)
                flat[idx] = orig - h
                lm, _ = critic_loss_and_grads(params, batch)
                flat[idx] = orig
                fd = (lp - lm) / (2 * h)
                an = grads[name].reshape(-1)[idx]
                rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
                assert rel < 1e-4, f"{name}[{idx}]: fd={fd} analytic={an}"


class TestPpoUpdate:
    def test_rewarded_action_probability_increases(self):
        params = init_params(4, 16, rng_seed=0)
        n = 16
        actions = np.array([0, 1, 2, 3] * 4)
        returns = (actions == 2).astype(float)
        batch = Batch(
            states=np.ones((n, 2)),
            actions=actions,
            log_probs=np.full(n, np.log(0.25)),
            returns=returns,
            values=np.zeros(n),
        )
        before = policy_forward(params, (1.0, 1.0))[2]
        cfg = PPOConfig(hidden=16, epochs=10, actor_lr=0.05)
        new, diag = ppo_update(params, batch, cfg)
        after = policy_forward(new, (1.0, 1.0))[2]
        assert after > before
        assert np.isfinite(diag.surrogate_loss)

    def test_zero_advantage_leaves_actor_unchanged(self):
        params = init_params(4, 16, rng_seed=3)
        rng = np.random.default_rng(5)
        returns = rng.normal(0, 1, 12)
        batch = Batch(
            states=rng.normal(0, 1, (12, 2)),
            actions=rng.integers(0, 4, 12),
            log_probs=np.full(12, np.log(0.25)),
            returns=returns,
            values=returns.copy(),  # advantage identically zero
        )
        cfg = PPOConfig(hidden=16, epochs=5, entropy_coef=0.0)
        new, _ = ppo_update(params, batch, cfg)
        for a, b in zip(params.actor.arrays(), new.actor.arrays()):
            assert np.array_equal(a, b)

    def test_entropy_term_produces_drift_when_enabled(self):
        params = init_params(4, 16, rng_seed=3)
        params.actor.b3 += np.array([1.0, 0.0, -1.0, 0.0])
        rng = np.random.default_rng(5)
        returns = rng.normal(0, 1, 12)
        batch = Batch(
            states=rng.normal(0, 1, (12, 2)),
            actions=rng.integers(0, 4, 12),
            log_probs=np.full(12, np.log(0.25)),
            returns=returns,
            values=returns.copy(),
        )
        cfg = PPOConfig(hidden=16, epochs=5, entropy_coef=0.05)
        new, _ = ppo_update(params, batch, cfg)
        assert not np.array_equal(params.actor.b3, new.actor.b3)

    def test_empty_batch_rejected(self):
        params = init_params(4, 16, rng_seed=0)
        batch = Batch(
            states=np.zeros((0, 2)),
            actions=np.zeros(0, dtype=np.int64),
            log_probs=np.zeros(0),
            returns=np.zeros(0),
            values=np.zeros(0),
        )
        with pytest.raises(ValueError):
            ppo_update(params, batch, PPOConfig(hidden=16))


class TestBanditTraining:
    def test_dominant_action_learned(self):
        cfg = PPOConfig(hidden=16, rollout_episodes=16, updates=80, epochs=40, actor_lr=0.01)
        params = init_params(4, 16, np.random.default_rng(1))
        result = train_loop(params, lambda seed: BanditEnv(best=2), cfg, np.random.SeedSequence(2))
        probs = policy_forward(result.params, np.ones(2))
        assert probs[2] > 0.95

    def test_training_reproducible(self):
        cfg = PPOConfig(hidden=8, rollout_episodes=4, updates=5, epochs=5)
        curves = []
        for _ in range(2):
            params = init_params(4, 8, np.random.default_rng(1))
            result = train_loop(params, lambda seed: BanditEnv(), cfg, np.random.SeedSequence(3))
            curves.append(result.curve)
        assert curves[0] == curves[1]


class TestRollouts:
    def test_episode_has_k_learner_steps(self):
        g = load_urv_email()
        cfg = EpisodeConfig(k=5, opinion_model=NOM, rng_seed=0)
        env = CimLearnerEnv(
            g, cfg, Party.TRUE_PARTY, make_heuristic_agent("cf"),
            action_space(Scheme.DRIM_A), observable=full_view(g),
        )
        params = init_params(4, 16, rng_seed=0)
        traj = collect_episode(params, env, np.random.default_rng(0), gamma=0.95)
        assert len(traj.actions) == 5
        assert traj.states.shape == (5, 2)

    def test_rollout_batch_reproducible(self):
        g = load_urv_email()
        cfg = EpisodeConfig(k=3, opinion_model=NOM, rng_seed=0)
        factory = make_cim_env_factory(
            g, cfg, Party.TRUE_PARTY, lambda: make_heuristic_agent("random"),
            action_space(Scheme.DRIM_A), observable=full_view(g),
        )
        params = init_params(4, 16, rng_seed=0)
        a = collect_rollouts(params, factory, 2, np.random.SeedSequence(7), 0.95)
        b = collect_rollouts(params, factory, 2, np.random.SeedSequence(7), 0.95)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.actions, b.actions)
        assert np.array_equal(a.returns, b.returns)

    def test_learner_rewards_telescope_to_decided_gain(self):
        g = load_urv_email()
        cfg = EpisodeConfig(k=6, opinion_model=UOM, rng_seed=4)
        env = CimLearnerEnv(
            g, cfg, Party.TRUE_PARTY, make_heuristic_agent("cf"),
            action_space(Scheme.DRIM_A), observable=full_view(g),
        )
        params = init_params(4, 16, rng_seed=0)
        traj = collect_episode(params, env, np.random.default_rng(1), gamma=0.95)
        series = env.episode.n_true_series
        assert traj.rewards.sum() == pytest.approx(series[-1] - series[0])

    def test_fp_learner_steps_on_odd_parity(self):
        g = load_urv_email()
        cfg = EpisodeConfig(k=4, opinion_model=NOM, rng_seed=2)
        env = CimLearnerEnv(
            g, cfg, Party.FALSE_PARTY, make_heuristic_agent("cf"),
            action_space(Scheme.DRIM_A), observable=full_view(g),
        )
        params = init_params(4, 16, rng_seed=0)
        traj = collect_episode(params, env, np.random.default_rng(1), gamma=0.95)
        assert len(traj.actions) == 4
        fp_steps = [e.t for e in env.episode.logs if e.party is Party.FALSE_PARTY]
        assert fp_steps == [1, 3, 5, 7]
        assert env.episode.t == 8  # opponent finished the final round

    def test_returns_use_paper_discounting(self):
        g = load_urv_email()
        cfg = EpisodeConfig(k=3, opinion_model=NOM, rng_seed=0)
        env = CimLearnerEnv(
            g, cfg, Party.TRUE_PARTY, make_heuristic_agent("cf"),
            action_space(Scheme.DRIM_A), observable=full_view(g),
        )
        params = init_params(4, 16, rng_seed=0)
        traj = collect_episode(params, env, np.random.default_rng(1), gamma=0.5)
        r = traj.rewards
        expected_first = 0.5 * r[0] + 0.25 * r[1] + 0.125 * r[2]
        assert traj.returns[0] == pytest.approx(expected_first)


class TestPolicyAgent:
    def test_action_set_size_checked(self):
        params = init_params(4, 8, rng_seed=0)
        with pytest.raises(ValueError):
            PolicyAgent(params, action_space(Scheme.DRIM_NA))

    def test_sample_action_distribution(self):
        rng = np.random.default_rng(0)
        probs = np.array([0.7, 0.2, 0.1])
        draws = [sample_action(probs, rng) for _ in range(5000)]
        freq = np.bincount(draws, minlength=3) / 5000
        assert np.allclose(freq, probs, atol=0.03)


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        params = init_params(4, 16, rng_seed=9)
        params.actor.w3 += 0.123456789
        path = tmp_path / "policy.bin"
        save_params(params, path)
        loaded = load_params(path)
        for a, b in zip(
            params.actor.arrays() + params.critic.arrays(),
            loaded.actor.arrays() + loaded.critic.arrays(),
        ):
            assert np.array_equal(a, np.asarray(b).reshape(a.shape))

    def test_action_space_mismatch_rejected(self, tmp_path):
        params = init_params(4, 16, rng_seed=9)
        path = tmp_path / "policy.bin"
        save_params(params, path)
        with pytest.raises(ValueError):
            load_params(path, expected_actions=3)

    def test_truncated_file_rejected(self, tmp_path):
        params = init_params(4, 16, rng_seed=9)
        path = tmp_path / "policy.bin"
        save_params(params, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ValueError):
            load_params(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "policy.bin"
        path.write_bytes(b"not a policy file at all")
        with pytest.raises(ValueError):
            load_params(path)
