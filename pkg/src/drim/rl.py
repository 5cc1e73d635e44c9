"""From-scratch PPO actor-critic over the 2-component cascade state.

Both networks are tiny fully-connected MLPs (2 -> H -> H -> out) with
tanh hidden activations, trained by plain gradient steps on the clipped
surrogate (actor) and squared return error (critic). Gradients are
analytic numpy backprop; finite differences verify them in the tests.
Returns follow the episode reward discounting exactly (no GAE), and the
advantage is return minus the collection-time value estimate, normalized
per batch.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from drim.network import Graph, ObservableGraph
from drim.population import Party
from drim.propagation import Episode, EpisodeConfig, discounted_returns
from drim.strategies import Agent, Scheme, StrategyKind, action_space, make_heuristic_agent

STATE_DIM = 2

_MAGIC = b"DRIMPOLv1\n"


@dataclass
class PPOConfig:
    gamma: float = 0.95
    clip_epsilon: float = 0.2
    epochs: int = 80
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    rollout_episodes: int = 8
    updates: int = 200
    entropy_coef: float = 0.01
    hidden: int = 64
    selfplay_updates_per_side: int = 25
    selfplay_alternations: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        for name in ("gamma", "epochs", "actor_lr", "critic_lr", "rollout_episodes",
                     "updates", "hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Mlp:
    """Two-hidden-layer tanh MLP with linear head."""

    __slots__ = ("w1", "b1", "w2", "b2", "w3", "b3")

    def __init__(self, w1, b1, w2, b2, w3, b3):
        self.w1, self.b1, self.w2, self.b2, self.w3, self.b3 = w1, b1, w2, b2, w3, b3

    @classmethod
    def create(cls, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator) -> "Mlp":
        # Xavier-scaled hidden layers; zero head so the initial policy is
        # uniform and the initial value estimate is zero.
        w1 = rng.normal(0.0, np.sqrt(1.0 / in_dim), size=(in_dim, hidden))
        w2 = rng.normal(0.0, np.sqrt(1.0 / hidden), size=(hidden, hidden))
        return cls(
            w1, np.zeros(hidden), w2, np.zeros(hidden),
            np.zeros((hidden, out_dim)), np.zeros(out_dim),
        )

    @property
    def out_dim(self) -> int:
        return self.w3.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def forward(self, x: np.ndarray):
        h1 = np.tanh(x @ self.w1 + self.b1)
        h2 = np.tanh(h1 @ self.w2 + self.b2)
        return h2 @ self.w3 + self.b3, (x, h1, h2)

    def backward(self, cache, dz) -> dict[str, np.ndarray]:
        x, h1, h2 = cache
        grads: dict[str, np.ndarray] = {}
        grads["w3"] = h2.T @ dz
        grads["b3"] = dz.sum(axis=0)
        dh2 = (dz @ self.w3.T) * (1.0 - h2 * h2)
        grads["w2"] = h1.T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        dh1 = (dh2 @ self.w2.T) * (1.0 - h1 * h1)
        grads["w1"] = x.T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        return grads

    def apply_gradients(self, grads: dict[str, np.ndarray], lr: float) -> None:
        for name, g in grads.items():
            arr = getattr(self, name)
            arr -= lr * g

    def copy(self) -> "Mlp":
        return Mlp(*(a.copy() for a in (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)))

    def arrays(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]


@dataclass
class PolicyParams:
    """Actor and critic weights for one agent."""

    actor: Mlp
    critic: Mlp

    @property
    def n_actions(self) -> int:
        return self.actor.out_dim

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.actor.copy(), self.critic.copy())


def init_params(n_actions: int, hidden: int, rng_seed: int | np.random.Generator) -> PolicyParams:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return PolicyParams(
        actor=Mlp.create(STATE_DIM, hidden, n_actions, rng),
        critic=Mlp.create(STATE_DIM, hidden, 1, rng),
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def policy_forward(params: PolicyParams, state) -> np.ndarray:
    """Action probabilities for one state (softmax head)."""
    s = np.asarray(state, dtype=float).reshape(1, STATE_DIM)
    if not np.all(np.isfinite(s)):
        raise ValueError(f"non-finite state {state}")
    logits, _ = params.actor.forward(s)
    return _softmax(logits)[0]


def value_forward(params: PolicyParams, state) -> float:
    s = np.asarray(state, dtype=float).reshape(1, STATE_DIM)
    v, _ = params.critic.forward(s)
    return float(v[0, 0])


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(idx, len(probs) - 1)


@dataclass
class Trajectory:
    """One learner episode: per-step records plus derived returns."""

    states: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    returns: np.ndarray


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    returns: np.ndarray
    values: np.ndarray
    episode_rewards: list[float] = field(default_factory=list)

    @classmethod
    def from_trajectories(cls, trajectories: list[Trajectory]) -> "Batch":
        if not trajectories:
            raise ValueError("empty rollout batch")
        return cls(
            states=np.concatenate([t.states for t in trajectories]),
            actions=np.concatenate([t.actions for t in trajectories]),
            log_probs=np.concatenate([t.log_probs for t in trajectories]),
            returns=np.concatenate([t.returns for t in trajectories]),
            values=np.concatenate([t.values for t in trajectories]),
            episode_rewards=[float(t.rewards.sum()) for t in trajectories],
        )

    def __len__(self) -> int:
        return len(self.actions)


def collect_episode(params: PolicyParams, env, rng: np.random.Generator, gamma: float) -> Trajectory:
    """Roll one episode sampling from the current policy."""
    states, actions, log_probs, rewards, values = [], [], [], [], []
    state = env.reset()
    done = False
    while not done:
        probs = policy_forward(params, state)
        action = sample_action(probs, rng)
        states.append(np.asarray(state, dtype=float))
        actions.append(action)
        log_probs.append(np.log(max(probs[action], 1e-300)))
        values.append(value_forward(params, state))
        state, reward, done = env.step(action)
        rewards.append(reward)
    rewards_arr = np.asarray(rewards, dtype=float)
    return Trajectory(
        states=np.asarray(states, dtype=float),
        actions=np.asarray(actions, dtype=np.int64),
        log_probs=np.asarray(log_probs, dtype=float),
        rewards=rewards_arr,
        values=np.asarray(values, dtype=float),
        returns=discounted_returns(rewards_arr, gamma),
    )


def actor_loss_and_grads(
    params: PolicyParams,
    batch: Batch,
    advantages: np.ndarray,
    cfg: PPOConfig,
):
    """Clipped-surrogate loss (minimization form) and its gradients."""
    n = len(batch)
    logits, cache = params.actor.forward(batch.states)
    probs = _softmax(logits)
    logp_all = np.log(np.maximum(probs, 1e-300))
    logp_new = logp_all[np.arange(n), batch.actions]
    ratio = np.exp(logp_new - batch.log_probs)
    clipped_ratio = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
    unclipped = ratio * advantages
    clipped = clipped_ratio * advantages
    surrogate = np.minimum(unclipped, clipped)
    entropy = -(probs * logp_all).sum(axis=1)
    loss = -surrogate.mean() - cfg.entropy_coef * entropy.mean()

    # dz through the surrogate only where the unclipped branch is active
    active = unclipped <= clipped
    coef = np.where(active, ratio * advantages, 0.0) / n
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), batch.actions] = 1.0
    dz = -coef[:, None] * (onehot - probs)
    # entropy bonus: dH/dz_k = -p_k (log p_k + H)
    dz += cfg.entropy_coef / n * probs * (logp_all + entropy[:, None])
    grads = params.actor.backward(cache, dz)
    return loss, grads, surrogate, entropy


def critic_loss_and_grads(params: PolicyParams, batch: Batch):
    n = len(batch)
    v, cache = params.critic.forward(batch.states)
    err = v[:, 0] - batch.returns
    loss = float((err * err).mean())
    dz = (2.0 * err / n)[:, None]
    grads = params.critic.backward(cache, dz)
    return loss, grads


@dataclass
class UpdateDiagnostics:
    surrogate_loss: float
    value_loss: float
    entropy: float


def ppo_update(params: PolicyParams, batch: Batch, cfg: PPOConfig) -> tuple[PolicyParams, UpdateDiagnostics]:
    """Run cfg.epochs plain-gradient passes over the batch."""
    if len(batch) == 0:
        raise ValueError("empty rollout batch")
    advantages = batch.returns - batch.values
    std = advantages.std()
    advantages = (advantages - advantages.mean()) / (std if std > 1e-8 else 1.0)

    new = params.copy()
    surrogate_loss = value_loss = mean_entropy = float("nan")
    for _ in range(cfg.epochs):
        a_loss, a_grads, surrogate, entropy = actor_loss_and_grads(new, batch, advantages, cfg)
        c_loss, c_grads = critic_loss_and_grads(new, batch)
        if not (np.isfinite(a_loss) and np.isfinite(c_loss)):
            raise RuntimeError(
                f"non-finite PPO loss: actor={a_loss} critic={c_loss}"
            )
        new.actor.apply_gradients(a_grads, cfg.actor_lr)
        new.critic.apply_gradients(c_grads, cfg.critic_lr)
        surrogate_loss = float(-surrogate.mean())
        value_loss = c_loss
        mean_entropy = float(entropy.mean())
    return new, UpdateDiagnostics(surrogate_loss, value_loss, mean_entropy)


class PolicyAgent(Agent):
    """Evaluation-time agent: samples a strategy from a trained policy."""

    name = "drl"

    def __init__(self, params: PolicyParams, action_set: tuple[StrategyKind, ...]):
        if params.n_actions != len(action_set):
            raise ValueError(
                f"policy has {params.n_actions} actions, action set has {len(action_set)}"
            )
        self.params = params
        self.action_set = action_set

    def select(self, episode: Episode, party: Party) -> StrategyKind:
        probs = policy_forward(self.params, episode.normalized_state())
        return self.action_set[sample_action(probs, episode.rng)]


class CimLearnerEnv:
    """Episode wrapper exposing reset/step for one learning party.

    The opponent takes its interleaved steps inside reset/step, so the
    learner always observes the state immediately before its own turn.
    """

    def __init__(
        self,
        graph: Graph,
        cfg: EpisodeConfig,
        party: Party,
        opponent: Agent,
        action_set: tuple[StrategyKind, ...],
        observable: ObservableGraph | None = None,
        restriction=None,
    ):
        self.graph = graph
        self.cfg = cfg
        self.party = party
        self.opponent = opponent
        self.action_set = action_set
        self.observable = observable
        self.restriction = restriction
        self.episode: Episode | None = None
        self._rounds = 0

    @property
    def rng(self) -> np.random.Generator:
        assert self.episode is not None
        return self.episode.rng

    def reset(self) -> np.ndarray:
        self.episode = Episode(self.graph, self.cfg, self.observable)
        self._rounds = 0
        self.opponent.begin_episode(self.episode, self.party.opponent)
        if self.restriction is not None:
            self.restriction.begin_episode(self.episode, self.party)
        if self.party is Party.TRUE_PARTY:
            self.episode.run_party_step(Party.FALSE_PARTY, self.opponent)
        return np.asarray(self.episode.normalized_state())

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        assert self.episode is not None, "call reset() first"
        kind = self.action_set[action]
        pool = None if self.restriction is None else self.restriction.pool(self.episode)
        entry = self.episode.step_with_kind(self.party, kind, pool)
        self._rounds += 1
        done = self._rounds >= self.cfg.k
        if self.party is Party.TRUE_PARTY:
            if not done:
                self.episode.run_party_step(Party.FALSE_PARTY, self.opponent)
        else:
            self.episode.run_party_step(Party.TRUE_PARTY, self.opponent)
        return np.asarray(self.episode.normalized_state()), entry.reward, done


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list[tuple[int, float, float]]  # (update, mean episode reward, entropy)
    opponent_params: PolicyParams | None = None


def collect_rollouts(
    params: PolicyParams,
    env_factory,
    episodes: int,
    seed_seq: np.random.SeedSequence,
    gamma: float,
) -> Batch:
    """Roll several independent episodes and concatenate them."""
    trajectories = []
    for child in seed_seq.spawn(episodes):
        env_seed, sample_seed = child.spawn(2)
        env = env_factory(int(env_seed.generate_state(1)[0]))
        rng = np.random.default_rng(sample_seed)
        trajectories.append(collect_episode(params, env, rng, gamma))
    return Batch.from_trajectories(trajectories)


def train_loop(
    params: PolicyParams,
    env_factory,
    ppo_cfg: PPOConfig,
    seed_seq: np.random.SeedSequence,
    updates: int | None = None,
) -> TrainResult:
    """Alternate rollout collection and PPO updates."""
    curve = []
    total = updates if updates is not None else ppo_cfg.updates
    for update, child in enumerate(seed_seq.spawn(total)):
        batch = collect_rollouts(params, env_factory, ppo_cfg.rollout_episodes, child, ppo_cfg.gamma)
        params, diag = ppo_update(params, batch, ppo_cfg)
        curve.append((update, float(np.mean(batch.episode_rewards)), diag.entropy))
    return TrainResult(params, curve)


def _restriction_factory(scheme: Scheme):
    if scheme is Scheme.C_STORM:
        from drim.baselines import CommunityRestriction

        return lambda: CommunityRestriction()
    return lambda: None


def make_cim_env_factory(
    graph: Graph,
    episode_cfg: EpisodeConfig,
    party: Party,
    opponent_factory,
    action_set: tuple[StrategyKind, ...],
    restriction_factory=lambda: None,
    observable: ObservableGraph | None = None,
):
    def factory(seed: int) -> CimLearnerEnv:
        return CimLearnerEnv(
            graph,
            episode_cfg.with_seed(seed),
            party,
            opponent_factory(),
            action_set,
            observable=observable,
            restriction=restriction_factory(),
        )

    return factory


def train_agent(
    scheme: Scheme,
    opponent: str,
    graph: Graph,
    episode_cfg: EpisodeConfig,
    ppo_cfg: PPOConfig,
    rng_seed: int,
    observable: ObservableGraph | None = None,
) -> TrainResult:
    """Train the true party's agent for a scheme against one opponent.

    opponent is a strategy name (af/bf/sgf/cf/random) or 'drl', which
    trains both sides by alternating-freeze self-play: the true party
    trains against a frozen false-party policy, then roles swap, for the
    configured number of alternations. The false party's DRL agent always
    uses the full four-action set.
    """
    seed_seq = np.random.SeedSequence(rng_seed)
    tp_space = action_space(scheme)
    restriction = _restriction_factory(scheme)

    if opponent != "drl":
        init_seed, loop_seed = seed_seq.spawn(2)
        params = init_params(len(tp_space), ppo_cfg.hidden, np.random.default_rng(init_seed))
        env_factory = make_cim_env_factory(
            graph, episode_cfg, Party.TRUE_PARTY,
            lambda: make_heuristic_agent(opponent),
            tp_space, restriction, observable,
        )
        return train_loop(params, env_factory, ppo_cfg, loop_seed)

    fp_space = action_space(Scheme.DRIM_A)
    tp_init, fp_init, loop_seed = seed_seq.spawn(3)
    tp_params = init_params(len(tp_space), ppo_cfg.hidden, np.random.default_rng(tp_init))
    fp_params = init_params(len(fp_space), ppo_cfg.hidden, np.random.default_rng(fp_init))
    curve: list[tuple[int, float, float]] = []
    side_updates = ppo_cfg.selfplay_updates_per_side
    for alternation in seed_seq.spawn(ppo_cfg.selfplay_alternations):
        tp_seed, fp_seed = alternation.spawn(2)
        frozen_fp = fp_params.copy()
        env_factory = make_cim_env_factory(
            graph, episode_cfg, Party.TRUE_PARTY,
            lambda: PolicyAgent(frozen_fp, fp_space),
            tp_space, restriction, observable,
        )
        result = train_loop(tp_params, env_factory, ppo_cfg, tp_seed, side_updates)
        tp_params = result.params
        base = len(curve)
        curve.extend((base + i, r, e) for i, r, e in result.curve)

        frozen_tp = tp_params.copy()
        tp_restriction = restriction

        def frozen_tp_agent():
            agent = PolicyAgent(frozen_tp, tp_space)
            holder = tp_restriction()
            if holder is None:
                return agent
            from drim.baselines import CommunityAgent

            return CommunityAgent(agent, holder)

        env_factory = make_cim_env_factory(
            graph, episode_cfg, Party.FALSE_PARTY,
            frozen_tp_agent, fp_space, observable=observable,
        )
        fp_result = train_loop(fp_params, env_factory, ppo_cfg, fp_seed, side_updates)
        fp_params = fp_result.params
    return TrainResult(tp_params, curve, opponent_params=fp_params)


def save_params(params: PolicyParams, path: str | Path) -> None:
    """Little-endian binary dump: magic, action count, hidden width,
    then each array as (rows, cols, float64 data) in fixed order."""
    arrays = params.actor.arrays() + params.critic.arrays()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", params.n_actions, params.actor.hidden))
        fh.write(struct.pack("<I", len(arrays)))
        for arr in arrays:
            mat = np.atleast_2d(np.asarray(arr, dtype="<f8"))
            fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
            fh.write(mat.tobytes(order="C"))


def load_params(path: str | Path, expected_actions: int | None = None) -> PolicyParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(_MAGIC):
        raise ValueError(f"{path}: not a policy parameter file")
    offset = len(_MAGIC)
    try:
        n_actions, hidden = struct.unpack_from("<II", blob, offset)
        offset += 8
        (count,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        arrays = []
        for _ in range(count):
            rows, cols = struct.unpack_from("<II", blob, offset)
            offset += 8
            size = rows * cols * 8
            if offset + size > len(blob):
                raise ValueError(f"{path}: truncated parameter file")
            arrays.append(
                np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset)
                .reshape(rows, cols)
                .copy()
            )
            offset += size
    except struct.error as exc:
        raise ValueError(f"{path}: truncated parameter file") from exc
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes in parameter file")
    if count != 12:
        raise ValueError(f"{path}: expected 12 arrays, found {count}")
    if expected_actions is not None and n_actions != expected_actions:
        raise ValueError(
            f"{path}: policy trained for {n_actions} actions, expected {expected_actions}"
        )

    def vec(a):  # stored 1-D arrays come back as (1, n)
        return a.reshape(-1)

    actor = Mlp(arrays[0], vec(arrays[1]), arrays[2], vec(arrays[3]), arrays[4], vec(arrays[5]))
    critic = Mlp(arrays[6], vec(arrays[7]), arrays[8], vec(arrays[9]), arrays[10], vec(arrays[11]))
    if actor.out_dim != n_actions or actor.hidden != hidden:
        raise ValueError(f"{path}: header inconsistent with array shapes")
    return PolicyParams(actor, critic)
