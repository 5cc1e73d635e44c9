"""Cascade engine and round/episode orchestration.

An episode is k rounds; each round the false party selects and promotes
one seed and propagates p_f waves, then the true party selects one seed
and propagates p_t waves. A wave is a BFS from the party's entire
current seed set: a reached user reads with probability p_read, a reader
fuses each sharing neighbor's opinion (ascending sender id) into its own
through the configured trust model, and then re-shares its own updated
opinion with probability p_share. Users are processed at most once per
wave; seeds of either party and frozen users never update (frozen
readers may still re-share their settled opinion).

Rewards use decided influence counts (vacuity below 0.5) so that the
all-undecided starting population contributes a zero baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from drim.network import Graph, ObservableGraph, full_view, mask_network
from drim.opinion import (
    Opinion,
    TrustModel,
    TrustVariant,
    UOM,
    apply_uom_refresh,
    dissonance,
    fuse,
    trust_coefficient,
)
from drim.population import (
    FREE_VACUITY_THRESHOLD,
    Party,
    PopulationState,
    Role,
    decided_influence_counts,
    influence_counts,
    init_population,
    promote_seed,
)
from drim.strategies import Agent, StrategyKind, select_seed


@dataclass(frozen=True)
class EpisodeConfig:
    """Scenario contract for one episode."""

    k: int = 50
    p_t: int = 2
    p_f: int = 1
    opinion_model: TrustModel = UOM
    p_nv: float = 1.0
    rng_seed: int = 0
    propagate_on_masked: bool = False
    prior_a: float = 0.5
    waves_from_newest_only: bool = False

    def __post_init__(self) -> None:
        if self.k < 1 or self.p_t < 1 or self.p_f < 1:
            raise ValueError("k, p_t, p_f must all be >= 1")

    def with_seed(self, rng_seed: int) -> "EpisodeConfig":
        return replace(self, rng_seed=rng_seed)


@dataclass
class RoundLog:
    """Audit entry for one party-step."""

    t: int
    party: Party
    seed: int
    strategy: str
    n_true: int
    n_false: int
    reward: float


def propagate_wave(
    state: PopulationState,
    g: Graph,
    party: Party,
    model: TrustModel,
    rng: np.random.Generator,
    origins: np.ndarray | None = None,
) -> PopulationState:
    """Run one BFS information wave from the party's seed set (in place)."""
    sharers = origins if origins is not None else state.seed_ids(party)
    sharers = [int(s) for s in sharers]
    if not sharers:
        return state

    adjacency = g.adjacency
    b, d, u, a = state.b, state.d, state.u, state.a
    p_read, p_share, frozen = state.p_read, state.p_share, state.frozen
    is_uom = model.variant is TrustVariant.UOM
    t_u, xi, t_d = model.t_u, model.xi, model.t_d

    # Seeds of either party never read or update; own seeds are origins.
    visited = state.role != Role.LEGITIMATE.value
    visited = visited.copy()
    visited[sharers] = True

    while sharers:
        targets: dict[int, list[int]] = {}
        for s in sharers:
            for nb in adjacency[s]:
                if not visited[nb]:
                    senders = targets.get(nb)
                    if senders is None:
                        targets[nb] = [s]
                    else:
                        senders.append(s)
        if not targets:
            break
        next_sharers: list[int] = []
        for tgt in sorted(targets):
            visited[tgt] = True
            if rng.random() >= p_read[tgt]:
                continue
            if not frozen[tgt]:
                op_i = Opinion(b[tgt], d[tgt], u[tgt], a[tgt])
                for snd in targets[tgt]:
                    op_j = Opinion(b[snd], d[snd], u[snd], a[snd])
                    if is_uom:
                        op_i = apply_uom_refresh(op_i, model)
                    c = trust_coefficient(model, op_i, op_j)
                    try:
                        op_i = fuse(op_i, op_j, c)
                    except ValueError:
                        continue  # dogmatic pair slipped past the freeze latch
                    if op_i.u <= t_u and not (
                        is_uom and op_i.u < xi and dissonance(op_i) > t_d
                    ):
                        frozen[tgt] = True
                        break
                b[tgt], d[tgt], u[tgt], a[tgt] = op_i
            if rng.random() < p_share[tgt]:
                next_sharers.append(tgt)
        sharers = next_sharers
    return state


def extract_state(state: PopulationState, g_observable: ObservableGraph) -> tuple[int, int]:
    """Raw policy observation: (edges among free nodes, max free-node degree)."""
    free = state.u >= FREE_VACUITY_THRESHOLD
    eu, ev = g_observable.edge_u, g_observable.edge_v
    edge_count = int(np.count_nonzero(free[eu] & free[ev]))
    if np.any(free):
        max_deg = int(g_observable.degrees()[free].max())
    else:
        max_deg = 0
    return edge_count, max_deg


def instant_reward(counts: list[int], party: Party, t: int) -> float:
    """Net change of the party's aligned count: n_t - n_{t-2}.

    The false party moves first, so its t=1 reward compares against the
    pre-game baseline n_0; the true party's first reward is at t=2.
    counts[i] is the party's aligned count after step i (counts[0] is
    the baseline).
    """
    if t < 1 or t >= len(counts):
        raise ValueError(f"step t={t} outside recorded history")
    first = 1 if party is Party.FALSE_PARTY else 2
    if t < first or (t - first) % 2 != 0:
        raise ValueError(f"step t={t} is not a {party.name} step")
    prev = t - 2 if t >= 2 else 0
    return float(counts[t] - counts[prev])


def discounted_return(rewards, T: int, gamma: float) -> float:
    """Discounted tail sum starting at index T: sum_t gamma^(t-T+1) R_t."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1)")
    total = 0.0
    for offset, r in enumerate(rewards[T:]):
        total += (gamma ** (offset + 1)) * r
    return total


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """Vector of discounted tail sums for every start index."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1)")
    out = np.zeros(len(rewards))
    g = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        g = gamma * (rewards[i] + g)
        out[i] = g
    return out


_FALLBACK_CHAIN = (StrategyKind.SGF, StrategyKind.CF)


class Episode:
    """One competitive episode on a fixed graph.

    Holds the population, the shared observable view both parties plan
    on, decided-count series per step, and the audit log. Sub-seeds for
    population sampling, edge masking, and dynamics derive from the
    config seed, so an episode is reproducible end to end.
    """

    def __init__(
        self,
        graph: Graph,
        cfg: EpisodeConfig,
        observable: ObservableGraph | None = None,
    ):
        self.graph = graph
        self.cfg = cfg
        pop_seed, mask_seed, dyn_seed = np.random.SeedSequence(cfg.rng_seed).spawn(3)
        self.pop = init_population(graph.n, np.random.default_rng(pop_seed), cfg.prior_a)
        if observable is not None:
            self.obs = observable
        elif cfg.p_nv >= 1.0:
            self.obs = full_view(graph)
        else:
            self.obs = mask_network(graph, cfg.p_nv, np.random.default_rng(mask_seed))
        self.prop_graph = self.obs.view if cfg.propagate_on_masked else graph
        self.rng = np.random.default_rng(dyn_seed)
        self.model = cfg.opinion_model
        self.t = 0
        nt, nf = decided_influence_counts(self.pop)
        self.n_true_series = [nt]
        self.n_false_series = [nf]
        self.logs: list[RoundLog] = []
        e0, d0 = extract_state(self.pop, self.obs)
        self._state_norm = (max(e0, 1), max(d0, 1))

    def normalized_state(self) -> tuple[float, float]:
        e, dg = extract_state(self.pop, self.obs)
        return e / self._state_norm[0], dg / self._state_norm[1]

    def resolve_seed(
        self, kind: StrategyKind, party: Party, pool_mask: np.ndarray | None = None
    ) -> tuple[str, int]:
        """Apply a strategy with the fallback chain; returns (fired, seed)."""
        seed = select_seed(kind, party, self.pop, self.obs, self.rng, pool_mask)
        if seed is not None:
            return kind.value, seed
        for fb in _FALLBACK_CHAIN:
            if fb is not kind:
                seed = select_seed(fb, party, self.pop, self.obs, self.rng, pool_mask)
                if seed is not None:
                    return fb.value, seed
        eligible = self.pop.role == Role.LEGITIMATE.value
        if pool_mask is not None:
            eligible = eligible & pool_mask
        free = eligible & (self.pop.u >= FREE_VACUITY_THRESHOLD)
        for mask in (free, eligible):
            ids = np.flatnonzero(mask)
            if ids.size:
                return "fallback", int(ids[0])
        if pool_mask is not None:  # exhausted pool: retry unrestricted
            return self.resolve_seed(kind, party, None)
        raise RuntimeError("no legitimate users left to seed")

    def step_with_kind(
        self, party: Party, kind: StrategyKind, pool_mask: np.ndarray | None = None
    ) -> RoundLog:
        """Promote one seed by strategy and run the party's waves."""
        fired, seed = self.resolve_seed(kind, party, pool_mask)
        promote_seed(self.pop, seed, party)
        waves = self.cfg.p_f if party is Party.FALSE_PARTY else self.cfg.p_t
        origins = np.array([seed]) if self.cfg.waves_from_newest_only else None
        for _ in range(waves):
            propagate_wave(self.pop, self.prop_graph, party, self.model, self.rng, origins)
        self.t += 1
        nt, nf = decided_influence_counts(self.pop)
        self.n_true_series.append(nt)
        self.n_false_series.append(nf)
        counts = self.n_true_series if party is Party.TRUE_PARTY else self.n_false_series
        prev = self.t - 2 if self.t >= 2 else 0
        reward = float(counts[self.t] - counts[prev])
        entry = RoundLog(self.t, party, seed, fired, nt, nf, reward)
        self.logs.append(entry)
        return entry

    def run_party_step(self, party: Party, agent: Agent) -> RoundLog:
        kind = agent.select(self, party)
        return self.step_with_kind(party, kind, agent.candidate_pool(self, party))

    def run_round(self, tp_agent: Agent, fp_agent: Agent) -> tuple[RoundLog, RoundLog]:
        fp_entry = self.run_party_step(Party.FALSE_PARTY, fp_agent)
        tp_entry = self.run_party_step(Party.TRUE_PARTY, tp_agent)
        return fp_entry, tp_entry

    def run(self, tp_agent: Agent, fp_agent: Agent) -> list[RoundLog]:
        tp_agent.begin_episode(self, Party.TRUE_PARTY)
        fp_agent.begin_episode(self, Party.FALSE_PARTY)
        for _ in range(self.cfg.k):
            self.run_round(tp_agent, fp_agent)
        return self.logs

    def final_metrics(self) -> dict[str, float]:
        n_true, n_false = influence_counts(self.pop)
        dec_true, dec_false = decided_influence_counts(self.pop)
        return {
            "n_true": float(n_true),
            "n_false": float(n_false),
            "decided_n_true": float(dec_true),
            "decided_n_false": float(dec_false),
        }


def run_episode(
    graph: Graph,
    cfg: EpisodeConfig,
    tp_agent: Agent,
    fp_agent: Agent,
    observable: ObservableGraph | None = None,
) -> Episode:
    ep = Episode(graph, cfg, observable)
    ep.run(tp_agent, fp_agent)
    return ep
