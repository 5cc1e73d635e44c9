"""Per-user simulation state: roles, behavior probabilities, opinions.

The population holds one opinion per user plus the behavioral draws that
gate cascades (reading and sharing probabilities, each from the four-level
set {1, 0.5, 0.25, 0.1}). Users start as legitimate with a highly
uncertain opinion built from evidence (1, 1, 101); parties later promote
users to immutable seed roles with confident opinions built from
(100, 1, 2) for the true party and (1, 100, 2) for the false party.

Opinions are stored as flat numpy arrays for cheap vectorized queries
(influence counts, free-node masks); single-user reads and writes go
through `get_opinion` / `set_opinion`.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from drim.opinion import Evidence, Opinion, opinion_from_evidence, project

BEHAVIOR_LEVELS = (1.0, 0.5, 0.25, 0.1)

LEGITIMATE_EVIDENCE = Evidence(1.0, 1.0, 101.0)
TIP_EVIDENCE = Evidence(100.0, 1.0, 2.0)
FIP_EVIDENCE = Evidence(1.0, 100.0, 2.0)

FREE_VACUITY_THRESHOLD = 0.5


class Role(Enum):
    LEGITIMATE = 0
    TIP_SEED = 1
    FIP_SEED = 2


class Party(Enum):
    TRUE_PARTY = "tp"
    FALSE_PARTY = "fp"

    @property
    def opponent(self) -> "Party":
        return Party.FALSE_PARTY if self is Party.TRUE_PARTY else Party.TRUE_PARTY


class Alignment(Enum):
    TRUE_ALIGNED = "true"
    FALSE_ALIGNED = "false"
    # Reserved for decided-influence reporting; `classify` never emits it
    # under the boundary conventions below.
    UNDECIDED = "undecided"


class PopulationState:
    """Mutable per-replica user state.

    Arrays (all length n): b, d, u, a opinion components; p_read, p_share
    behavior probabilities; role codes; frozen latches. Seed users are
    frozen at promotion and their opinions never change afterwards.
    """

    __slots__ = ("n", "b", "d", "u", "a", "p_read", "p_share", "role", "frozen")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"population needs at least one user, got n={n}")
        self.n = n
        self.b = np.zeros(n)
        self.d = np.zeros(n)
        self.u = np.ones(n)
        self.a = np.full(n, 0.5)
        self.p_read = np.ones(n)
        self.p_share = np.ones(n)
        self.role = np.full(n, Role.LEGITIMATE.value, dtype=np.int8)
        self.frozen = np.zeros(n, dtype=bool)

    def get_opinion(self, i: int) -> Opinion:
        return Opinion(self.b[i], self.d[i], self.u[i], self.a[i])

    def set_opinion(self, i: int, op: Opinion) -> None:
        self.b[i] = op.b
        self.d[i] = op.d
        self.u[i] = op.u
        self.a[i] = op.a

    @property
    def opinions(self) -> list[Opinion]:
        return [self.get_opinion(i) for i in range(self.n)]

    def seed_ids(self, party: Party) -> np.ndarray:
        code = Role.TIP_SEED.value if party is Party.TRUE_PARTY else Role.FIP_SEED.value
        return np.flatnonzero(self.role == code)

    def is_seed(self, i: int) -> bool:
        return self.role[i] != Role.LEGITIMATE.value

    def projected(self) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized projection: P(b) = b + a·u and P(d) = d + (1-a)·u."""
        pb = self.b + self.a * self.u
        return pb, 1.0 - pb

    def snapshot_rows(self) -> list[tuple]:
        """Tabular export: (user_id, role, p_read, p_share, b, d, u, a)."""
        return [
            (
                i,
                Role(self.role[i]).name,
                float(self.p_read[i]),
                float(self.p_share[i]),
                float(self.b[i]),
                float(self.d[i]),
                float(self.u[i]),
                float(self.a[i]),
            )
            for i in range(self.n)
        ]


def init_population(
    n: int,
    rng_seed: int | np.random.Generator,
    prior_a: float | np.ndarray = 0.5,
    level_weights: tuple[float, ...] | None = None,
) -> PopulationState:
    """Create n legitimate users with the high-uncertainty opinion.

    Every user gets the evidence-(1, 1, 101) opinion with the given base
    rate and reading/sharing probabilities sampled from the four-level
    set (uniformly unless level_weights is given).
    """
    state = PopulationState(n)
    prior = np.asarray(prior_a, dtype=float)
    if np.any(prior < 0.0) or np.any(prior > 1.0):
        raise ValueError(f"prior belief must lie in [0, 1], got {prior_a}")
    base = opinion_from_evidence(LEGITIMATE_EVIDENCE, 0.5)
    state.b[:] = base.b
    state.d[:] = base.d
    state.u[:] = base.u
    state.a[:] = prior

    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    levels = np.array(BEHAVIOR_LEVELS)
    weights = None
    if level_weights is not None:
        w = np.asarray(level_weights, dtype=float)
        if w.shape != levels.shape or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("level_weights must be four nonnegative values")
        weights = w / w.sum()
    state.p_read = rng.choice(levels, size=n, p=weights)
    state.p_share = rng.choice(levels, size=n, p=weights)
    return state


def promote_seed(state: PopulationState, user: int, party: Party) -> None:
    """Turn a legitimate user into an immutable seed of the given party."""
    if state.role[user] != Role.LEGITIMATE.value:
        raise ValueError(f"user {user} already holds role {Role(state.role[user]).name}")
    if party is Party.TRUE_PARTY:
        state.role[user] = Role.TIP_SEED.value
        state.set_opinion(user, opinion_from_evidence(TIP_EVIDENCE, 1.0))
    else:
        state.role[user] = Role.FIP_SEED.value
        state.set_opinion(user, opinion_from_evidence(FIP_EVIDENCE, 0.0))
    state.frozen[user] = True


def classify(op: Opinion) -> Alignment:
    """Label an opinion by projected probability.

    TRUE_ALIGNED iff P(b) >= 0.5, FALSE_ALIGNED iff P(d) > 0.5; the
    boundary belongs to the true side so the two labels partition.
    """
    pb, _ = project(op)
    return Alignment.TRUE_ALIGNED if pb >= 0.5 else Alignment.FALSE_ALIGNED


def influence_counts(state: PopulationState) -> tuple[int, int]:
    """Raw influence: (|P(b) >= 0.5|, |P(d) > 0.5|); the two sum to n."""
    pb, _ = state.projected()
    n_true = int(np.count_nonzero(pb >= 0.5))
    return n_true, state.n - n_true

def decided_influence_counts(state: PopulationState) -> tuple[int, int]:
    """Influence among decided users only (vacuity below 0.5).

    A fresh population is all-undecided, so these counts start at zero;
    they are the reward baseline and the headline experiment metric.
    """
    pb, _ = state.projected()
    decided = state.u < FREE_VACUITY_THRESHOLD
    n_true = int(np.count_nonzero(decided & (pb >= 0.5)))
    n_false = int(np.count_nonzero(decided & (pb < 0.5)))
    return n_true, n_false


def free_mask(state: PopulationState) -> np.ndarray:
    """Boolean mask of free users: vacuity still at or above 0.5."""
    return state.u >= FREE_VACUITY_THRESHOLD


def free_nodes(state: PopulationState) -> set[int]:
    return set(np.flatnonzero(free_mask(state)).tolist())


def most_active_user(state: PopulationState, candidates) -> int:
    """The candidate with the highest p_read·p_share; ties to lowest id."""
    ids = np.fromiter(sorted(candidates), dtype=np.int64, count=len(candidates))
    if ids.size == 0:
        raise ValueError("no candidates to choose from")
    scores = state.p_read[ids] * state.p_share[ids]
    return int(ids[int(np.argmax(scores))])
