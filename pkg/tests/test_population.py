"""Population state, roles, and influence counting."""

from __future__ import annotations

import numpy as np
import pytest

from drim.opinion import Opinion, project
from drim.population import (
    BEHAVIOR_LEVELS,
    Alignment,
    Party,
    Role,
    classify,
    decided_influence_counts,
    free_nodes,
    influence_counts,
    init_population,
    most_active_user,
    promote_seed,
)

TOL = 1e-9


class TestInitPopulation:
    def test_fresh_opinions(self):
        state = init_population(3, rng_seed=0, prior_a=0.5)
        for i in range(3):
            op = state.get_opinion(i)
            assert op.b == pytest.approx(1 / 103, abs=TOL)
            assert op.d == pytest.approx(1 / 103, abs=TOL)
            assert op.u == pytest.approx(101 / 103, abs=TOL)
            assert op.a == 0.5
            assert state.role[i] == Role.LEGITIMATE.value
            assert not state.frozen[i]

    def test_urv_scale(self):
        state = init_population(1133, rng_seed=7)
        assert state.n == 1133
        assert len(state.snapshot_rows()) == 1133

    def test_empty_population_rejected(self):
        with pytest.raises(ValueError):
            init_population(0, rng_seed=0)

    def test_invalid_prior_rejected(self):
        with pytest.raises(ValueError):
            init_population(5, rng_seed=0, prior_a=1.2)

    def test_behavior_levels_from_four_level_set(self):
        state = init_population(500, rng_seed=3)
        assert set(np.unique(state.p_read)) <= set(BEHAVIOR_LEVELS)
        assert set(np.unique(state.p_share)) <= set(BEHAVIOR_LEVELS)

    def test_reproducible(self):
        s1 = init_population(50, rng_seed=11)
        s2 = init_population(50, rng_seed=11)
        assert np.array_equal(s1.p_read, s2.p_read)
        assert np.array_equal(s1.p_share, s2.p_share)

    def test_custom_prior(self):
        state = init_population(4, rng_seed=0, prior_a=0.9)
        assert np.all(state.a == 0.9)


class TestPromoteSeed:
    def test_true_party_promotion(self):
        state = init_population(10, rng_seed=0)
        promote_seed(state, 5, Party.TRUE_PARTY)
        op = state.get_opinion(5)
        assert op.b == pytest.approx(100 / 103, abs=TOL)
        assert op.d == pytest.approx(1 / 103, abs=TOL)
        assert op.u == pytest.approx(2 / 103, abs=TOL)
        assert op.a == 1.0
        assert state.role[5] == Role.TIP_SEED.value
        assert state.frozen[5]

    def test_false_party_promotion(self):
        state = init_population(10, rng_seed=0)
        promote_seed(state, 7, Party.FALSE_PARTY)
        op = state.get_opinion(7)
        assert op.b == pytest.approx(1 / 103, abs=TOL)
        assert op.d == pytest.approx(100 / 103, abs=TOL)
        assert op.u == pytest.approx(2 / 103, abs=TOL)
        assert op.a == 0.0

    def test_double_promotion_rejected(self):
        state = init_population(10, rng_seed=0)
        promote_seed(state, 2, Party.TRUE_PARTY)
        with pytest.raises(ValueError):
            promote_seed(state, 2, Party.TRUE_PARTY)
        with pytest.raises(ValueError):
            promote_seed(state, 2, Party.FALSE_PARTY)

    def test_seed_ids(self):
        state = init_population(10, rng_seed=0)
        promote_seed(state, 4, Party.TRUE_PARTY)
        promote_seed(state, 1, Party.FALSE_PARTY)
        promote_seed(state, 9, Party.TRUE_PARTY)
        assert state.seed_ids(Party.TRUE_PARTY).tolist() == [4, 9]
        assert state.seed_ids(Party.FALSE_PARTY).tolist() == [1]


class TestClassify:
    def test_fresh_user_is_true_on_boundary(self):
        op = Opinion(1 / 103, 1 / 103, 101 / 103, 0.5)
        assert project(op)[0] == pytest.approx(0.5, abs=TOL)
        assert classify(op) is Alignment.TRUE_ALIGNED

    def test_tip_opinion(self):
        assert classify(Opinion(100 / 103, 1 / 103, 2 / 103, 1.0)) is Alignment.TRUE_ALIGNED

    def test_fip_opinion(self):
        assert classify(Opinion(1 / 103, 100 / 103, 2 / 103, 0.0)) is Alignment.FALSE_ALIGNED

    def test_partition(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            b, d = rng.dirichlet([1, 1, 1])[:2]
            op = Opinion(b, d, max(0.0, 1 - b - d), rng.random())
            assert classify(op) in (Alignment.TRUE_ALIGNED, Alignment.FALSE_ALIGNED)


class TestInfluenceCounts:
    def test_fresh_population_counts_true_by_convention(self):
        state = init_population(10, rng_seed=0)
        assert influence_counts(state) == (10, 0)

    def test_two_tips_two_fips(self):
        state = init_population(4, rng_seed=0)
        promote_seed(state, 0, Party.TRUE_PARTY)
        promote_seed(state, 1, Party.TRUE_PARTY)
        promote_seed(state, 2, Party.FALSE_PARTY)
        promote_seed(state, 3, Party.FALSE_PARTY)
        assert influence_counts(state) == (2, 2)

    def test_counts_sum_to_population(self):
        state = init_population(30, rng_seed=1)
        for i in range(0, 10, 2):
            promote_seed(state, i, Party.FALSE_PARTY)
        n_t, n_f = influence_counts(state)
        assert n_t + n_f == 30

    def test_decided_counts_ignore_fresh_users(self):
        state = init_population(10, rng_seed=0)
        assert decided_influence_counts(state) == (0, 0)
        promote_seed(state, 0, Party.TRUE_PARTY)
        promote_seed(state, 1, Party.FALSE_PARTY)
        assert decided_influence_counts(state) == (1, 1)


class TestFreeNodes:
    def test_fresh_population_all_free(self):
        state = init_population(6, rng_seed=0)
        assert free_nodes(state) == set(range(6))

    def test_all_dogmatic_population_none_free(self):
        state = init_population(4, rng_seed=0)
        state.u[:] = 0.0
        state.b[:] = 1.0
        assert free_nodes(state) == set()

    def test_threshold_boundary(self):
        state = init_population(2, rng_seed=0)
        state.u[0], state.b[0] = 0.6, 0.4
        state.u[1], state.b[1] = 0.4, 0.6
        assert free_nodes(state) == {0}

    def test_seeds_are_not_free(self):
        state = init_population(5, rng_seed=0)
        promote_seed(state, 3, Party.TRUE_PARTY)
        assert 3 not in free_nodes(state)


class TestMostActiveUser:
    def test_picks_highest_product(self):
        state = init_population(3, rng_seed=0)
        state.p_read[:] = [0.5, 1.0, 0.25]
        state.p_share[:] = [0.5, 1.0, 0.4]
        assert most_active_user(state, {0, 1, 2}) == 1

    def test_tie_breaks_to_lowest_id(self):
        state = init_population(3, rng_seed=0)
        state.p_read[:] = [0.1, 0.5, 0.5]
        state.p_share[:] = [0.1, 1.0, 1.0]
        assert most_active_user(state, {1, 2}) == 1

    def test_single_candidate(self):
        state = init_population(3, rng_seed=0)
        assert most_active_user(state, {2}) == 2

    def test_empty_candidates_rejected(self):
        state = init_population(3, rng_seed=0)
        with pytest.raises(ValueError):
            most_active_user(state, set())


class TestSnapshot:
    def test_row_format(self):
        state = init_population(3, rng_seed=0)
        promote_seed(state, 1, Party.FALSE_PARTY)
        rows = state.snapshot_rows()
        assert rows[1][0] == 1
        assert rows[1][1] == "FIP_SEED"
        assert len(rows[0]) == 8

    def test_seed_opinion_immutable_after_promotion(self):
        state = init_population(3, rng_seed=0)
        promote_seed(state, 0, Party.TRUE_PARTY)
        before = state.get_opinion(0)
        # downstream code must check the latch; verify it is set
        assert state.frozen[0]
        assert state.get_opinion(0) == before
