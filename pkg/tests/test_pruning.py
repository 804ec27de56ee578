import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sstruss.baselines import oracle_query
from sstruss.datagen import GenConfig, gen_network
from sstruss.errors import QueryError
from sstruss.index import build_index
from sstruss.metrics import avg_dist_rn, social_hop_rows
from sstruss.pruning import (
    ACCEPT_FAST,
    PAPER_LITERAL,
    BoundsContext,
    lb_avg_dist_rn,
    lb_dist_sn,
    node_prune,
    node_spatial_lb,
    support_prune_user,
    ub_avg_dist_rn,
    ub_dist_sn,
    ub_inf_score,
    user_prune,
)
from sstruss.verify import SMALL_INDEX, random_small_case

from conftest import exhaustive_influence


def query_for(net, q=0, **kw):
    from sstruss.network import QuerySpec

    base = dict(q=q, topics=(1,) * net.social.topic_count, keywords={1, 2, 3}, k=3, d=3, sigma=2.0, theta=0.1)
    base.update(kw)
    return QuerySpec(**base)


class TestSandwich:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_distance_bounds_enclose_exact_values(self, seed):
        net = gen_network(GenConfig(n_road=40, n_users=30, extent=3.0, rng_seed=seed))
        ctx = BoundsContext(net, build_index(net, SMALL_INDEX), query_for(net))
        hops = social_hop_rows(net.social, range(net.n_users))
        for u, v in itertools.combinations(range(net.n_users), 2):
            exact = avg_dist_rn(net, u, v)
            assert lb_avg_dist_rn(ctx, u, v) <= exact + 1e-9 <= ub_avg_dist_rn(ctx, u, v) + 2e-9
        for u in range(net.n_users):
            assert lb_dist_sn(ctx, u) <= hops[0, u] <= ub_dist_sn(ctx, u)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_influence_upper_bound(self, seed):
        net = gen_network(GenConfig(n_road=12, n_users=int(seed % 8) + 3, topic_count=2, rng_seed=seed))
        rng = np.random.default_rng(seed)
        qy = query_for(net, topics=tuple(rng.dirichlet([1, 1])))
        ctx = BoundsContext(net, build_index(net, SMALL_INDEX), qy)
        for u, v in itertools.permutations(range(net.n_users), 2):
            exact = exhaustive_influence(net.social, qy.topics.weights, u, v)
            assert ub_inf_score(ctx, u, v) + 1e-12 >= exact


class TestSafety:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000))
    def test_no_rule_prunes_an_oracle_member(self, seed):
        case = random_small_case(seed)
        oracle = oracle_query(case.net, case.query)
        if not oracle.found:
            return
        idx = build_index(case.net, SMALL_INDEX)
        ctx = BoundsContext(case.net, idx, case.query)
        members = [u for u in oracle.members if u != case.query.q]
        for u in members:
            assert user_prune(ctx, u) is None
        pos = idx.position
        for node in range(idx.n_nodes):
            lo, hi = idx.arrays["node_lo"][node], idx.arrays["node_hi"][node]
            if any(lo <= pos[u] < hi for u in members):
                assert not node_prune(ctx, node).pruned

    def test_node_spatial_bound_is_below_every_member(self, fig_net, fig_index, fig_query):
        ctx = BoundsContext(fig_net, fig_index, fig_query)
        for node in range(fig_index.n_nodes):
            lb = node_spatial_lb(ctx, node)
            for u in fig_index.members(node):
                assert lb <= avg_dist_rn(fig_net, fig_query.q, int(u)) + 1e-9


class TestRules:
    def test_support_rule_threshold(self):
        phi = np.array([0, 1, 2])
        assert [support_prune_user(phi, u, 4).pruned for u in range(3)] == [True, True, False]

    def test_fixture_pruning(self, fig_net, fig_index, fig_query):
        ctx = BoundsContext(fig_net, fig_index, fig_query)
        # u3 (id 2) knows only Java, so the keyword rule removes it
        assert user_prune(ctx, 2).rule == "keyword"
        assert user_prune(ctx, 0) is None and user_prune(ctx, 3) is None

    def test_accept_fast_means_the_constraint_holds(self, fig_net, fig_index, fig_query):
        from sstruss.pruning import spatial_prune_user

        ctx = BoundsContext(fig_net, fig_index, fig_query.replace(sigma=50.0))
        for u in range(fig_net.n_users):
            dec = spatial_prune_user(ctx, u)
            if dec.verdict == ACCEPT_FAST:
                assert avg_dist_rn(fig_net, fig_query.q, u) < 50.0

    def test_literal_mode_can_prune_more(self):
        differs = 0
        for seed in range(40):
            case = random_small_case(seed)
            idx = build_index(case.net, SMALL_INDEX)
            sound = BoundsContext(case.net, idx, case.query)
            lit = BoundsContext(case.net, idx, case.query, mode=PAPER_LITERAL)
            a = {u for u in range(case.net.n_users) if user_prune(sound, u)}
            b = {u for u in range(case.net.n_users) if user_prune(lit, u)}
            differs += a != b
        assert differs > 0

    def test_unknown_mode_and_mismatched_index(self, fig_net, fig_index, fig_query):
        with pytest.raises(QueryError):
            BoundsContext(fig_net, fig_index, fig_query, mode="fast")
        other = gen_network(GenConfig(n_road=10, n_users=9, topic_count=2))
        with pytest.raises(QueryError):
            BoundsContext(other, fig_index, fig_query)
