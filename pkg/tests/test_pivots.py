import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sstruss.datagen import GenConfig, gen_network
from sstruss.errors import PivotError
from sstruss.metrics import avg_dist_rn, compute_supports, influence_score
from sstruss.pivots import (
    PivotSearch,
    PivotSearchConfig,
    PivotSet,
    build_quality_sample,
    cap_unreachable,
    cost_index_pivots,
    cost_road_pivots,
    cost_social_pivots,
    normalize_measures,
    pivot_tables,
    road_pivot_table,
    sample_pairs,
    select_pivots,
    subgraph_quality_measures,
)

FAST = PivotSearchConfig(global_iter=2, swap_iter=5, rng_seed=3)


@pytest.fixture(scope="module")
def small_net():
    return gen_network(GenConfig(n_road=40, n_users=25, rng_seed=11))


class TestPivotSet:
    @pytest.mark.parametrize("kind, pivots", [("bogus", (1,)), ("road", ()), ("social", (1, 1))])
    def test_bad_sets_raise(self, kind, pivots):
        with pytest.raises(PivotError):
            PivotSet(kind, pivots)

    def test_bad_search_config_raises(self):
        with pytest.raises(PivotError):
            PivotSearchConfig(weights=(0.5, 0.5, 0.5))
        with pytest.raises(PivotError):
            PivotSearchConfig(global_iter=0)


class TestTables:
    def test_road_table_is_mean_distance_to_pivot(self, small_net):
        pivots = (0, 7, 19)
        table = road_pivot_table(small_net, pivots)
        g = nx.Graph()
        for (a, b), w in zip(small_net.road.edges, small_net.road.lengths):
            g.add_edge(int(a), int(b), weight=float(w))
        for k, p in enumerate(pivots):
            dist = nx.single_source_dijkstra_path_length(g, p)
            for u in range(small_net.n_users):
                expect = np.mean([dist[c] for c in small_net.checkin_vertices[u]])
                assert table[u, k] == pytest.approx(expect, rel=1e-12)

    def test_social_table_is_hop_distance(self, small_net):
        t = pivot_tables(small_net, PivotSet("road", (0,)), PivotSet("social", (2, 5)))
        g = nx.Graph([(e.src, e.dst) for e in small_net.social.edges])
        g.add_nodes_from(range(small_net.n_users))
        for k, p in enumerate((2, 5)):
            ref = nx.single_source_shortest_path_length(g, p)
            for u in range(small_net.n_users):
                assert t.social_table[u, k] == ref.get(u, np.inf)

    def test_cap_unreachable(self):
        out = cap_unreachable(np.array([[1.0, np.inf], [3.0, 0.0]]))
        assert out.tolist() == [[1.0, 4.0], [3.0, 0.0]]


class TestCosts:
    def test_road_cost_is_sum_of_best_lower_bounds(self, small_net):
        cand = PivotSet("road", (3, 9))
        pairs = [(0, 1), (2, 5), (4, 8)]
        table = road_pivot_table(small_net, cand.pivots)
        expect = sum(np.max(np.abs(table[u] - table[v])) for u, v in pairs)
        assert cost_road_pivots(small_net, cand, pairs) == pytest.approx(expect)
        for u, v in pairs:
            assert np.max(np.abs(table[u] - table[v])) <= avg_dist_rn(small_net, u, v) + 1e-9

    def test_cost_kind_mismatch_raises(self, small_net):
        with pytest.raises(PivotError):
            cost_road_pivots(small_net, PivotSet("social", (1,)), [(0, 1)])
        with pytest.raises(PivotError):
            cost_social_pivots(small_net, PivotSet("road", (1,)), [(0, 1)])

    def test_adding_a_pivot_never_lowers_the_cost(self, small_net):
        pairs = sample_pairs(small_net.n_users, 10_000, np.random.default_rng(0))
        base = cost_social_pivots(small_net, PivotSet("social", (1,)), pairs)
        more = cost_social_pivots(small_net, PivotSet("social", (1, 6)), pairs)
        assert more >= base

    @given(st.integers(2, 40), st.integers(1, 50))
    def test_sample_pairs_are_distinct_users(self, n, budget):
        pairs = sample_pairs(n, budget, np.random.default_rng(n))
        assert len(pairs) <= max(budget, n * (n - 1) // 2)
        assert np.all(pairs[:, 0] != pairs[:, 1])


class TestPartitionQuality:
    def test_measures_match_pairwise_definitions(self, small_net):
        n = small_net.n_users
        partition = [list(range(0, n, 2)), list(range(1, n, 2))]
        sc, st_, inf = subgraph_quality_measures(small_net, partition)
        phi = compute_supports(small_net.social).phi
        g = nx.Graph([(e.src, e.dst) for e in small_net.social.edges])
        g.add_nodes_from(range(n))
        hops = dict(nx.all_pairs_shortest_path_length(g))
        topics = (1 / 3, 1 / 3, 1 / 3)
        e_sc = e_st = e_inf = 0.0
        for grp in partition:
            for u, v in itertools.permutations(grp, 2):
                e_sc += avg_dist_rn(small_net, u, v)
                if v in hops[u]:
                    e_st += (phi[u] + phi[v]) / hops[u][v]
                e_inf += influence_score(small_net.social, u, v, topics)
        assert sc == pytest.approx(e_sc)
        assert st_ == pytest.approx(e_st)
        assert inf == pytest.approx(e_inf)

    def test_single_group_normalises_to_one(self, small_net):
        sample = build_quality_sample(small_net, range(small_net.n_users))
        raw = subgraph_quality_measures(small_net, [list(range(small_net.n_users))], sample)
        chi = normalize_measures(raw, sample.totals)
        assert chi == pytest.approx((1.0, 1.0, 1.0))
        assert cost_index_pivots(chi) == pytest.approx(1 / 3)

    def test_partition_must_cover_users(self, small_net):
        with pytest.raises(PivotError):
            subgraph_quality_measures(small_net, [[0, 1]])


class TestSearch:
    @pytest.mark.parametrize("kind", ["road", "social", "index"])
    def test_select_is_deterministic_and_sized(self, small_net, kind):
        a = select_pivots(small_net, kind, 3, FAST)
        b = select_pivots(small_net, kind, 3, FAST)
        assert a == b and a.size == 3 and a.kind == kind

    def test_local_search_never_worsens_its_start(self, small_net):
        search = PivotSearch(small_net, FAST)
        for kind in ("road", "social", "index"):
            res = search.select(kind, 2)
            for start, end in res.history:
                assert (end >= start) if search.maximize(kind) else (end <= start)

    def test_road_search_maximises_unless_literal(self, small_net):
        assert PivotSearch(small_net, FAST).maximize("road")
        assert not PivotSearch(small_net, PivotSearchConfig(paper_literal=True)).maximize("road")
        assert not PivotSearch(small_net, FAST).maximize("index")

    def test_size_limits(self, small_net):
        search = PivotSearch(small_net, FAST)
        with pytest.raises(PivotError):
            search.select("road", 0)
        with pytest.raises(PivotError):
            search.select("social", small_net.n_users + 1)
        full = search.select("social", small_net.n_users)
        assert full.pivots.pivots == tuple(range(small_net.n_users))
