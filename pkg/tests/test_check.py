import networkx as nx
import pytest

from sstruss.check import CLAUSES, CheckerTables, check_community, naive_truss, within_influence
from sstruss.fixtures import clique_network
from sstruss.network import QuerySpec

from conftest import exhaustive_influence


class TestCertificate:
    def test_valid_fixture_community(self, fig_net, fig_query):
        cert = check_community(fig_net, fig_query, [0, 1, 3])
        assert cert.valid
        assert set(cert.clauses) == set(CLAUSES)
        assert cert.max_pair_hops == 1
        assert cert.max_pair_avg_dist == pytest.approx(1.5)
        assert cert.min_truss_support == 1
        assert cert.to_json()["valid"] is True

    def test_each_clause_can_fail(self, fig_net, fig_query):
        assert check_community(fig_net, fig_query.replace(k=2), [0, 3]).failing() == ["contains_q"]
        assert "keywords" in check_community(fig_net, fig_query, [1, 2, 3]).failing()
        assert "spatial" in check_community(fig_net, fig_query.replace(sigma=1.0), [0, 1, 3]).failing()
        assert "hops" in check_community(fig_net, fig_query.replace(d=1), [0, 1, 3]).failing()
        assert "influence" in check_community(fig_net, fig_query.replace(theta=0.95), [0, 1, 3]).failing()
        assert "truss" in check_community(fig_net, fig_query.replace(k=4), [0, 1, 3]).failing()

    def test_singleton_semantics(self, fig_net, fig_query):
        assert not check_community(fig_net, fig_query, [1]).valid
        alone = check_community(fig_net, fig_query.replace(k=2), [1])
        assert alone.valid and alone.clauses["hops"] == "vacuous"
        assert not check_community(fig_net, fig_query.replace(k=2, keywords=frozenset({4})), [1]).valid

    def test_disconnected_members_fail_truss(self):
        net = clique_network(4)
        qy = QuerySpec(0, (1.0,), {1}, 2, 5, 5.0, 0.0)
        assert check_community(net, qy, [0, 1, 2, 3]).valid


class TestHelpers:
    def test_within_influence_matches_exhaustive(self, fig_net):
        topics = (0.3, 0.7)
        got = within_influence(fig_net, range(6), topics)
        for (u, v), s in got.items():
            assert s == pytest.approx(exhaustive_influence(fig_net.social, topics, u, v), rel=1e-12)

    def test_naive_truss_peels_pendant_edges(self):
        g = nx.Graph([(0, 1), (1, 2), (0, 2), (2, 3)])
        sub, min_sup = naive_truss(g, [0, 1, 2, 3], 3)
        assert sorted(sub.edges) == [(0, 1), (0, 2), (1, 2)]
        assert min_sup == 1

    def test_tables_hops_and_distances(self, fig_net):
        t = CheckerTables(fig_net)
        assert t.hops(0, 5) == 2
        assert t.avg_dist(1, 1) == 0.0
        assert t.avg_dist(0, 1) == pytest.approx(1.5)
