import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sstruss.baselines import (
    OracleConfig,
    build_baseline_index,
    greedy_baseline,
    oracle_pool,
    oracle_query,
    rindex_baseline,
    sindex_baseline,
)
from sstruss.check import check_community
from sstruss.engine import answer_query
from sstruss.errors import OracleCapError
from sstruss.index import build_index
from sstruss.verify import SMALL_INDEX, random_small_case


class TestOracle:
    def test_fixture_answer(self, fig_net, fig_query):
        res = oracle_query(fig_net, fig_query)
        assert res.members == (0, 1, 3)
        assert res.subsets_checked >= 1

    def test_pool_holds_keyword_users_within_d(self, fig_net, fig_query):
        assert oracle_pool(fig_net, fig_query) == (0, 1, 3, 4, 5)

    def test_caps(self, fig_net, fig_query):
        with pytest.raises(OracleCapError):
            oracle_query(fig_net, fig_query, OracleConfig(max_users=2))
        with pytest.raises(ValueError):
            OracleConfig(max_users=0)

    def test_infeasible_query_reports_no_community(self, fig_net, fig_query):
        res = oracle_query(fig_net, fig_query.replace(keywords=frozenset({4}), k=4))
        assert not res.found and res.members is None

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 1_000_000))
    def test_oracle_answer_is_valid_and_maximum(self, seed):
        case = random_small_case(seed)
        res = oracle_query(case.net, case.query)
        if res.found:
            assert check_community(case.net, case.query, res.members).valid


class TestBaselines:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1_000_000))
    def test_all_answerers_agree(self, seed):
        case = random_small_case(seed)
        net, qy = case.net, case.query
        engine, _ = answer_query(net, build_index(net, SMALL_INDEX), qy)
        greedy, _ = greedy_baseline(net, qy)
        s, _ = sindex_baseline(net, build_baseline_index(net, "social", SMALL_INDEX), qy)
        r, _ = rindex_baseline(net, build_baseline_index(net, "spatial", SMALL_INDEX), qy)
        assert engine.members == greedy.members == s.members == r.members

    def test_profiles_are_enforced(self, fig_net, fig_query):
        full = build_index(fig_net, SMALL_INDEX)
        with pytest.raises(ValueError):
            sindex_baseline(fig_net, full, fig_query)
        with pytest.raises(ValueError):
            rindex_baseline(fig_net, full, fig_query)
        with pytest.raises(ValueError):
            build_baseline_index(fig_net, "both", SMALL_INDEX)

    def test_greedy_stats(self, fig_net, fig_query):
        comm, stats = greedy_baseline(fig_net, fig_query)
        assert comm.members == (0, 1, 3)
        assert stats.nodes_visited == fig_net.n_users
        assert stats.candidates_after_pruning <= stats.nodes_visited
