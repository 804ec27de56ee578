import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sstruss.baselines import OracleConfig, oracle_query, valid_supersets
from sstruss.check import CheckerTables, check_community
from sstruss.engine import answer_batch, answer_query, collect_candidates, refine
from sstruss.errors import QueryError, UnknownUserError
from sstruss.fixtures import clique_network
from sstruss.index import build_index
from sstruss.network import QuerySpec
from sstruss.pruning import PAPER_LITERAL, BoundsContext
from sstruss.verify import SMALL_INDEX, random_small_case


class TestFixture:
    def test_expected_community(self, fig_net, fig_index, fig_query):
        comm, stats = answer_query(fig_net, fig_index, fig_query)
        assert comm.valid
        assert comm.members == (0, 1, 3)
        assert stats.result_size == 3
        assert stats.candidates_after_pruning >= 3
        assert stats.nodes_visited >= 1
        assert comm.certificate["max_pair_avg_dist"] < fig_query.sigma
        assert comm.certificate["min_mutual_influence"] >= fig_query.theta

    def test_certificate_agrees_with_checker(self, fig_net, fig_index, fig_query):
        comm, _ = answer_query(fig_net, fig_index, fig_query)
        cert = check_community(fig_net, fig_query, comm.members)
        assert cert.valid and cert.failing() == []
        assert cert.max_pair_avg_dist == pytest.approx(comm.certificate["max_pair_avg_dist"])

    def test_tight_sigma_leaves_q_alone(self, fig_net, fig_index, fig_query):
        comm, _ = answer_query(fig_net, fig_index, fig_query.replace(sigma=0.5))
        assert comm.members == (1,)
        assert not comm.valid

    def test_unknown_query_user(self, fig_net, fig_index, fig_query):
        with pytest.raises(UnknownUserError):
            answer_query(fig_net, fig_index, fig_query.replace(q=42))

    def test_refine_requires_q(self, fig_net, fig_query):
        with pytest.raises(QueryError):
            refine(fig_net, {0, 3}, fig_query)

    def test_clique_is_returned_whole(self):
        net = clique_network(5, 0.9)
        idx = build_index(net, SMALL_INDEX)
        qy = QuerySpec(2, (1.0,), {1}, 5, 2, 1.0, 0.5)
        comm, _ = answer_query(net, idx, qy)
        assert comm.valid and comm.members == (0, 1, 2, 3, 4)
        comm, _ = answer_query(net, idx, qy.replace(theta=0.95))
        assert comm.members == (2,)


class TestOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 1_000_000))
    def test_engine_matches_oracle(self, seed):
        case = random_small_case(seed)
        net, qy = case.net, case.query
        tables = CheckerTables(net)
        oracle = oracle_query(net, qy, OracleConfig(), tables)
        comm, _ = answer_query(net, build_index(net, SMALL_INDEX), qy)
        if not oracle.found:
            assert not comm.valid
            return
        assert comm.valid
        assert check_community(net, qy, comm.members, tables).valid
        assert valid_supersets(net, qy, comm.members, oracle.pool, tables) == []

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 1_000_000))
    def test_candidates_contain_the_oracle_answer(self, seed):
        case = random_small_case(seed)
        oracle = oracle_query(case.net, case.query)
        idx = build_index(case.net, SMALL_INDEX)
        cands, _ = collect_candidates(case.net, idx, BoundsContext(case.net, idx, case.query))
        if oracle.found:
            assert set(oracle.members) <= cands


class TestBatch:
    def test_batch_equals_single_queries(self):
        case = random_small_case(7)
        idx = build_index(case.net, SMALL_INDEX)
        base = case.query
        queries = [base, base.replace(sigma=base.sigma * 2), base.replace(k=2, theta=0.0),
                   base.replace(q=(base.q + 1) % case.net.n_users)]
        batch = answer_batch(case.net, idx, queries)
        for qy, (comm, _) in zip(queries, batch):
            single, _ = answer_query(case.net, idx, qy)
            assert comm.members == single.members and comm.valid == single.valid

    def test_batch_rejects_bad_queries(self, fig_net, fig_index, fig_query):
        with pytest.raises(QueryError):
            answer_batch(fig_net, fig_index, [])
        with pytest.raises(QueryError, match="query 1"):
            answer_batch(fig_net, fig_index, [fig_query, fig_query.replace(k=1)])


class TestModes:
    def test_literal_mode_runs_and_may_lose_answers(self):
        lost = 0
        for seed in range(60):
            case = random_small_case(seed)
            idx = build_index(case.net, SMALL_INDEX)
            sound, _ = answer_query(case.net, idx, case.query)
            lit, _ = answer_query(case.net, idx, case.query, mode=PAPER_LITERAL)
            lost += len(lit.members) < len(sound.members)
        assert lost > 0
