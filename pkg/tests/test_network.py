import pytest
from hypothesis import given
from hypothesis import strategies as st

from sstruss.errors import QueryError, TopicLengthError, UnknownUserError
from sstruss.network import (
    QuerySpec,
    QueryTopicVector,
    RoadNetwork,
    SocialNetwork,
    SpatialSocialNetwork,
    TopicEdge,
    build_keyword_bits,
    keyword_overlap,
    make_user,
    validate_network,
)

from conftest import line_road


class TestValidation:
    def test_fixture_network_is_valid(self, fig_net):
        assert validate_network(fig_net) == []

    def test_disconnected_road_is_reported(self):
        road = RoadNetwork.from_lists([(0, 0, 0), (1, 1, 0), (2, 5, 5)], [(0, 1, 1.0)])
        social = SocialNetwork([make_user(0, [1], [0])], [], 1)
        rules = [v.rule for v in validate_network(SpatialSocialNetwork(road, social))]
        assert any("not connected" in r for r in rules)

    def test_bad_road_edges_are_reported(self):
        road = RoadNetwork.from_lists([(0, 0, 0), (1, 1, 0)], [(0, 1, 1.0), (1, 0, 2.0), (0, 0, 1.0), (0, 1, -1.0)])
        social = SocialNetwork([make_user(0, [1], [0])], [], 1)
        rules = {v.rule for v in validate_network(SpatialSocialNetwork(road, social))}
        assert {"duplicate edge", "self-loop", "edge length not strictly positive"} <= rules

    def test_social_violations_are_reported(self):
        users = [make_user(0, [1], []), make_user(1, [2], [7])]
        edges = [TopicEdge(0, 1, (0.5,)), TopicEdge(0, 1, (0.5,)), TopicEdge(1, 1, (0.2,)),
                 TopicEdge(1, 0, (1.5,)), TopicEdge(0, 3, (0.1, 0.2))]
        net = SpatialSocialNetwork(line_road(), SocialNetwork(users, edges, 1))
        text = " | ".join(str(v) for v in validate_network(net))
        for needle in ("empty check-in list", "not in road network", "duplicate directed edge", "self-loop",
                       "weight out of [0,1]", "endpoint is not a user", "expected 1"):
            assert needle in text


class TestKeywords:
    @given(st.sets(st.integers(0, 2000), max_size=12), st.sets(st.integers(0, 2000), max_size=12))
    def test_overlap_matches_set_intersection(self, a, b):
        ks = build_keyword_bits(a)
        assert keyword_overlap(ks, b) == bool(a & b)

    @given(st.sets(st.integers(0, 500), max_size=20), st.integers(0, 500))
    def test_bitmap_never_gives_false_negatives(self, ids, probe):
        ks = build_keyword_bits(ids)
        if probe in ids:
            assert ks.may_contain(probe)
        assert ks.contains(probe) == (probe in ids)


class TestQuery:
    def test_topic_vector_is_normalised(self):
        tv = QueryTopicVector.normalized([2, 6])
        assert tv.weights == (0.25, 0.75)

    @pytest.mark.parametrize("weights", [[0, 0], [-1, 2], [float("nan"), 1]])
    def test_bad_topic_vectors_are_rejected(self, weights):
        with pytest.raises(QueryError):
            QueryTopicVector.normalized(weights)

    def test_fixture_query_validates(self, fig_net, fig_query):
        fig_query.validate(fig_net)

    @pytest.mark.parametrize("change, exc", [
        ({"q": 99}, UnknownUserError),
        ({"k": 1}, QueryError),
        ({"d": 0}, QueryError),
        ({"sigma": -1.0}, QueryError),
        ({"theta": 1.5}, QueryError),
        ({"topics": QueryTopicVector((1.0,))}, TopicLengthError),
        ({"topics": QueryTopicVector((0.7, 0.7))}, QueryError),
    ])
    def test_invalid_queries_raise(self, fig_net, fig_query, change, exc):
        with pytest.raises(exc):
            fig_query.replace(**change).validate(fig_net)

    def test_plain_topic_sequence_is_coerced(self):
        qy = QuerySpec(0, (1, 3), {1}, 3, 2, 1.0, 0.1)
        assert qy.topics.weights == (0.25, 0.75)
        assert qy.keywords == frozenset({1})
