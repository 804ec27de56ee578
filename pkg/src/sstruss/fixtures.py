"""Small hand-built networks used by tests, demos and the CLI."""
from __future__ import annotations

from .network import (
    QuerySpec,
    QueryTopicVector,
    RoadNetwork,
    SocialNetwork,
    SpatialSocialNetwork,
    TopicEdge,
    make_user,
)

# keyword ids of the six-user example
KEYWORDS = {"Python": 1, "HTML": 2, "C++": 3, "Java": 4, "R": 5, "JavaScript": 6}
TOPICS = ("basketball", "technology")


def six_user_network() -> SpatialSocialNetwork:
    """Six programmers on a 5x2 unit grid of streets.

    Road vertices 0..4 lie on y=0 and 5..9 on y=1, with unit-length horizontal
    and vertical streets.  Users 0..5 are named ``u1``..``u6``.
    """
    verts = [(i, float(i % 5), float(i // 5)) for i in range(10)]
    edges = []
    for row in range(2):
        for x in range(4):
            edges.append((row * 5 + x, row * 5 + x + 1, 1.0))
    for x in range(5):
        edges.append((x, x + 5, 1.0))
    road = RoadNetwork.from_lists(verts, edges)

    kw = KEYWORDS
    users = [
        make_user(0, [kw["Python"], kw["Java"]], [0, 5], "u1"),
        make_user(1, [kw["Python"], kw["HTML"]], [1], "u2"),
        make_user(2, [kw["Java"]], [6], "u3"),
        make_user(3, [kw["HTML"], kw["C++"]], [1, 6], "u4"),
        make_user(4, [kw["C++"], kw["R"]], [2, 7], "u5"),
        make_user(5, [kw["C++"], kw["JavaScript"]], [4, 9], "u6"),
    ]
    pairs = [
        (1, 3, (0.6, 0.7), (0.5, 0.8)),
        (0, 1, (0.8, 0.6), (0.7, 0.7)),
        (0, 3, (0.6, 0.6), (0.7, 0.5)),
        (0, 4, (0.1, 0.1), (0.2, 0.1)),
        (3, 4, (0.1, 0.2), (0.1, 0.1)),
        (4, 5, (0.1, 0.1), (0.1, 0.2)),
        (1, 2, (0.5, 0.6), (0.6, 0.5)),
        (2, 3, (0.5, 0.5), (0.6, 0.6)),
        (1, 5, (0.9, 0.8), (0.8, 0.9)),
        (3, 5, (0.7, 0.8), (0.8, 0.7)),
    ]
    social_edges = []
    for a, b, w_ab, w_ba in pairs:
        social_edges.append(TopicEdge(a, b, w_ab))
        social_edges.append(TopicEdge(b, a, w_ba))
    social = SocialNetwork(tuple(users), tuple(social_edges), 2)
    return SpatialSocialNetwork(road, social)


def six_user_query() -> QuerySpec:
    """User ``u2`` looks for Python, HTML or C++ programmers nearby."""
    return QuerySpec(
        q=1,
        topics=QueryTopicVector((0.5, 0.5)),
        keywords=frozenset({KEYWORDS["Python"], KEYWORDS["HTML"], KEYWORDS["C++"]}),
        k=3,
        d=3,
        sigma=2.0,
        theta=0.3,
    )


def clique_network(n: int = 4, weight: float = 0.9, topic_count: int = 1) -> SpatialSocialNetwork:
    """``n`` users in a complete friendship graph, all checked in at road vertex 0."""
    road = RoadNetwork.from_lists([(0, 0.0, 0.0), (1, 1.0, 0.0)], [(0, 1, 1.0)])
    users = [make_user(i, [1], [0]) for i in range(n)]
    edges = [TopicEdge(a, b, tuple([weight] * topic_count)) for a in range(n) for b in range(n) if a != b]
    return SpatialSocialNetwork(road, SocialNetwork(tuple(users), tuple(edges), topic_count))
