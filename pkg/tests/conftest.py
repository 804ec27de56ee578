import itertools

import numpy as np
import pytest

from sstruss.fixtures import six_user_network, six_user_query
from sstruss.index import build_index
from sstruss.network import RoadNetwork, SocialNetwork, SpatialSocialNetwork, TopicEdge, make_user
from sstruss.verify import SMALL_INDEX


def line_road(n: int = 3) -> RoadNetwork:
    verts = [(i, float(i), 0.0) for i in range(n)]
    return RoadNetwork.from_lists(verts, [(i, i + 1, 1.0) for i in range(n - 1)])


def social_from_pairs(n: int, pairs, topic_count: int = 1, weight: float = 0.5) -> SocialNetwork:
    """Undirected friendships as two directed edges with a constant weight."""
    users = [make_user(u, [1], [0]) for u in range(n)]
    edges = []
    for a, b in pairs:
        edges.append(TopicEdge(a, b, (weight,) * topic_count))
        edges.append(TopicEdge(b, a, (weight,) * topic_count))
    return SocialNetwork(users, edges, topic_count)


def random_pairs(n: int, p: float, rng) -> list:
    return [(a, b) for a, b in itertools.combinations(range(n), 2) if rng.random() < p]


def random_digraph(n: int, p: float, rng, topic_count: int = 2) -> SocialNetwork:
    users = [make_user(u, [1], [0]) for u in range(n)]
    edges = []
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < p:
                w = rng.uniform(0, 1, topic_count)
                if rng.random() < 0.1:
                    w[:] = 1.0
                edges.append(TopicEdge(a, b, tuple(float(x) for x in w)))
    return SocialNetwork(users, edges, topic_count)


def exhaustive_influence(social: SocialNetwork, topics, u: int, v: int) -> float:
    """Max product over all simple paths, enumerated by DFS."""
    t = np.asarray(topics)
    f = {(e.src, e.dst): min(1.0, max(0.0, float(np.dot(e.weights, t)))) for e in social.edges}
    out = {}
    for (a, b), s in f.items():
        out.setdefault(a, []).append((b, s))
    best = 0.0
    stack = [(u, 1.0, frozenset([u]))]
    while stack:
        x, prod, seen = stack.pop()
        if x == v:
            best = max(best, prod)
            continue
        for y, s in out.get(x, ()):
            if y not in seen and s > 0:
                stack.append((y, prod * s, seen | {y}))
    return best


def wrap(social: SocialNetwork, n_road: int = 3) -> SpatialSocialNetwork:
    return SpatialSocialNetwork(line_road(n_road), social)


@pytest.fixture(scope="session")
def fig_net():
    return six_user_network()


@pytest.fixture(scope="session")
def fig_query():
    return six_user_query()


@pytest.fixture(scope="session")
def fig_index(fig_net):
    return build_index(fig_net, SMALL_INDEX)
