"""Independent validity checker for candidate communities.

Deliberately built on networkx and plain Python rather than the scipy-based
metric code used by the query engine, so the two can cross-check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import networkx as nx

from .network import QuerySpec, SpatialSocialNetwork

# influence scores are products of floats; comparisons against theta allow this slack
INFLUENCE_EPS = 1e-12

CLAUSES = ("contains_q", "keywords", "truss", "hops", "spatial", "influence")


@dataclass
class Certificate:
    valid: bool
    clauses: dict
    max_pair_avg_dist: float = 0.0
    max_pair_hops: float = 0.0
    min_mutual_influence: float = 1.0
    min_truss_support: Optional[int] = None
    keyword_flags: dict = field(default_factory=dict)

    def failing(self) -> list:
        return [name for name, state in self.clauses.items() if state == "fail"]

    def to_json(self) -> dict:
        def num(x):
            if x is None:
                return None
            return x if math.isfinite(x) else str(x)

        return {
            "valid": self.valid,
            "clauses": dict(self.clauses),
            "max_pair_avg_dist": num(self.max_pair_avg_dist),
            "max_pair_hops": num(self.max_pair_hops),
            "min_mutual_influence": num(self.min_mutual_influence),
            "min_truss_support": self.min_truss_support,
            "keyword_flags": {str(k): v for k, v in sorted(self.keyword_flags.items())},
        }


class CheckerTables:
    """networkx views of one network, plus memoised per-user distances."""

    def __init__(self, net: SpatialSocialNetwork):
        self.net = net
        road = nx.Graph()
        road.add_nodes_from(range(net.road.n_vertices))
        for (a, b), w in zip(net.road.edges.tolist(), net.road.lengths.tolist()):
            road.add_edge(a, b, weight=w)
        self.road = road
        friends = nx.Graph()
        friends.add_nodes_from(range(net.n_users))
        for e in net.social.edges:
            friends.add_edge(e.src, e.dst)
        self.friends = friends
        self._vertex_dist = {}
        self._hops = {}
        self._avg = {}

    def vertex_dist(self, v: int) -> dict:
        if v not in self._vertex_dist:
            self._vertex_dist[v] = nx.single_source_dijkstra_path_length(self.road, v)
        return self._vertex_dist[v]

    def avg_dist(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        if key not in self._avg:
            lu = [c.road_vertex for c in self.net.social.users[u].checkins]
            lv = [c.road_vertex for c in self.net.social.users[v].checkins]
            total = 0.0
            for a in lu:
                da = self.vertex_dist(a)
                for b in lv:
                    total += da.get(b, math.inf)
            self._avg[key] = total / (len(lu) * len(lv))
        return self._avg[key]

    def hops(self, u: int, v: int) -> float:
        if u not in self._hops:
            self._hops[u] = nx.single_source_shortest_path_length(self.friends, u)
        return float(self._hops[u].get(v, math.inf))


def _edge_score(weights, topics) -> float:
    return min(1.0, max(0.0, sum(w * t for w, t in zip(weights, topics))))


def within_influence(net: SpatialSocialNetwork, members, topics) -> dict:
    """``{(u, v): best path product}`` for ordered member pairs, paths restricted to ``members``."""
    members = set(members)
    g = nx.DiGraph()
    g.add_nodes_from(members)
    score = {}
    for e in net.social.edges:
        if e.src in members and e.dst in members:
            f = _edge_score(e.weights, topics)
            if f > 0:
                g.add_edge(e.src, e.dst, weight=-math.log(f) if f < 1 else 0.0)
                score[(e.src, e.dst)] = f
    out = {}
    for u in members:
        _, paths = nx.single_source_dijkstra(g, u)
        for v in members:
            if v == u:
                continue
            path = paths.get(v)
            if path is None:
                out[(u, v)] = 0.0
            else:
                prod = 1.0
                for a, b in zip(path, path[1:]):
                    prod *= score[(a, b)]
                out[(u, v)] = prod
    return out


def naive_truss(friends: nx.Graph, members, k: int) -> tuple:
    """Peel edges of the induced subgraph with fewer than ``k-2`` triangles until stable.

    Returns the surviving graph and the minimum support among its edges.
    """
    g = friends.subgraph(members).copy()
    while True:
        weak = [(a, b) for a, b in g.edges if len(set(g[a]) & set(g[b])) < k - 2]
        if not weak:
            break
        g.remove_edges_from(weak)
    sups = [len(set(g[a]) & set(g[b])) for a, b in g.edges]
    return g, (min(sups) if sups else None)


def check_community(net: SpatialSocialNetwork, query: QuerySpec, members, tables: Optional[CheckerTables] = None) -> Certificate:
    """Verify every community constraint from scratch."""
    tables = tables or CheckerTables(net)
    members = sorted(set(int(m) for m in members))
    clauses = {}
    cert = Certificate(False, clauses)
    q = query.q
    clauses["contains_q"] = "pass" if q in members else "fail"

    users = net.social.users
    flags = {u: bool(set(users[u].keywords.ids) & set(query.keywords)) for u in members}
    cert.keyword_flags = flags
    clauses["keywords"] = "pass" if all(flags.values()) else "fail"

    if len(members) == 1:
        clauses["truss"] = "vacuous" if query.k <= 2 else "fail"
        for name in ("hops", "spatial", "influence"):
            clauses[name] = "vacuous"
        cert.valid = all(s != "fail" for s in clauses.values())
        return cert

    g, min_sup = naive_truss(tables.friends, members, query.k)
    cert.min_truss_support = min_sup
    spanning = g.number_of_edges() > 0 and nx.is_connected(g)
    clauses["truss"] = "pass" if spanning else "fail"

    pairs = list(combinations(members, 2))
    cert.max_pair_hops = max(tables.hops(u, v) for u, v in pairs)
    clauses["hops"] = "pass" if cert.max_pair_hops < query.d else "fail"
    cert.max_pair_avg_dist = max(tables.avg_dist(u, v) for u, v in pairs)
    clauses["spatial"] = "pass" if cert.max_pair_avg_dist < query.sigma else "fail"

    inf = within_influence(net, members, query.topics.weights)
    cert.min_mutual_influence = min(inf.values())
    clauses["influence"] = "pass" if cert.min_mutual_influence >= query.theta - INFLUENCE_EPS else "fail"

    cert.valid = all(s != "fail" for s in clauses.values())
    return cert
