"""Exact graph metrics: road distances, hop distances, edge supports, influence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra, shortest_path

from .errors import SSTrussError, TopicLengthError, UnknownUserError, UnknownVertexError
from .network import QueryTopicVector, RoadNetwork, SocialNetwork, SpatialSocialNetwork

# ---------------------------------------------------------------------------
# road network


def road_shortest_paths(road: RoadNetwork, source: int) -> np.ndarray:
    """Single-source shortest path lengths from ``source`` to every road vertex."""
    if not 0 <= source < road.n_vertices:
        raise UnknownVertexError(source)
    return dijkstra(road.csr, directed=False, indices=int(source))


def road_distance_rows(road: RoadNetwork, sources, limit: float = np.inf) -> np.ndarray:
    sources = np.asarray(sources, dtype=np.int64)
    if len(sources) and (sources.min() < 0 or sources.max() >= road.n_vertices):
        bad = sources[(sources < 0) | (sources >= road.n_vertices)][0]
        raise UnknownVertexError(int(bad))
    if len(sources) == 0:
        return np.zeros((0, road.n_vertices))
    return np.atleast_2d(dijkstra(road.csr, directed=False, indices=sources, limit=limit))


class RoadDistanceCache:
    """Memoises Dijkstra rows per road vertex; shared by the index builder and engine."""

    def __init__(self, road: RoadNetwork, max_rows: int = 4096):
        self.road = road
        self.max_rows = max_rows
        self._rows = {}

    def rows(self, vertices) -> np.ndarray:
        vertices = [int(v) for v in vertices]
        missing = sorted({v for v in vertices if v not in self._rows})
        if missing:
            if len(self._rows) + len(missing) > self.max_rows:
                self._rows.clear()
            computed = road_distance_rows(self.road, missing)
            for v, row in zip(missing, computed):
                self._rows[v] = row
        return np.stack([self._rows[v] for v in vertices]) if vertices else np.zeros((0, self.road.n_vertices))

    def profile(self, net: SpatialSocialNetwork, u: int) -> np.ndarray:
        """Mean distance from ``u``'s check-ins to every road vertex."""
        return self.rows(net.checkin_vertices[u]).mean(axis=0)


def avg_dist_rn(net: SpatialSocialNetwork, u: int, v: int, cache: Optional[RoadDistanceCache] = None) -> float:
    """Mean road distance over all check-in pairs of ``u`` and ``v``."""
    for x in (u, v):
        if not 0 <= x < net.n_users:
            raise UnknownUserError(x)
    lu, lv = net.checkin_vertices[u], net.checkin_vertices[v]
    rows = cache.rows(lu) if cache is not None else road_distance_rows(net.road, lu)
    return float(rows[:, lv].mean())


def avg_dist_matrix(net: SpatialSocialNetwork, users, cache: Optional[RoadDistanceCache] = None) -> np.ndarray:
    """Pairwise ``avg_dist_rn`` among ``users`` (row/col order follows ``users``)."""
    users = list(users)
    cache = cache or RoadDistanceCache(net.road)
    out = np.zeros((len(users), len(users)))
    profiles = [cache.profile(net, u) for u in users]
    for i, prof in enumerate(profiles):
        for j, v in enumerate(users):
            out[i, j] = prof[net.checkin_vertices[v]].mean()
    return out


# ---------------------------------------------------------------------------
# social hops


def social_hops(social: SocialNetwork, source: int) -> np.ndarray:
    """BFS hop counts from ``source`` over undirected friendships; ``inf`` if unreachable."""
    if not 0 <= source < social.n_users:
        raise UnknownUserError(source)
    return shortest_path(social.undirected_csr, directed=False, unweighted=True, indices=int(source))


def social_hop_rows(social: SocialNetwork, sources) -> np.ndarray:
    sources = np.asarray(list(sources), dtype=np.int64)
    if len(sources) == 0:
        return np.zeros((0, social.n_users))
    return np.atleast_2d(shortest_path(social.undirected_csr, directed=False, unweighted=True, indices=sources))


# ---------------------------------------------------------------------------
# supports and trusses


def edge_key(u: int, v: int) -> tuple:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class EdgeSupportMap:
    support: dict
    phi: np.ndarray

    def __getitem__(self, edge):
        return self.support[edge_key(*edge)]


def compute_supports(social: SocialNetwork) -> EdgeSupportMap:
    """Triangle count of every undirected friendship and the per-user maximum Φ.

    Edges are oriented from lower to higher (degree, id) rank so that each
    triangle is discovered exactly once by intersecting forward adjacency sets.
    """
    nbrs = social.neighbors
    n = len(nbrs)
    rank = [(len(nbrs[u]), u) for u in range(n)]
    forward = [frozenset(v for v in nbrs[u] if rank[v] > rank[u]) for u in range(n)]
    support = {}
    for u in range(n):
        for v in nbrs[u]:
            if u < v:
                support[(u, v)] = 0
    for u in range(n):
        fu = forward[u]
        for v in fu:
            for w in fu & forward[v]:
                support[edge_key(u, v)] += 1
                support[edge_key(u, w)] += 1
                support[edge_key(v, w)] += 1
    phi = np.zeros(n, dtype=np.int64)
    for (u, v), s in support.items():
        if s > phi[u]:
            phi[u] = s
        if s > phi[v]:
            phi[v] = s
    return EdgeSupportMap(support, phi)


def truss_peel(social: SocialNetwork, restricted_to: Optional[Iterable[int]], k: int, rng=None) -> frozenset:
    """Maximal set of friendships inside ``restricted_to`` whose support stays >= k-2.

    ``rng`` (a ``random.Random``) randomises the peel order; the fixpoint does not
    depend on it.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    nbrs = social.neighbors
    members = set(range(social.n_users)) if restricted_to is None else set(restricted_to)
    adj = {u: set(nbrs[u]) & members for u in members}
    sup = {}
    for u in members:
        au = adj[u]
        for v in au:
            if u < v:
                sup[(u, v)] = len(au & adj[v])
    thr = k - 2
    queue = sorted(e for e, s in sup.items() if s < thr)
    while queue:
        if rng is not None:
            i = rng.randrange(len(queue))
            queue[i], queue[-1] = queue[-1], queue[i]
        e = queue.pop()
        if e not in sup:
            continue
        u, v = e
        adj[u].discard(v)
        adj[v].discard(u)
        del sup[e]
        for w in adj[u] & adj[v]:
            for f in (edge_key(u, w), edge_key(v, w)):
                sup[f] -= 1
                if sup[f] == thr - 1:
                    queue.append(f)
    return frozenset(sup)


def component_of(root: int, edges: Iterable[tuple]) -> set:
    """Vertices reachable from ``root`` through the undirected ``edges``."""
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


# ---------------------------------------------------------------------------
# influence


def edge_influence(weights, topics) -> float:
    """Topic-weighted single-edge influence ``sum_j w_j * t_j``."""
    t = topics.weights if isinstance(topics, QueryTopicVector) else tuple(topics)
    w = weights.weights if hasattr(weights, "weights") else tuple(weights)
    if len(w) != len(t):
        raise TopicLengthError(f"edge has {len(w)} topic weights, query has {len(t)}")
    return float(sum(a * b for a, b in zip(w, t)))


def edge_scores(social: SocialNetwork, topics) -> np.ndarray:
    """``edge_influence`` of every edge row, clipped into ``[0, 1]``."""
    t = topics.array if isinstance(topics, QueryTopicVector) else np.asarray(topics, dtype=np.float64)
    if len(t) != social.topic_count:
        raise TopicLengthError(f"query has {len(t)} topics, network has {social.topic_count}")
    if not social.edges:
        return np.zeros(0)
    return np.clip(social.weights @ t, 0.0, 1.0)


class InfluenceGraph:
    """Max-product path search as shortest paths on ``-ln f`` edge lengths.

    Edges with ``f == 0`` are dropped; ``f == 1`` edges become explicit zero-length
    entries, which scipy's csgraph routines keep as edges.  With ``members`` given,
    only paths inside that vertex set are considered.
    """

    def __init__(self, social: SocialNetwork, topics, members: Optional[Iterable[int]] = None,
                 scores: Optional[np.ndarray] = None):
        self.n = social.n_users
        scores = edge_scores(social, topics) if scores is None else scores
        keep = scores > 0
        src, dst, f = social.src[keep], social.dst[keep], scores[keep]
        if members is None:
            self.members = np.arange(self.n)
            local = None
        else:
            self.members = np.array(sorted(set(members)), dtype=np.int64)
            local = np.full(self.n, -1, dtype=np.int64)
            local[self.members] = np.arange(len(self.members))
            ok = (local[src] >= 0) & (local[dst] >= 0)
            src, dst, f = local[src[ok]], local[dst[ok]], f[ok]
        self._local = local
        size = len(self.members)
        w = -np.log(f)
        w[w < 0] = 0.0
        self.forward = sp.csr_matrix((w, (src, dst)), shape=(size, size))
        self.backward = sp.csr_matrix((w, (dst, src)), shape=(size, size))

    def _loc(self, u: int) -> int:
        if self._local is None:
            return int(u)
        i = int(self._local[u])
        if i < 0:
            raise UnknownUserError(u)
        return i

    def _expand(self, dist: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            local = np.exp(-dist)
        if self._local is None:
            return local
        out = np.zeros(self.n)
        out[self.members] = local
        return out

    def from_source(self, u: int) -> np.ndarray:
        """Influence score from ``u`` to every user (``0`` outside ``members`` or unreachable)."""
        dist = dijkstra(self.forward, directed=True, indices=self._loc(u))
        return self._expand(dist)

    def to_target(self, v: int) -> np.ndarray:
        """Influence score from every user to ``v``."""
        dist = dijkstra(self.backward, directed=True, indices=self._loc(v))
        return self._expand(dist)


def influence_score(social: SocialNetwork, u: int, v: int, topics, within: Optional[Iterable[int]] = None) -> float:
    """Maximum over simple directed paths ``u -> v`` of the product of edge influences."""
    if u == v:
        raise SSTrussError("influence_score requires u != v")
    for x in (u, v):
        if not 0 <= x < social.n_users:
            raise UnknownUserError(x)
    if within is not None:
        within = set(within)
        if u not in within or v not in within:
            raise SSTrussError("both endpoints must lie inside `within`")
    return float(InfluenceGraph(social, topics, within).from_source(u)[v])


def influence_set_to_user(social: SocialNetwork, members: Iterable[int], v: int, topics) -> float:
    """Minimum influence from any member of ``members`` to ``v``."""
    members = list(members)
    if not members:
        raise SSTrussError("influence_set_to_user needs a non-empty set")
    if v in members:
        raise SSTrussError("v must not belong to the set")
    ig = InfluenceGraph(social, topics)
    into_v = ig.to_target(v)
    return float(min(into_v[u] for u in members))

