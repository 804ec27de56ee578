"""Query answering: best-first index traversal followed by candidate refinement."""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .check import INFLUENCE_EPS
from .errors import QueryError
from .index import SocialSpatialIndex
from .metrics import (
    InfluenceGraph,
    RoadDistanceCache,
    component_of,
    edge_scores,
    social_hop_rows,
    social_hops,
    truss_peel,
)
from .network import QuerySpec, SpatialSocialNetwork, keyword_overlap
from .pruning import PROFILE_RULES, SOUND, BoundsContext, node_prune, node_spatial_lb, user_prune

# largest leftover pool searched exhaustively when growing the peeled result
ADDBACK_EXHAUSTIVE_CAP = 14


@dataclass
class QueryStats:
    cpu_nanos: int = 0
    nodes_visited: int = 0
    candidates_after_pruning: int = 0
    peel_iterations: int = 0
    result_size: int = 0

    def to_json(self) -> dict:
        return {
            "cpu_nanos": self.cpu_nanos,
            "nodes_visited": self.nodes_visited,
            "candidates": self.candidates_after_pruning,
            "peel_iterations": self.peel_iterations,
            "result_size": self.result_size,
        }


@dataclass
class Community:
    members: tuple
    valid: bool
    certificate: dict = field(default_factory=dict)

    def __post_init__(self):
        self.members = tuple(sorted(int(m) for m in self.members))

    def to_json(self) -> dict:
        return {"members": list(self.members), "valid": self.valid, "certificate": self.certificate}


# ---------------------------------------------------------------------------
# traversal


def _traverse(net, idx, ctxs, rules, terminate_on_sigma: bool):
    """Shared best-first traversal for one or more queries.

    Returns per-query candidate lists and the number of nodes popped.
    """
    cands = [set() for _ in ctxs]
    sigma_max = max(c.query.sigma for c in ctxs)
    heap = [(0.0, idx.root, tuple(range(len(ctxs))))]
    visited = 0
    last_key = -math.inf
    while heap:
        key, node, alive = heapq.heappop(heap)
        assert key >= last_key
        last_key = key
        if terminate_on_sigma and key > sigma_max:
            break
        visited += 1
        if terminate_on_sigma:
            alive = tuple(i for i in alive if node_spatial_lb(ctxs[i], node) <= ctxs[i].query.sigma)
        if idx.is_leaf(node):
            for u in idx.members(node).tolist():
                for i in alive:
                    if user_prune(ctxs[i], u, rules) is None:
                        cands[i].add(u)
            continue
        for child in idx.children(node).tolist():
            keep = tuple(i for i in alive if not node_prune(ctxs[i], child, rules).pruned)
            if keep:
                child_key = min(node_spatial_lb(ctxs[i], child) for i in keep)
                heapq.heappush(heap, (max(child_key, key), child, keep))
    for i, c in enumerate(ctxs):
        cands[i].add(c.query.q)
    return cands, visited


def collect_candidates(net: SpatialSocialNetwork, idx: SocialSpatialIndex, ctx: BoundsContext,
                       rules=None) -> tuple:
    """Candidate users surviving index traversal (always includes q), and nodes visited."""
    profile = idx.profile
    rules = PROFILE_RULES[profile] if rules is None else rules
    cands, visited = _traverse(net, idx, [ctx], rules, terminate_on_sigma="spatial" in rules)
    return cands[0], visited


# ---------------------------------------------------------------------------
# refinement


class _Refiner:
    """Exact metric evaluation over one candidate set."""

    def __init__(self, net: SpatialSocialNetwork, query: QuerySpec, cache: Optional[RoadDistanceCache] = None):
        self.net = net
        self.query = query
        self.cache = cache or RoadDistanceCache(net.road)
        self.scores = edge_scores(net.social, query.topics)
        q = query.q
        self.q_avg = net.per_user_mean(self.cache.profile(net, q))
        self.q_hops = social_hops(net.social, q)
        self._avg_rows = {}
        self._hop_rows = {}
        self.iterations = 0

    # pairwise metrics, memoised by user
    def avg_row(self, u: int) -> np.ndarray:
        row = self._avg_rows.get(u)
        if row is None:
            row = self.net.per_user_mean(self.cache.profile(self.net, u))
            self._avg_rows[u] = row
        return row

    def hop_row(self, u: int) -> np.ndarray:
        row = self._hop_rows.get(u)
        if row is None:
            row = social_hop_rows(self.net.social, [u])[0]
            self._hop_rows[u] = row
        return row

    def prefetch_hops(self, users):
        missing = [u for u in users if u not in self._hop_rows]
        if missing:
            for u, row in zip(missing, social_hop_rows(self.net.social, missing)):
                self._hop_rows[u] = row

    def static_filter(self, cands) -> set:
        qy = self.query
        users = self.net.social.users
        keep = {qy.q}
        for u in cands:
            if u == qy.q:
                continue
            if not keyword_overlap(users[u].keywords, qy.keywords):
                continue
            if not (self.q_avg[u] < qy.sigma and self.q_hops[u] < qy.d):
                continue
            keep.add(u)
        return keep

    def closure(self, members: set) -> set:
        """Greatest subset closed under the q-relative influence and truss-connectivity rules."""
        qy = self.query
        q, theta = qy.q, qy.theta - INFLUENCE_EPS
        current = set(members)
        while True:
            self.iterations += 1
            before = len(current)
            ig = InfluenceGraph(self.net.social, qy.topics, current, self.scores)
            out, inn = ig.from_source(q), ig.to_target(q)
            current = {u for u in current if u == q or (out[u] >= theta and inn[u] >= theta)}
            edges = truss_peel(self.net.social, current, qy.k)
            current = component_of(q, edges) & current
            current.add(q)
            if len(current) == before:
                return current

    def pair_violations(self, members: set) -> dict:
        """Violation count per member over non-q pairs (spatial, hop, mutual influence)."""
        qy = self.query
        others = sorted(u for u in members if u != qy.q)
        counts = {}
        if len(others) < 2:
            return counts
        self.prefetch_hops(others)
        ig = InfluenceGraph(self.net.social, qy.topics, members, self.scores)
        infl = {u: ig.from_source(u) for u in others}
        theta = qy.theta - INFLUENCE_EPS
        for u, v in combinations(others, 2):
            bad = (
                self.avg_row(u)[v] >= qy.sigma
                or self.hop_row(u)[v] >= qy.d
                or infl[u][v] < theta
                or infl[v][u] < theta
            )
            if bad:
                counts[u] = counts.get(u, 0) + 1
                counts[v] = counts.get(v, 0) + 1
        return counts

    def is_valid(self, members: set) -> bool:
        qy = self.query
        users = self.net.social.users
        if not all(keyword_overlap(users[u].keywords, qy.keywords) for u in members):
            return False
        if len(members) == 1:
            return qy.k <= 2
        ms = sorted(members)
        self.prefetch_hops(ms)
        for u, v in combinations(ms, 2):
            if self.avg_row(u)[v] >= qy.sigma or self.hop_row(u)[v] >= qy.d:
                return False
        edges = truss_peel(self.net.social, members, qy.k)
        if component_of(qy.q, edges) != set(members):
            return False
        ig = InfluenceGraph(self.net.social, qy.topics, members, self.scores)
        theta = qy.theta - INFLUENCE_EPS
        for u in ms:
            row = ig.from_source(u)
            if any(row[v] < theta for v in ms if v != u):
                return False
        return True

    def compatible(self, u: int, v: int) -> bool:
        qy = self.query
        return self.avg_row(u)[v] < qy.sigma and self.hop_row(u)[v] < qy.d

    def peel(self, cands) -> tuple:
        """Run the fixpoint; returns ``(closed pool, peeled result)``."""
        pool = self.closure(self.static_filter(cands))
        current = set(pool)
        while True:
            counts = self.pair_violations(current)
            if not counts:
                return pool, current
            worst = max(counts, key=lambda u: (counts[u], u))
            current.discard(worst)
            current = self.closure(current)

    def grow(self, pool: set, result: set) -> set:
        """Largest valid superset of ``result`` inside ``pool`` (exhaustive when small)."""
        left = sorted(u for u in pool - result if all(self.compatible(u, r) for r in result if r != u))
        if not left:
            return result
        if len(left) <= ADDBACK_EXHAUSTIVE_CAP:
            adj = {u: {v for v in left if v != u and self.compatible(u, v)} for u in left}
            for size in range(len(left), 0, -1):
                for extra in combinations(left, size):
                    if any(b not in adj[a] for a, b in combinations(extra, 2)):
                        continue
                    trial = result | set(extra)
                    if self.is_valid(trial):
                        return trial
            return result
        grown = set(result)
        changed = True
        while changed:
            changed = False
            for u in left:
                if u not in grown and self.is_valid(grown | {u}):
                    grown.add(u)
                    changed = True
        return grown

    def certificate(self, members: set) -> dict:
        qy = self.query
        ms = sorted(members)
        users = self.net.social.users
        flags = {u: keyword_overlap(users[u].keywords, qy.keywords) for u in ms}
        cert = {"keyword_flags": {str(u): f for u, f in flags.items()}}
        if len(ms) < 2:
            cert.update(max_pair_avg_dist=0.0, max_pair_hops=0.0, min_mutual_influence=None,
                        min_truss_support=None)
            return cert
        self.prefetch_hops(ms)
        pairs = list(combinations(ms, 2))
        ig = InfluenceGraph(self.net.social, qy.topics, members, self.scores)
        rows = {u: ig.from_source(u) for u in ms}
        edges = truss_peel(self.net.social, members, qy.k)
        nbrs = self.net.social.neighbors
        sups = []
        for a, b in edges:
            common = [w for w in nbrs[a] & nbrs[b] if w in members and (min(a, w), max(a, w)) in edges
                      and (min(b, w), max(b, w)) in edges]
            sups.append(len(common))
        hop = max(float(self.hop_row(u)[v]) for u, v in pairs)
        cert.update(
            max_pair_avg_dist=float(max(self.avg_row(u)[v] for u, v in pairs)),
            max_pair_hops=hop if math.isfinite(hop) else "inf",
            min_mutual_influence=float(min(rows[u][v] for u in ms for v in ms if u != v)),
            min_truss_support=min(sups) if sups else None,
        )
        return cert


def refine(net: SpatialSocialNetwork, candidates, query: QuerySpec, cache: Optional[RoadDistanceCache] = None,
           stats: Optional[QueryStats] = None) -> Community:
    """Peel the candidate set down to a valid community containing q (or report none)."""
    if query.q not in candidates:
        raise QueryError("candidates must contain the query user")
    r = _Refiner(net, query, cache)
    pool, peeled = r.peel(candidates)
    result = r.grow(pool, peeled)
    valid = r.is_valid(result)
    if stats is not None:
        stats.peel_iterations += r.iterations
        stats.result_size = len(result)
    cert = r.certificate(result)
    cert["valid"] = valid
    return Community(tuple(result), valid, cert)


# ---------------------------------------------------------------------------
# public entry points


def answer_query(net: SpatialSocialNetwork, idx: SocialSpatialIndex, query: QuerySpec, mode: str = SOUND,
                 cache: Optional[RoadDistanceCache] = None) -> tuple:
    """Answer one query; returns ``(Community, QueryStats)``."""
    t0 = time.process_time_ns()
    ctx = BoundsContext(net, idx, query, mode)
    stats = QueryStats()
    cands, stats.nodes_visited = collect_candidates(net, idx, ctx)
    stats.candidates_after_pruning = len(cands)
    comm = refine(net, cands, query, cache, stats)
    stats.cpu_nanos = time.process_time_ns() - t0
    return comm, stats


def answer_batch(net: SpatialSocialNetwork, idx: SocialSpatialIndex, queries, mode: str = SOUND,
                 cache: Optional[RoadDistanceCache] = None) -> list:
    """Answer several queries with one shared index traversal; results keep input order."""
    queries = list(queries)
    if not queries:
        raise QueryError("batch must contain at least one query")
    for i, qy in enumerate(queries):
        try:
            qy.validate(net)
        except Exception as exc:
            raise QueryError(f"query {i} is invalid: {exc}") from exc
    t0 = time.process_time_ns()
    ctxs = [BoundsContext(net, idx, qy, mode) for qy in queries]
    rules = PROFILE_RULES[idx.profile]
    cands, visited = _traverse(net, idx, ctxs, rules, terminate_on_sigma="spatial" in rules)
    shared = time.process_time_ns() - t0
    cache = cache or RoadDistanceCache(net.road)
    out = []
    for qy, c in zip(queries, cands):
        t1 = time.process_time_ns()
        stats = QueryStats(nodes_visited=visited, candidates_after_pruning=len(c))
        comm = refine(net, c, qy, cache, stats)
        stats.cpu_nanos = shared + time.process_time_ns() - t1
        out.append((comm, stats))
    return out
