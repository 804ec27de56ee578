"""Exhaustive oracle and the competitor algorithms used for benchmarking."""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .check import CheckerTables, check_community
from .engine import Community, QueryStats, answer_query, refine
from .errors import OracleCapError
from .index import IndexConfig, SocialSpatialIndex, build_index
from .metrics import RoadDistanceCache
from .network import QuerySpec, SpatialSocialNetwork, keyword_overlap


@dataclass(frozen=True)
class OracleConfig:
    max_users: int = 12
    max_subsets_enumerated: int = 1 << 14

    def __post_init__(self):
        if self.max_users < 1 or self.max_subsets_enumerated < 1:
            raise ValueError("oracle caps must be positive")


@dataclass
class OracleResult:
    members: Optional[tuple]
    pool: tuple
    subsets_checked: int

    @property
    def found(self) -> bool:
        return self.members is not None


def oracle_pool(net: SpatialSocialNetwork, query: QuerySpec, tables: Optional[CheckerTables] = None) -> tuple:
    """Users sharing a query keyword and within ``d`` hops of q, plus q itself."""
    tables = tables or CheckerTables(net)
    q = query.q
    pool = [q]
    for u in range(net.n_users):
        if u == q:
            continue
        if set(net.social.users[u].keywords.ids) & query.keywords and tables.hops(q, u) < query.d:
            pool.append(u)
    return tuple(sorted(pool))


def _pairwise_ok(tables, query, members) -> bool:
    for u, v in combinations(members, 2):
        if tables.hops(u, v) >= query.d or tables.avg_dist(u, v) >= query.sigma:
            return False
    return True


def oracle_query(net: SpatialSocialNetwork, query: QuerySpec, cfg: OracleConfig = OracleConfig(),
                 tables: Optional[CheckerTables] = None) -> OracleResult:
    """Largest valid community containing q, by enumeration in decreasing size.

    Ties go to the lexicographically smallest member list.  Returns a result
    with ``members=None`` when no subset is valid.
    """
    tables = tables or CheckerTables(net)
    pool = oracle_pool(net, query, tables)
    if len(pool) > cfg.max_users:
        raise OracleCapError(f"candidate pool of {len(pool)} users exceeds cap {cfg.max_users}")
    q = query.q
    others = [u for u in pool if u != q]
    checked = 0
    for size in range(len(others), -1, -1):
        for extra in combinations(others, size):
            members = tuple(sorted((q,) + extra))
            # pairwise distances are subset-independent; skip the full check when they fail
            if not _pairwise_ok(tables, query, members):
                continue
            checked += 1
            if checked > cfg.max_subsets_enumerated:
                raise OracleCapError("subset enumeration cap reached")
            if check_community(net, query, members, tables).valid:
                return OracleResult(members, pool, checked)
    return OracleResult(None, pool, checked)


def valid_supersets(net: SpatialSocialNetwork, query: QuerySpec, members, pool,
                    tables: Optional[CheckerTables] = None) -> list:
    """All valid strict supersets of ``members`` drawn from ``pool``."""
    tables = tables or CheckerTables(net)
    base = set(members)
    extra_pool = [u for u in pool if u not in base]
    found = []
    for size in range(1, len(extra_pool) + 1):
        for extra in combinations(extra_pool, size):
            trial = tuple(sorted(base | set(extra)))
            if _pairwise_ok(tables, query, trial) and check_community(net, query, trial, tables).valid:
                found.append(trial)
    return found


def greedy_baseline(net: SpatialSocialNetwork, query: QuerySpec, cache: Optional[RoadDistanceCache] = None) -> tuple:
    """Index-free search: hop-bounded BFS with keyword and road-distance filters, then refinement."""
    query.validate(net)
    t0 = time.process_time_ns()
    cache = cache or RoadDistanceCache(net.road)
    q = query.q
    nbrs = net.social.neighbors
    users = net.social.users
    q_avg = net.per_user_mean(cache.profile(net, q))
    seen = {q: 0}
    frontier = deque([q])
    cands = {q}
    while frontier:
        u = frontier.popleft()
        if seen[u] + 1 >= query.d:
            continue
        for v in nbrs[u]:
            if v in seen:
                continue
            seen[v] = seen[u] + 1
            frontier.append(v)
            if keyword_overlap(users[v].keywords, query.keywords) and q_avg[v] < query.sigma:
                cands.add(v)
    stats = QueryStats(nodes_visited=len(seen), candidates_after_pruning=len(cands))
    comm = refine(net, cands, query, cache, stats)
    stats.cpu_nanos = time.process_time_ns() - t0
    return comm, stats


def build_baseline_index(net: SpatialSocialNetwork, kind: str, config: IndexConfig = IndexConfig(),
                         cache: Optional[RoadDistanceCache] = None) -> SocialSpatialIndex:
    """Single-axis index: ``kind`` is ``"social"`` (SIndex) or ``"spatial"`` (RIndex)."""
    if kind not in ("social", "spatial"):
        raise ValueError(f"unknown baseline index kind {kind!r}")
    cfg = IndexConfig(config.l, config.h, config.iota, config.fanout, config.pivot, kind)
    return build_index(net, cfg, cache)


def sindex_baseline(net: SpatialSocialNetwork, idx: SocialSpatialIndex, query: QuerySpec,
                    cache: Optional[RoadDistanceCache] = None) -> tuple:
    """Traversal pruning on hop distance and support only."""
    if idx.profile != "social":
        raise ValueError("sindex_baseline needs an index built with the social profile")
    return answer_query(net, idx, query, cache=cache)


def rindex_baseline(net: SpatialSocialNetwork, idx: SocialSpatialIndex, query: QuerySpec,
                    cache: Optional[RoadDistanceCache] = None) -> tuple:
    """Traversal pruning on road-distance pivots and keywords only."""
    if idx.profile != "spatial":
        raise ValueError("rindex_baseline needs an index built with the spatial profile")
    return answer_query(net, idx, query, cache=cache)


__all__ = [
    "Community",
    "OracleConfig",
    "OracleResult",
    "build_baseline_index",
    "greedy_baseline",
    "oracle_pool",
    "oracle_query",
    "rindex_baseline",
    "sindex_baseline",
    "valid_supersets",
]
