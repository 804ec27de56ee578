"""Seeded synthetic spatial-social networks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, cKDTree

from .network import CheckIn, RoadNetwork, SocialNetwork, SpatialSocialNetwork, TopicEdge, make_user

DISTRIBUTIONS = ("uniform", "gaussian")


class GenConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n_road: int = 1000
    n_users: int = 1000
    distribution: str = "uniform"
    topic_count: int = 3
    keyword_universe: int = 10
    keywords_per_user: tuple = (1, 3)
    degree_range: tuple = (1, 10)
    checkins_per_user: tuple = (1, 3)
    target_avg_degree: tuple = (3.0, 4.0)
    extent: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_road < 2:
            raise GenConfigError("n_road must be >= 2")
        if self.n_users < 1:
            raise GenConfigError("n_users must be >= 1")
        if self.distribution not in DISTRIBUTIONS:
            raise GenConfigError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.topic_count < 1 or self.keyword_universe < 1:
            raise GenConfigError("topic_count and keyword_universe must be >= 1")
        for name in ("keywords_per_user", "degree_range", "checkins_per_user"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise GenConfigError(f"{name} must be a non-empty range")
        if self.checkins_per_user[0] < 1:
            raise GenConfigError("every user needs at least one check-in")
        if not self.extent > 0:
            raise GenConfigError("extent must be positive")


def _sample(rng, dist: str, lo: float, hi: float, size) -> np.ndarray:
    """Uniform, or normal with mean at the midpoint and sd = range/6, clamped to the range."""
    if dist == "uniform":
        return rng.uniform(lo, hi, size)
    x = rng.normal((lo + hi) / 2, (hi - lo) / 6, size)
    return np.clip(x, lo, hi)


def _sample_int(rng, dist: str, lo: int, hi: int, size) -> np.ndarray:
    if dist == "uniform":
        return rng.integers(lo, hi + 1, size)
    x = np.rint(rng.normal((lo + hi) / 2, max(hi - lo, 1) / 6, size)).astype(np.int64)
    return np.clip(x, lo, hi)


def _coords(rng, cfg: GenConfig, n: int) -> np.ndarray:
    """Distinct points in ``[0, extent]^2``; Gaussian draws outside the square are redrawn."""
    e = cfg.extent
    if cfg.distribution == "uniform":
        pts = rng.uniform(0, e, (n, 2))
    else:
        pts = rng.normal(e / 2, e / 6, (n, 2))
        bad = np.any((pts < 0) | (pts > e), axis=1)
        while bad.any():
            pts[bad] = rng.normal(e / 2, e / 6, (int(bad.sum()), 2))
            bad = np.any((pts < 0) | (pts > e), axis=1)
    return pts


def _candidate_edges(pts: np.ndarray) -> np.ndarray:
    n = len(pts)
    if n <= 3:
        return np.array([(a, b) for a in range(n) for b in range(a + 1, n)], dtype=np.int64)
    tri = Delaunay(pts, qhull_options="QJ")
    e = np.vstack([tri.simplices[:, [0, 1]], tri.simplices[:, [1, 2]], tri.simplices[:, [0, 2]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def gen_road(cfg: GenConfig, rng=None) -> RoadNetwork:
    """Connected planar-ish road graph: spanning tree of a Delaunay mesh plus random nearby edges."""
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    n = cfg.n_road
    pts = _coords(rng, cfg, n)
    cand = _candidate_edges(pts)
    length = np.hypot(*(pts[cand[:, 0]] - pts[cand[:, 1]]).T)
    length = np.maximum(length, 1e-9)
    graph = coo_matrix((length, (cand[:, 0], cand[:, 1])), shape=(n, n))
    mst = minimum_spanning_tree(graph).tocoo()
    tree = {(min(a, b), max(a, b)) for a, b in zip(mst.row.tolist(), mst.col.tolist())}
    chosen = set(tree)
    target = int(round(rng.uniform(*cfg.target_avg_degree) * n / 2))
    rest = [i for i, (a, b) in enumerate(cand.tolist()) if (a, b) not in tree]
    # favour short connections: random keys scaled by length
    keys = length[rest] * rng.uniform(0.5, 1.5, len(rest))
    for i in np.asarray(rest, dtype=np.int64)[np.argsort(keys, kind="stable")]:
        if len(chosen) >= target:
            break
        a, b = cand[i]
        chosen.add((int(a), int(b)))
    edges = sorted(chosen)
    pos = {tuple(e): i for i, e in enumerate(cand.tolist())}
    verts = [(i, float(pts[i, 0]), float(pts[i, 1])) for i in range(n)]
    return RoadNetwork.from_lists(verts, [(a, b, float(length[pos[(a, b)]])) for a, b in edges])


def gen_social(cfg: GenConfig, road: RoadNetwork, rng=None) -> SocialNetwork:
    """Users with keywords, check-ins near a home vertex, and locality-biased friendships."""
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed + 1)
    m = cfg.n_users
    dist = cfg.distribution
    road_tree = cKDTree(road.xy)
    homes = rng.integers(0, road.n_vertices, m)
    near_k = min(road.n_vertices, 8)
    _, near = road_tree.query(road.xy[homes], k=near_k)
    near = np.asarray(near).reshape(m, near_k)

    users = []
    kw_lo, kw_hi = cfg.keywords_per_user
    ck_lo, ck_hi = cfg.checkins_per_user
    for u in range(m):
        nk = int(rng.integers(kw_lo, kw_hi + 1))
        nk = min(nk, cfg.keyword_universe)
        if dist == "uniform":
            kws = rng.choice(np.arange(1, cfg.keyword_universe + 1), size=nk, replace=False)
        else:
            kws = set()
            while len(kws) < nk:
                kws.add(int(_sample_int(rng, dist, 1, cfg.keyword_universe, 1)[0]))
            kws = np.array(sorted(kws))
        nc = int(rng.integers(ck_lo, ck_hi + 1))
        verts = [int(homes[u])]
        if nc > 1:
            verts += [int(v) for v in rng.choice(near[u], size=nc - 1, replace=True)]
        stamps = rng.integers(1_500_000_000, 1_700_000_000, nc)
        checks = [CheckIn(v, int(t)) for v, t in zip(verts, stamps)]
        users.append(make_user(u, sorted(int(k) for k in kws), checks))

    # friendships: each user links to nearby users with spare capacity
    d_lo, d_hi = cfg.degree_range
    target = _sample_int(rng, dist, max(d_lo, 1), d_hi, m)
    home_xy = road.xy[homes]
    user_tree = cKDTree(home_xy)
    k_near = min(m, 24)
    _, nearest = user_tree.query(home_xy, k=k_near)
    nearest = np.asarray(nearest).reshape(m, k_near)
    adj = [set() for _ in range(m)]
    for u in rng.permutation(m).tolist():
        options = [int(v) for v in nearest[u] if v != u and v not in adj[u] and len(adj[v]) < target[v]]
        while len(adj[u]) < target[u] and options:
            pick = int(rng.integers(min(len(options), 6)))
            v = options.pop(pick)
            adj[u].add(v)
            adj[v].add(u)
    for u in range(m):
        if adj[u] or m == 1:
            continue
        for v in nearest[u].tolist():
            if v != u and len(adj[v]) < d_hi:
                adj[u].add(v)
                adj[v].add(u)
                break
        else:
            v = int(nearest[u][1]) if k_near > 1 else (u + 1) % m
            adj[u].add(v)
            adj[v].add(u)

    edges = []
    t = cfg.topic_count
    for u in range(m):
        for v in sorted(adj[u]):
            w = _sample(rng, dist, 0.0, 1.0, t)
            edges.append(TopicEdge(u, v, tuple(float(x) for x in w)))
    return SocialNetwork(tuple(users), tuple(edges), t)


def gen_network(cfg: GenConfig) -> SpatialSocialNetwork:
    rng = np.random.default_rng(cfg.rng_seed)
    road = gen_road(cfg, rng)
    social = gen_social(cfg, road, rng)
    return SpatialSocialNetwork(road, social)
