"""One-factor-at-a-time parameter sweeps comparing the engine with its baselines."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import greedy_baseline, rindex_baseline, sindex_baseline
from .engine import answer_query
from .metrics import RoadDistanceCache
from .network import QuerySpec, QueryTopicVector, SpatialSocialNetwork

GRID_DEFAULTS = {"keywords": 5, "topics": 2, "sigma": 2.0, "theta": 0.5, "k": 5, "d": 3}
GRID_SWEEPS = {
    "keywords": [2, 3, 5, 8, 10],
    "topics": [1, 2, 3],
    "sigma": [0.5, 1, 2, 3, 5],
    "theta": [0.1, 0.3, 0.5, 0.7, 0.9],
    "k": [2, 3, 5, 7, 10],
    "d": [1, 2, 3, 5, 10],
}
ALGOS = ("engine", "greedy", "sindex", "rindex")
CSV_FIELDS = ("algo", "param", "value", "queries", "cpu_nanos", "nodes_visited", "candidates",
              "result_size", "valid", "members_digest")


@dataclass
class Grid:
    defaults: dict = field(default_factory=lambda: dict(GRID_DEFAULTS))
    sweeps: dict = field(default_factory=lambda: {k: list(v) for k, v in GRID_SWEEPS.items()})
    queries: int = 5
    seed: int = 0
    keyword_universe: int = 10

    @classmethod
    def from_json(cls, obj: dict) -> "Grid":
        g = cls()
        g.defaults.update(obj.get("defaults", {}))
        if "sweeps" in obj:
            g.sweeps = {k: list(v) for k, v in obj["sweeps"].items()}
        g.queries = int(obj.get("queries", g.queries))
        g.seed = int(obj.get("seed", g.seed))
        g.keyword_universe = int(obj.get("keyword_universe", g.keyword_universe))
        unknown = set(g.defaults) - set(GRID_DEFAULTS) | set(g.sweeps) - set(GRID_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown grid parameters: {sorted(unknown)}")
        return g


def pick_query_users(net: SpatialSocialNetwork, phi: np.ndarray, count: int, seed: int, min_phi: int = 3) -> list:
    """Seeded choice of query users, preferring users that sit in several triangles."""
    rng = np.random.default_rng(seed)
    pool = np.flatnonzero(phi >= min_phi)
    if len(pool) < count:
        pool = np.arange(net.n_users)
    return sorted(int(u) for u in rng.choice(pool, size=min(count, len(pool)), replace=False))


def make_query(net: SpatialSocialNetwork, q: int, params: dict, keyword_order) -> QuerySpec:
    """Build a query; keyword sets are prefixes of ``keyword_order`` so larger sets nest smaller ones."""
    t = net.social.topic_count
    n_topics = max(1, min(int(params["topics"]), t))
    topics = QueryTopicVector(tuple([1.0 / n_topics] * n_topics + [0.0] * (t - n_topics)))
    kws = frozenset(int(k) for k in keyword_order[: int(params["keywords"])])
    return QuerySpec(q, topics, kws, int(params["k"]), float(params["d"]), float(params["sigma"]),
                     float(params["theta"]))


def sweep_points(grid: Grid):
    """``(param, value, params)`` for every one-factor-at-a-time grid point."""
    for param, values in grid.sweeps.items():
        for v in values:
            params = dict(grid.defaults)
            params[param] = v
            yield param, v, params


@dataclass
class PointResult:
    algo: str
    param: str
    value: float
    members: list
    valid: list
    cpu_nanos: int
    nodes_visited: int
    candidates: int

    @property
    def result_size(self) -> int:
        return sum(len(m) for m in self.members)

    @property
    def digest(self) -> str:
        h = hashlib.sha256(json.dumps(self.members).encode()).hexdigest()
        return h[:16]

    def row(self) -> dict:
        return {
            "algo": self.algo, "param": self.param, "value": self.value, "queries": len(self.members),
            "cpu_nanos": self.cpu_nanos, "nodes_visited": self.nodes_visited, "candidates": self.candidates,
            "result_size": self.result_size, "valid": sum(self.valid), "members_digest": self.digest,
        }


def run_grid(net: SpatialSocialNetwork, indexes: dict, grid: Grid, algos=ALGOS, phi=None,
             cache: Optional[RoadDistanceCache] = None, points=None) -> list:
    """Run every algorithm at every grid point; ``indexes`` maps algo name to its index."""
    if phi is None:
        phi = indexes["engine"].arrays["phi"] if "engine" in indexes else next(iter(indexes.values())).arrays["phi"]
    cache = cache or RoadDistanceCache(net.road)
    users = pick_query_users(net, phi, grid.queries, grid.seed, max(0, int(grid.defaults["k"]) - 2))
    rng = np.random.default_rng(grid.seed + 1)
    orders = {q: rng.permutation(np.arange(1, grid.keyword_universe + 1)).tolist() for q in users}
    results = []
    for param, value, params in (points if points is not None else sweep_points(grid)):
        queries = [make_query(net, q, params, orders[q]) for q in users]
        for algo in algos:
            members, valid = [], []
            cpu = visited = cands = 0
            for qy in queries:
                comm, stats = _run(algo, net, indexes, qy, cache)
                members.append(list(comm.members))
                valid.append(bool(comm.valid))
                cpu += stats.cpu_nanos
                visited += stats.nodes_visited
                cands += stats.candidates_after_pruning
            results.append(PointResult(algo, param, value, members, valid, cpu, visited, cands))
    return results


def _run(algo, net, indexes, qy, cache):
    if algo == "engine":
        return answer_query(net, indexes["engine"], qy, cache=cache)
    if algo == "greedy":
        return greedy_baseline(net, qy, cache)
    if algo == "sindex":
        return sindex_baseline(net, indexes["sindex"], qy, cache)
    if algo == "rindex":
        return rindex_baseline(net, indexes["rindex"], qy, cache)
    raise ValueError(f"unknown algorithm {algo!r}")


def to_csv(results) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def monotone_steps(values, increasing: bool) -> int:
    """Number of consecutive steps that move in the expected (non-strict) direction."""
    steps = zip(values, values[1:])
    return sum(1 for a, b in steps if (b >= a if increasing else b <= a))
