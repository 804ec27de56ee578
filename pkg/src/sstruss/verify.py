"""Randomised property suite: oracle equivalence, bound sandwiches and pruning safety."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .baselines import (
    OracleConfig,
    build_baseline_index,
    greedy_baseline,
    oracle_query,
    valid_supersets,
)
from .check import CheckerTables, check_community, within_influence
from .datagen import GenConfig, gen_network
from .engine import answer_query
from .index import IndexConfig, build_index, deserialize_index, serialize_index
from .metrics import avg_dist_rn, social_hop_rows
from .netio import save_network
from .network import QuerySpec, QueryTopicVector, SpatialSocialNetwork
from . import pruning
from .pivots import PivotSearchConfig

SMALL_INDEX = IndexConfig(l=3, h=3, iota=3, fanout=2, pivot=PivotSearchConfig(global_iter=2, swap_iter=6, rng_seed=0))


@dataclass
class Case:
    seed: int
    net: SpatialSocialNetwork
    query: QuerySpec

    def dump(self) -> dict:
        qy = self.query
        return {
            "seed": self.seed,
            "query": {"q": qy.q, "k": qy.k, "d": qy.d, "sigma": qy.sigma, "theta": qy.theta,
                      "topics": list(qy.topics.weights), "keywords": sorted(qy.keywords)},
            "n_users": self.net.n_users,
            "n_road": self.net.road.n_vertices,
        }


def random_small_case(seed: int, max_users: int = 12, max_road: int = 40) -> Case:
    """A seeded network with at most ``max_users`` users and ``max_road`` road vertices, plus a query."""
    rng = np.random.default_rng(seed)
    n_road = int(rng.integers(4, max_road + 1))
    n_users = int(rng.integers(3, max_users + 1))
    cfg = GenConfig(
        n_road=n_road,
        n_users=n_users,
        distribution="uniform" if rng.random() < 0.7 else "gaussian",
        topic_count=2,
        keyword_universe=3,
        keywords_per_user=(1, 2),
        degree_range=(2, min(6, n_users - 1)) if n_users > 2 else (1, 1),
        extent=3.0,
        rng_seed=seed,
    )
    net = gen_network(cfg)
    q = int(rng.integers(n_users))
    own = sorted(net.social.users[q].keywords.ids)
    kws = set(rng.choice(np.arange(1, 4), size=int(rng.integers(1, 4)), replace=False).tolist())
    if rng.random() < 0.8:
        kws.add(int(own[0]))
    query = QuerySpec(
        q=q,
        topics=QueryTopicVector.normalized(rng.uniform(0.05, 1.0, 2)),
        keywords=frozenset(kws),
        k=int(rng.choice([2, 3, 3, 4])),
        d=int(rng.choice([1, 2, 3, 3, 4, 5])),
        sigma=float(rng.uniform(1.0, 6.0)),
        theta=float(rng.choice([0.0, 0.05, 0.1, 0.2, 0.3])),
    )
    return Case(seed, net, query)


@dataclass
class Report:
    counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def tally(self, name: str, ok: bool, detail: Optional[dict] = None) -> None:
        c = self.counts.setdefault(name, {"checked": 0, "failed": 0})
        c["checked"] += 1
        if not ok:
            c["failed"] += 1
            self.failures.append({"property": name, **(detail or {})})

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "Report") -> None:
        for k, v in other.counts.items():
            c = self.counts.setdefault(k, {"checked": 0, "failed": 0})
            c["checked"] += v["checked"]
            c["failed"] += v["failed"]
        self.failures.extend(other.failures)
        for k, v in other.notes.items():
            self.notes[k] = self.notes.get(k, 0) + v

    def to_json(self) -> dict:
        return {"passed": self.passed, "properties": self.counts, "failures": self.failures, "notes": self.notes}


def check_case(case: Case, baselines: bool = True) -> Report:
    """Run every property on one small instance."""
    rep = Report()
    net, qy = case.net, case.query
    tables = CheckerTables(net)
    idx = build_index(net, SMALL_INDEX)
    repro = case.dump()

    oracle = oracle_query(net, qy, OracleConfig(), tables)
    comm, stats = answer_query(net, idx, qy)
    if oracle.found:
        cert = check_community(net, qy, comm.members, tables)
        supers = valid_supersets(net, qy, comm.members, oracle.pool, tables) if cert.valid else []
        ok = cert.valid and comm.valid and not supers
    else:
        ok = not comm.valid
    rep.tally("oracle_equivalence", ok, {**repro, "engine": list(comm.members), "oracle": oracle.members})

    # bound sandwiches on every pair
    ctx = pruning.BoundsContext(net, idx, qy)
    m = net.n_users
    hops = social_hop_rows(net.social, range(m))
    sand_ok = True
    for u, v in combinations(range(m), 2):
        exact = avg_dist_rn(net, u, v)
        lo, hi = pruning.lb_avg_dist_rn(ctx, u, v), pruning.ub_avg_dist_rn(ctx, u, v)
        if not (lo <= exact + 1e-9 and exact <= hi + 1e-9):
            sand_ok = False
        st = ctx.social_table
        with np.errstate(invalid="ignore"):
            lo_h = np.nan_to_num(np.abs(st[u] - st[v]), nan=0.0, posinf=np.inf).max()
        hi_h = (st[u] + st[v]).min()
        if not (lo_h <= hops[u, v] <= hi_h):
            sand_ok = False
    rep.tally("bound_sandwich", sand_ok, repro)

    # influence upper bound versus exact scores
    exact_inf = within_influence(net, range(m), qy.topics.weights)
    inf_ok = all(pruning.ub_inf_score(ctx, u, v) + 1e-12 >= s for (u, v), s in exact_inf.items())
    rep.tally("influence_upper_bound", inf_ok, repro)

    # safety: no rule prunes a member of the oracle community
    if oracle.found:
        members = [u for u in oracle.members if u != qy.q]
        safe = all(pruning.user_prune(ctx, u) is None for u in members)
        pos = idx.position
        for node in range(idx.n_nodes):
            lo, hi = idx.arrays["node_lo"][node], idx.arrays["node_hi"][node]
            if any(lo <= pos[u] < hi for u in members) and pruning.node_prune(ctx, node).pruned:
                safe = False
        rep.tally("pruning_safety", safe, repro)

    if baselines:
        g, _ = greedy_baseline(net, qy)
        rep.tally("greedy_agreement", g.members == comm.members, repro)
        for kind in ("social", "spatial"):
            bidx = build_baseline_index(net, kind, SMALL_INDEX)
            b, _ = answer_query(net, bidx, qy)
            rep.tally(f"{kind}_index_agreement", b.members == comm.members, repro)

    literal, _ = answer_query(net, idx, qy, mode=pruning.PAPER_LITERAL)
    rep.notes["paper_literal_differs"] = int(literal.members != comm.members)
    return rep


def check_index(net: SpatialSocialNetwork, idx) -> Report:
    """Structural checks on a user-supplied network/index pair."""
    rep = Report()
    a = idx.arrays
    dom = True
    for node in range(idx.n_nodes):
        mem = idx.members(node)
        for arr_lo, arr_hi, table in (("node_road_lb", "node_road_ub", "road_table"),
                                      ("node_social_lb", "node_social_ub", "social_table")):
            vals = a[table][mem]
            if np.any(a[arr_lo][node] > vals) or np.any(vals > a[arr_hi][node]):
                dom = False
        if np.any(a["node_lb_phi"][node] > a["phi"][mem]):
            dom = False
        if np.any((a["user_words"][mem] & ~a["node_words"][node]) != 0):
            dom = False
        if np.any(a["user_inf_out"][mem] > a["node_inf_out"][node]) or np.any(a["user_inf_in"][mem] > a["node_inf_in"][node]):
            dom = False
    rep.tally("index_domination", dom)
    leaves = np.concatenate([idx.members(n) for n in idx.leaves()])
    rep.tally("leaves_partition_users", sorted(leaves.tolist()) == list(range(net.n_users)))
    rep.tally("serialization_roundtrip", deserialize_index(serialize_index(idx)) == idx)
    return rep


def thread_count() -> int:
    env = os.environ.get("SSTRUSS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_suite(trials: int, seed: int = 0, net=None, idx=None, baselines: bool = True,
              dump_dir: Optional[str] = None) -> Report:
    """Run ``trials`` random cases (in trial order) plus structural checks on ``net``/``idx`` if given."""
    report = Report()
    if net is not None and idx is not None:
        report.merge(check_index(net, idx))
    seeds = [seed * 100_003 + i for i in range(trials)]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        parts = list(pool.map(lambda s: (s, check_case(random_small_case(s), baselines)), seeds))
    for s, part in parts:
        if part.failures and dump_dir:
            save_network(random_small_case(s).net, os.path.join(dump_dir, f"case_{s}"))
        report.merge(part)
    return report
