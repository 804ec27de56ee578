"""Bounds and pruning predicates for users and index nodes.

Two modes are supported.  ``sound`` never discards a user that can belong to a
valid community.  ``paper-literal`` prunes on upper bounds and checks node support against
``k``; it can lose answers and exists only for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .check import INFLUENCE_EPS
from .errors import QueryError
from .index import SocialSpatialIndex, query_words
from .metrics import edge_scores
from .network import QuerySpec, SpatialSocialNetwork, keyword_overlap

SOUND = "sound"
PAPER_LITERAL = "paper-literal"
MODES = (SOUND, PAPER_LITERAL)

RULES = frozenset({"keyword", "support", "social", "spatial", "influence"})
PROFILE_RULES = {
    "full": RULES,
    "social": frozenset({"support", "social"}),
    "spatial": frozenset({"keyword", "spatial"}),
}

PRUNE = "prune"
KEEP = "keep"
ACCEPT_FAST = "accept-fast"


@dataclass(frozen=True)
class PruneDecision:
    verdict: str
    rule: str
    mode: str = SOUND

    @property
    def pruned(self) -> bool:
        return self.verdict == PRUNE


def _interval_gap(value, lo, hi) -> np.ndarray:
    """Distance from ``value`` to ``[lo, hi]`` per pivot; ``inf - inf`` counts as 0."""
    with np.errstate(invalid="ignore"):
        gap = np.fmax(np.fmax(lo - value, value - hi), 0.0)
    return np.nan_to_num(gap, nan=0.0, posinf=np.inf)


def _abs_diff(a, b) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        d = np.abs(a - b)
    return np.nan_to_num(d, nan=0.0, posinf=np.inf)


class BoundsContext:
    """Query-specific folds of the index data used by every rule."""

    def __init__(self, net: SpatialSocialNetwork, idx: SocialSpatialIndex, query: QuerySpec,
                 mode: str = SOUND):
        if mode not in MODES:
            raise QueryError(f"unknown prune mode {mode!r}")
        query.validate(net)
        if idx.n_users != net.n_users:
            raise QueryError("index and network disagree on the number of users")
        self.net = net
        self.idx = idx
        self.query = query
        self.mode = mode
        t = query.topics.array
        self.ub_out = idx.arrays["user_inf_out"] @ t
        self.ub_in = idx.arrays["user_inf_in"] @ t
        self.road_table = idx.arrays["road_table"]
        self.social_table = idx.arrays["social_table"]
        q = query.q
        self.road_q = self.road_table[q]
        self.social_q = self.social_table[q]
        self.kw_words = query_words(query.keywords, idx.keyword_width)
        social = net.social
        scores = edge_scores(social, query.topics)
        # direct edge scores between q and its neighbours
        self.f_from_q = {int(social.dst[i]): float(scores[i]) for i in social.out_edges[q]}
        self.f_to_q = {int(social.src[i]): float(scores[i]) for i in social.in_edges[q]}
        self._scores = scores

    @property
    def sound(self) -> bool:
        return self.mode == SOUND

    def f(self, u: int, v: int) -> float:
        i = self.net.social.edge_index.get((u, v))
        return 0.0 if i is None else float(self._scores[i])

    @cached_property
    def q_neighbour_positions(self) -> tuple:
        """Leaf-order positions of q's out- and in-neighbours with their scores, sorted by position."""
        pos = self.idx.position

        def arr(d):
            items = sorted((int(pos[w]), s) for w, s in d.items())
            return (np.array([p for p, _ in items], dtype=np.int64), np.array([s for _, s in items]))

        return arr(self.f_from_q), arr(self.f_to_q)


# ---------------------------------------------------------------------------
# spatial


def ub_avg_dist_rn(ctx: BoundsContext, u: int, v: int) -> float:
    """``min_k (A_k(u) + A_k(v))``; never below the exact mean road distance."""
    return float(np.min(ctx.road_table[u] + ctx.road_table[v]))


def lb_avg_dist_rn(ctx: BoundsContext, u: int, v: int) -> float:
    """``max_k |A_k(u) - A_k(v)|``; never above the exact mean road distance."""
    return float(np.max(np.abs(ctx.road_table[u] - ctx.road_table[v])))


def spatial_prune_user(ctx: BoundsContext, u: int) -> PruneDecision:
    q, sigma = ctx.query.q, ctx.query.sigma
    if ctx.sound:
        if lb_avg_dist_rn(ctx, q, u) >= sigma:
            return PruneDecision(PRUNE, "spatial", ctx.mode)
        if ub_avg_dist_rn(ctx, q, u) < sigma:
            return PruneDecision(ACCEPT_FAST, "spatial", ctx.mode)
        return PruneDecision(KEEP, "spatial", ctx.mode)
    if u != q and ub_avg_dist_rn(ctx, q, u) > sigma:
        return PruneDecision(PRUNE, "spatial", ctx.mode)
    return PruneDecision(KEEP, "spatial", ctx.mode)


# ---------------------------------------------------------------------------
# influence


def ub_inf_fold(net: SpatialSocialNetwork, u: int, topics) -> tuple:
    """``(ub_out, ub_in)``: per-topic maxima over u's out/in edges folded with the query topics."""
    social = net.social
    t = topics.array if hasattr(topics, "array") else np.asarray(topics, dtype=np.float64)
    outs, ins = social.out_edges[u], social.in_edges[u]
    w = social.weights
    ub_out = float(w[outs].max(axis=0) @ t) if outs else 0.0
    ub_in = float(w[ins].max(axis=0) @ t) if ins else 0.0
    return ub_out, ub_in


def ub_inf_score(ctx: BoundsContext, u: int, v: int) -> float:
    """Upper bound on the influence of ``u`` over ``v`` along any path."""
    if u == v:
        raise QueryError("ub_inf_score requires u != v")
    return max(ctx.f(u, v), float(ctx.ub_out[u] * ctx.ub_in[v]))


def influence_prune_user(ctx: BoundsContext, u: int) -> PruneDecision:
    q, theta = ctx.query.q, ctx.query.theta - INFLUENCE_EPS
    if u != q and (ub_inf_score(ctx, q, u) < theta or ub_inf_score(ctx, u, q) < theta):
        return PruneDecision(PRUNE, "influence", ctx.mode)
    return PruneDecision(KEEP, "influence", ctx.mode)


# ---------------------------------------------------------------------------
# support, social distance, keywords


def support_prune_user(phi, u: int, k: int, mode: str = SOUND) -> PruneDecision:
    """``phi`` is the per-user maximum edge support (array or ``EdgeSupportMap``)."""
    phis = phi.phi if hasattr(phi, "phi") else phi
    if phis[u] < k - 2:
        return PruneDecision(PRUNE, "support", mode)
    return PruneDecision(KEEP, "support", mode)


def lb_dist_sn(ctx: BoundsContext, u: int) -> float:
    return float(np.max(_abs_diff(ctx.social_q, ctx.social_table[u])))


def ub_dist_sn(ctx: BoundsContext, u: int) -> float:
    return float(np.min(ctx.social_q + ctx.social_table[u]))


def social_prune_user(ctx: BoundsContext, u: int) -> PruneDecision:
    d = ctx.query.d
    if ctx.sound:
        if lb_dist_sn(ctx, u) >= d:
            return PruneDecision(PRUNE, "social", ctx.mode)
        if ub_dist_sn(ctx, u) < d:
            return PruneDecision(ACCEPT_FAST, "social", ctx.mode)
        return PruneDecision(KEEP, "social", ctx.mode)
    if u != ctx.query.q and ub_dist_sn(ctx, u) >= d:
        return PruneDecision(PRUNE, "social", ctx.mode)
    return PruneDecision(KEEP, "social", ctx.mode)


def keyword_prune_user(user, query: QuerySpec, mode: str = SOUND) -> PruneDecision:
    if keyword_overlap(user.keywords, query.keywords):
        return PruneDecision(KEEP, "keyword", mode)
    return PruneDecision(PRUNE, "keyword", mode)


def user_prune(ctx: BoundsContext, u: int, rules=RULES) -> Optional[PruneDecision]:
    """First pruning decision among ``rules`` that fires for ``u``, or ``None``."""
    checks = (
        ("keyword", lambda: keyword_prune_user(ctx.net.social.users[u], ctx.query, ctx.mode)),
        ("support", lambda: support_prune_user(ctx.idx.arrays["phi"], u, ctx.query.k, ctx.mode)),
        ("social", lambda: social_prune_user(ctx, u)),
        ("spatial", lambda: spatial_prune_user(ctx, u)),
        ("influence", lambda: influence_prune_user(ctx, u)),
    )
    for name, check in checks:
        if name not in rules:
            continue
        dec = check()
        if dec.pruned:
            return dec
    return None


# ---------------------------------------------------------------------------
# index nodes


def node_spatial_lb(ctx: BoundsContext, node: int) -> float:
    a = ctx.idx.arrays
    return float(np.max(_interval_gap(ctx.road_q, a["node_road_lb"][node], a["node_road_ub"][node]), initial=0.0))


def node_social_lb(ctx: BoundsContext, node: int) -> float:
    a = ctx.idx.arrays
    return float(np.max(_interval_gap(ctx.social_q, a["node_social_lb"][node], a["node_social_ub"][node]), initial=0.0))


def _direct_max(positions: np.ndarray, scores: np.ndarray, lo: int, hi: int) -> float:
    i, j = np.searchsorted(positions, [lo, hi])
    return float(scores[i:j].max()) if j > i else 0.0


def node_influence_bounds(ctx: BoundsContext, node: int) -> tuple:
    """Upper bounds on influence ``q -> x`` and ``x -> q`` for any member ``x`` of ``node``."""
    a = ctx.idx.arrays
    t = ctx.query.topics.array
    q = ctx.query.q
    node_in = float(a["node_inf_in"][node] @ t)
    node_out = float(a["node_inf_out"][node] @ t)
    to_node = float(ctx.ub_out[q] * node_in)
    from_node = float(node_out * ctx.ub_in[q])
    if ctx.sound:
        (pos_o, s_o), (pos_i, s_i) = ctx.q_neighbour_positions
        lo, hi = int(a["node_lo"][node]), int(a["node_hi"][node])
        to_node = max(to_node, _direct_max(pos_o, s_o, lo, hi))
        from_node = max(from_node, _direct_max(pos_i, s_i, lo, hi))
    return to_node, from_node


def node_prune(ctx: BoundsContext, node: int, rules=RULES) -> PruneDecision:
    """Decide whether a whole subtree can be skipped for this query."""
    a = ctx.idx.arrays
    qy = ctx.query
    mode = ctx.mode
    if "keyword" in rules and not np.any(a["node_words"][node] & ctx.kw_words):
        return PruneDecision(PRUNE, "node-keyword", mode)
    # sound: every member is below k-2; literal: the weakest member is below k
    if ctx.sound:
        support_pruned = a["node_ub_phi"][node] < qy.k - 2
    else:
        support_pruned = a["node_lb_phi"][node] < qy.k
    if "support" in rules and support_pruned:
        return PruneDecision(PRUNE, "node-support", mode)
    lb_sp = node_spatial_lb(ctx, node)
    if "spatial" in rules and ((lb_sp >= qy.sigma) if ctx.sound else (lb_sp > qy.sigma)):
        return PruneDecision(PRUNE, "node-spatial", mode)
    lb_so = node_social_lb(ctx, node)
    if "social" in rules and ((lb_so >= qy.d) if ctx.sound else (lb_so > qy.d)):
        return PruneDecision(PRUNE, "node-social", mode)
    if "influence" not in rules:
        return PruneDecision(KEEP, "node", mode)
    to_node, from_node = node_influence_bounds(ctx, node)
    theta = qy.theta - INFLUENCE_EPS
    if to_node < theta or from_node < theta:
        return PruneDecision(PRUNE, "node-influence", mode)
    return PruneDecision(KEEP, "node", mode)
