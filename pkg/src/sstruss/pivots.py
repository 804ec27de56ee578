"""Pivot selection for road, social and index pivots.

Road and social pivots feed triangle-inequality bounds; index pivots seed the
leaf partition of the social-spatial index.  All three are chosen by the same
restart-plus-swap local search, each with its own cost function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PivotError
from .metrics import InfluenceGraph, RoadDistanceCache, compute_supports, social_hop_rows
from .network import QueryTopicVector, SpatialSocialNetwork

KINDS = ("road", "social", "index")
PROFILES = ("full", "social", "spatial")


@dataclass(frozen=True)
class PivotSet:
    kind: str
    pivots: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PivotError(f"unknown pivot kind {self.kind!r}")
        object.__setattr__(self, "pivots", tuple(int(p) for p in self.pivots))
        if len(self.pivots) < 1:
            raise PivotError("a pivot set needs at least one pivot")
        if len(set(self.pivots)) != len(self.pivots):
            raise PivotError("pivots must be distinct")

    @property
    def size(self) -> int:
        return len(self.pivots)

    def __iter__(self):
        return iter(self.pivots)


@dataclass(frozen=True, eq=False)
class PivotDistanceTables:
    """``road_table[u, k]`` = mean road distance from u's check-ins to road pivot k;
    ``social_table[u, k]`` = hop distance from u to social pivot k (``inf`` if unreachable)."""

    road_table: np.ndarray
    social_table: np.ndarray


@dataclass(frozen=True)
class PivotSearchConfig:
    global_iter: int = 5
    swap_iter: int = 50
    weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    sample_pairs: int = 2000
    chi_sample_users: int = 200
    rng_seed: int = 0
    paper_literal: bool = False

    def __post_init__(self):
        if self.global_iter < 1:
            raise PivotError("global_iter must be >= 1")
        if self.swap_iter < 0:
            raise PivotError("swap_iter must be >= 0")
        if len(self.weights) != 3 or any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1) > 1e-9:
            raise PivotError("weights must be three non-negative reals summing to 1")


# ---------------------------------------------------------------------------
# distance columns


class _Columns:
    """Per-pivot distance columns over all users, computed on demand and memoised."""

    def __init__(self, net: SpatialSocialNetwork, cache: RoadDistanceCache | None = None):
        self.net = net
        self.cache = cache or RoadDistanceCache(net.road)
        self._road_vertex = {}
        self._user_avg = {}
        self._user_hops = {}

    def road_vertex(self, p: int) -> np.ndarray:
        """Mean road distance from every user's check-ins to road vertex ``p``."""
        col = self._road_vertex.get(p)
        if col is None:
            col = self.net.per_user_mean(self.cache.rows([p])[0])
            self._road_vertex[p] = col
        return col

    def user_avg(self, p: int) -> np.ndarray:
        """``avg_dist_rn(v, p)`` for every user ``v`` and pivot user ``p``."""
        col = self._user_avg.get(p)
        if col is None:
            col = self.net.per_user_mean(self.cache.profile(self.net, p))
            self._user_avg[p] = col
        return col

    def user_hops(self, p: int) -> np.ndarray:
        col = self._user_hops.get(p)
        if col is None:
            self._prefetch_hops([p])
            col = self._user_hops[p]
        return col

    def _prefetch_hops(self, users):
        users = [u for u in users if u not in self._user_hops]
        if users:
            for u, row in zip(users, social_hop_rows(self.net.social, users)):
                self._user_hops[u] = row


def road_pivot_table(net: SpatialSocialNetwork, pivots, cache: RoadDistanceCache | None = None) -> np.ndarray:
    cols = _Columns(net, cache)
    return np.column_stack([cols.road_vertex(p) for p in pivots]) if len(pivots) else np.zeros((net.n_users, 0))


def social_pivot_table(net: SpatialSocialNetwork, pivots) -> np.ndarray:
    pivots = list(pivots)
    if not pivots:
        return np.zeros((net.n_users, 0))
    return social_hop_rows(net.social, pivots).T.copy()


def pivot_tables(net, road: PivotSet, social: PivotSet, cache=None) -> PivotDistanceTables:
    return PivotDistanceTables(road_pivot_table(net, road.pivots, cache), social_pivot_table(net, social.pivots))


# ---------------------------------------------------------------------------
# cost models for road / social pivots


def sample_pairs(n_users: int, budget: int, rng) -> np.ndarray:
    """Distinct unordered user pairs: all of them if they fit in ``budget``, else a sample."""
    total = n_users * (n_users - 1) // 2
    if total == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if total <= budget:
        iu = np.triu_indices(n_users, k=1)
        return np.column_stack(iu).astype(np.int64)
    u = rng.integers(0, n_users, size=budget * 2)
    v = rng.integers(0, n_users, size=budget * 2)
    keep = u != v
    pairs = np.column_stack([u[keep], v[keep]])[:budget]
    return pairs.astype(np.int64)


def cap_unreachable(table: np.ndarray) -> np.ndarray:
    """Replace ``inf`` hop entries by (largest finite entry + 1)."""
    finite = table[np.isfinite(table)]
    cap = (finite.max() if finite.size else 0.0) + 1.0
    return np.where(np.isfinite(table), table, cap)


def _pair_spread(table: np.ndarray, pairs: np.ndarray) -> float:
    if len(pairs) == 0 or table.shape[1] == 0:
        return 0.0
    diff = np.abs(table[pairs[:, 0]] - table[pairs[:, 1]])
    return float(diff.max(axis=1).sum())


def cost_road_pivots(net: SpatialSocialNetwork, candidate: PivotSet, pairs, table: np.ndarray | None = None) -> float:
    """Sum over pairs of the best pivot lower bound ``max_k |A_k(u) - A_k(v)|``."""
    if candidate.kind != "road":
        raise PivotError("cost_road_pivots needs a road pivot set")
    if table is None:
        table = road_pivot_table(net, candidate.pivots)
    return _pair_spread(table, np.asarray(pairs, dtype=np.int64).reshape(-1, 2))


def cost_social_pivots(net: SpatialSocialNetwork, candidate: PivotSet, pairs, table: np.ndarray | None = None) -> float:
    """Sum over pairs of ``max_k |hops(u, p_k) - hops(v, p_k)|`` with unreachable entries capped."""
    if candidate.kind != "social":
        raise PivotError("cost_social_pivots needs a social pivot set")
    if table is None:
        table = social_pivot_table(net, candidate.pivots)
    return _pair_spread(cap_unreachable(table), np.asarray(pairs, dtype=np.int64).reshape(-1, 2))


# ---------------------------------------------------------------------------
# index pivots: partition quality


def quality(avg_dist: float, hops: float, max_avg_dist: float, max_hops: float) -> float:
    """Normalised spatial plus social distance of a user to an index pivot (0 is best)."""
    return avg_dist / max_avg_dist + hops / max_hops


def _jaccard_distance(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 0.0
    return 1.0 - len(a & b) / len(a | b)


def _raw_column(cols: _Columns, p: int, profile: str) -> tuple:
    """Unnormalised (road, hops, keyword) distance columns from every user to pivot ``p``."""
    net = cols.net
    road = cols.user_avg(p) if profile in ("full", "spatial") else None
    hops = cols.user_hops(p) if profile in ("full", "social") else None
    kw = None
    if profile == "spatial":
        users = net.social.users
        ref = users[p].keywords.ids
        kw = np.array([_jaccard_distance(u.keywords.ids, ref) for u in users])
    return road, hops, kw


class _RawQuality:
    """Per-pivot raw columns stacked into matrices; supports cheap single-column swaps."""

    def __init__(self, cols: _Columns, pivots, profile: str):
        self.cols = cols
        self.profile = profile
        self.pivots = list(pivots)
        cols._prefetch_hops(self.pivots) if profile in ("full", "social") else None
        raw = [_raw_column(cols, p, profile) for p in self.pivots]
        self.mats = [None if raw[0][j] is None else np.column_stack([r[j] for r in raw]) for j in range(3)]

    def swapped(self, slot: int, new: int) -> "_RawQuality":
        out = object.__new__(_RawQuality)
        out.cols, out.profile = self.cols, self.profile
        out.pivots = list(self.pivots)
        out.pivots[slot] = new
        col = _raw_column(self.cols, new, self.profile)
        out.mats = []
        for j, mat in enumerate(self.mats):
            if mat is None:
                out.mats.append(None)
                continue
            mat = mat.copy()
            mat[:, slot] = col[j]
            out.mats.append(mat)
        return out

    def quality(self) -> np.ndarray:
        road, hops, kw = self.mats
        parts = []
        if road is not None:
            mx = road.max()
            parts.append(road / mx if mx > 0 else road)
        if hops is not None:
            hops = cap_unreachable(hops)
            mx = hops.max()
            parts.append(hops / mx if mx > 0 else hops)
        if kw is not None:
            parts.append(kw)
        q = parts[0].copy()
        for extra in parts[1:]:
            q += extra
        q[np.asarray(self.pivots), np.arange(len(self.pivots))] = 0.0
        return q

    def labels(self) -> np.ndarray:
        if len(self.pivots) == 1:
            return np.zeros(self.cols.net.n_users, dtype=np.int64)
        # argmin returns the first minimum, i.e. the lowest pivot index on ties
        return np.argmin(self.quality(), axis=1)


def _quality_matrix(cols: _Columns, pivots, profile: str) -> np.ndarray:
    return _RawQuality(cols, pivots, profile).quality()


def _assign(net, pivots, profile, cols) -> np.ndarray:
    return _RawQuality(cols, pivots, profile).labels()


@dataclass(frozen=True)
class QualitySample:
    """Pairwise metric matrices over a fixed user sample, reused across partitions."""

    users: np.ndarray
    spatial: np.ndarray
    structural: np.ndarray
    influence: np.ndarray

    def raw(self, labels: np.ndarray) -> tuple:
        lab = labels[self.users]
        same = lab[:, None] == lab[None, :]
        np.fill_diagonal(same, False)
        return (float(self.spatial[same].sum()), float(self.structural[same].sum()),
                float(self.influence[same].sum()))

    @property
    def totals(self) -> tuple:
        off = ~np.eye(len(self.users), dtype=bool)
        return (float(self.spatial[off].sum()), float(self.structural[off].sum()),
                float(self.influence[off].sum()))


def build_quality_sample(net: SpatialSocialNetwork, users, cache: RoadDistanceCache | None = None,
                         phi: np.ndarray | None = None, topics=None) -> QualitySample:
    users = np.asarray(sorted(set(int(u) for u in users)), dtype=np.int64)
    cache = cache or RoadDistanceCache(net.road)
    n = len(users)
    spatial = np.zeros((n, n))
    for i, u in enumerate(users):
        prof = cache.profile(net, int(u))
        spatial[i] = net.per_user_mean(prof)[users]
    hops = social_hop_rows(net.social, users)[:, users] if n else np.zeros((0, 0))
    if phi is None:
        phi = compute_supports(net.social).phi
    ph = phi[users].astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        structural = (ph[:, None] + ph[None, :]) / hops
    structural[~np.isfinite(hops) | (hops == 0)] = 0.0
    if topics is None:
        t = net.social.topic_count
        topics = QueryTopicVector(tuple([1.0 / t] * t))
    ig = InfluenceGraph(net.social, topics)
    influence = np.zeros((n, n))
    for i, u in enumerate(users):
        influence[i] = ig.from_source(int(u))[users]
    np.fill_diagonal(influence, 0.0)
    return QualitySample(users, spatial, structural, influence)


def subgraph_quality_measures(net: SpatialSocialNetwork, partition, sample: QualitySample | None = None) -> tuple:
    """Raw ``(chi_sc, chi_st, chi_inf)`` summed over ordered intra-group pairs ``u != v``.

    Without ``sample`` every user takes part (exact, quadratic).
    """
    labels = _labels_from_partition(net.n_users, partition)
    if sample is None:
        sample = build_quality_sample(net, range(net.n_users))
    return sample.raw(labels)


def normalize_measures(raw: tuple, totals: tuple) -> tuple:
    """Scale each raw measure by its value on the single-group partition, giving [0, 1]."""
    return tuple((r / t) if t > 0 else 0.0 for r, t in zip(raw, totals))


def cost_index_pivots(chi: tuple, weights=(1 / 3, 1 / 3, 1 / 3)) -> float:
    """Weighted partition cost on normalised measures; lower is better."""
    sc, st, inf = chi
    w1, w2, w3 = weights
    return w1 * sc + w2 * (1.0 - st) + w3 * (1.0 - inf)


def _labels_from_partition(n: int, partition) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    for g, members in enumerate(partition):
        for u in members:
            labels[u] = g
    if np.any(labels < 0):
        raise PivotError("partition does not cover every user")
    return labels


# ---------------------------------------------------------------------------
# local search


@dataclass
class SearchResult:
    pivots: PivotSet
    cost: float
    history: list = field(default_factory=list)


class PivotSearch:
    """Shared state (caches, samples) for the three pivot searches of one index build."""

    def __init__(self, net: SpatialSocialNetwork, config: PivotSearchConfig = PivotSearchConfig(),
                 cache: RoadDistanceCache | None = None, profile: str = "full", phi=None):
        if profile not in PROFILES:
            raise PivotError(f"unknown profile {profile!r}")
        self.net = net
        self.config = config
        self.profile = profile
        self.cols = _Columns(net, cache)
        self.rng = np.random.default_rng(config.rng_seed)
        self.pairs = sample_pairs(net.n_users, config.sample_pairs, self.rng)
        self._phi = phi
        self._qsample = None
        self._states = []

    @property
    def quality_sample(self) -> QualitySample:
        if self._qsample is None:
            m = self.net.n_users
            k = min(m, self.config.chi_sample_users)
            users = np.arange(m) if k == m else self.rng.choice(m, size=k, replace=False)
            self._qsample = build_quality_sample(self.net, users, self.cols.cache, self._phi)
        return self._qsample

    # cost functions: all return (value, maximize?)
    def _road_cost(self, pivots) -> float:
        table = np.column_stack([self.cols.road_vertex(p) for p in pivots])
        return _pair_spread(table, self.pairs)

    def _social_cost(self, pivots) -> float:
        self.cols._prefetch_hops(pivots)
        table = np.column_stack([self.cols.user_hops(p) for p in pivots])
        return _pair_spread(cap_unreachable(table), self.pairs)

    def index_weights(self) -> tuple:
        if self.profile == "social":
            return (0.0, 1.0, 0.0)
        if self.profile == "spatial":
            return (1.0, 0.0, 0.0)
        return self.config.weights

    def _raw_state(self, pivots) -> _RawQuality:
        key = list(pivots)
        for state in self._states:
            diff = [i for i, (a, b) in enumerate(zip(state.pivots, key)) if a != b]
            if len(state.pivots) == len(key) and len(diff) <= 1:
                new = state if not diff else state.swapped(diff[0], key[diff[0]])
                break
        else:
            new = _RawQuality(self.cols, key, self.profile)
        self._states = [new] + [st for st in self._states if st is not new][:2]
        return new

    def _index_cost(self, pivots) -> float:
        labels = self._raw_state(pivots).labels()
        qs = self.quality_sample
        chi = normalize_measures(qs.raw(labels), qs.totals)
        return cost_index_pivots(chi, self.index_weights())

    def cost(self, kind: str, pivots) -> float:
        if kind == "road":
            return self._road_cost(pivots)
        if kind == "social":
            return self._social_cost(pivots)
        return self._index_cost(pivots)

    def maximize(self, kind: str) -> bool:
        if kind == "road":
            return not self.config.paper_literal
        return kind == "social"

    def select(self, kind: str, size: int) -> SearchResult:
        if kind not in KINDS:
            raise PivotError(f"unknown pivot kind {kind!r}")
        population = self.net.road.n_vertices if kind == "road" else self.net.n_users
        if size < 1:
            raise PivotError("pivot set size must be >= 1")
        if size > population:
            raise PivotError(f"cannot pick {size} {kind} pivots from {population} candidates")
        maximize = self.maximize(kind)

        def better(a, b):
            return a > b if maximize else a < b

        if size == population:
            full = tuple(range(population))
            return SearchResult(PivotSet(kind, full), self.cost(kind, full))

        rng = self.rng
        best = None
        history = []
        cfg = self.config
        for _ in range(cfg.global_iter):
            current = [int(x) for x in rng.choice(population, size=size, replace=False)]
            local = self.cost(kind, current)
            start = local
            for _ in range(cfg.swap_iter):
                slot = int(rng.integers(size))
                chosen = set(current)
                new = int(rng.integers(population))
                while new in chosen:
                    new = int(rng.integers(population))
                trial = list(current)
                trial[slot] = new
                c = self.cost(kind, trial)
                if better(c, local):
                    current, local = trial, c
            history.append((start, local))
            if best is None or better(local, best[1]):
                best = (tuple(current), local)
        return SearchResult(PivotSet(kind, best[0]), best[1], history)


def select_pivots(net: SpatialSocialNetwork, kind: str, size: int,
                  config: PivotSearchConfig = PivotSearchConfig(), profile: str = "full") -> PivotSet:
    """Restart-plus-swap local search for ``size`` pivots of the given kind."""
    return PivotSearch(net, config, profile=profile).select(kind, size).pivots
