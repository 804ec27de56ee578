"""Hierarchical social-spatial index over users, and its binary file format.

The tree is stored as flat numpy arrays (one row per node).  Users are laid
out in leaf order, so every node covers a contiguous range ``[lo, hi)`` of
``index.order``; membership tests reduce to a position comparison.
"""
from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BadMagicError,
    IndexBuildError,
    TopicLengthError,
    TruncatedIndexError,
    VersionMismatchError,
)
from .metrics import RoadDistanceCache, compute_supports
from .network import QueryTopicVector, SpatialSocialNetwork, keyword_position
from .pivots import (
    PivotSearch,
    PivotSearchConfig,
    PivotSet,
    _assign,
    road_pivot_table,
    social_pivot_table,
)

MAGIC = b"SSIX"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class IndexConfig:
    l: Optional[int] = None
    h: Optional[int] = None
    iota: Optional[int] = None
    fanout: int = 8
    pivot: PivotSearchConfig = field(default_factory=PivotSearchConfig)
    profile: str = "full"

    def resolved(self, n_users: int, n_road: int) -> "IndexConfig":
        l = self.l if self.l is not None else min(8, n_road)
        h = self.h if self.h is not None else min(8, n_users)
        iota = self.iota if self.iota is not None else min(n_users, max(4, math.ceil(n_users / 64)))
        for name, v in (("l", l), ("h", h), ("iota", iota)):
            if v < 1:
                raise IndexBuildError(f"{name} must be >= 1")
        if self.fanout < 2:
            raise IndexBuildError("fanout must be >= 2")
        return IndexConfig(l, h, iota, self.fanout, self.pivot, self.profile)


# ---------------------------------------------------------------------------
# keyword words


def keyword_words(bits: int, width: int) -> np.ndarray:
    """Split a ``width``-bit integer into little-endian uint64 words."""
    n = max(1, width // 64)
    mask = (1 << 64) - 1
    return np.array([(bits >> (64 * i)) & mask for i in range(n)], dtype=np.uint64)


def query_words(keywords, width: int) -> np.ndarray:
    bits = 0
    for k in keywords:
        bits |= 1 << keyword_position(k, width)
    return keyword_words(bits, width)


# ---------------------------------------------------------------------------
# the index


@dataclass(frozen=True)
class LeafEntry:
    user: int
    keyword_bits: np.ndarray
    phi: int
    inf_out: np.ndarray
    inf_in: np.ndarray
    road_pivot_dists: np.ndarray
    social_pivot_dists: np.ndarray


@dataclass(frozen=True)
class IndexNode:
    id: int
    is_leaf: bool
    children: tuple
    users: tuple
    mbr: np.ndarray
    keyword_bits: np.ndarray
    lb_phi: int
    ub_phi: int
    inf_out: np.ndarray
    inf_in: np.ndarray
    road_bounds: np.ndarray
    social_bounds: np.ndarray


@dataclass(frozen=True)
class NodeTopicBound:
    ub_out: float
    ub_in: float


# array fields in serialisation order
_USER_FIELDS = ("order", "user_words", "phi", "user_inf_out", "user_inf_in", "road_table", "social_table")
_NODE_FIELDS = ("node_leaf", "node_lo", "node_hi", "child_ptr", "child_ids", "node_mbr", "node_words",
                "node_lb_phi", "node_ub_phi", "node_inf_out", "node_inf_in", "node_road_lb", "node_road_ub",
                "node_social_lb", "node_social_ub")


@dataclass(eq=False)
class SocialSpatialIndex:
    meta: dict
    arrays: dict

    # -- convenience accessors -------------------------------------------
    def __getattr__(self, name):
        arrays = self.__dict__.get("arrays")
        if arrays is not None and name in arrays:
            return arrays[name]
        raise AttributeError(name)

    @property
    def root(self) -> int:
        return int(self.meta["root"])

    @property
    def n_nodes(self) -> int:
        return len(self.arrays["node_leaf"])

    @property
    def n_users(self) -> int:
        return int(self.meta["n_users"])

    @property
    def fanout(self) -> int:
        return int(self.meta["fanout"])

    @property
    def profile(self) -> str:
        return self.meta["profile"]

    @property
    def keyword_width(self) -> int:
        return int(self.meta["keyword_width"])

    @property
    def road_pivots(self) -> PivotSet:
        return PivotSet("road", self.meta["road_pivots"])

    @property
    def social_pivots(self) -> PivotSet:
        return PivotSet("social", self.meta["social_pivots"])

    @property
    def index_pivots(self) -> PivotSet:
        return PivotSet("index", self.meta["index_pivots"])

    @property
    def position(self) -> np.ndarray:
        pos = self.__dict__.get("_position")
        if pos is None:
            pos = np.empty(self.n_users, dtype=np.int64)
            pos[self.arrays["order"]] = np.arange(self.n_users)
            self.__dict__["_position"] = pos
        return pos

    def children(self, node: int) -> np.ndarray:
        ptr = self.arrays["child_ptr"]
        return self.arrays["child_ids"][ptr[node]:ptr[node + 1]]

    def members(self, node: int) -> np.ndarray:
        lo, hi = self.arrays["node_lo"][node], self.arrays["node_hi"][node]
        return self.arrays["order"][lo:hi]

    def is_leaf(self, node: int) -> bool:
        return bool(self.arrays["node_leaf"][node])

    def leaves(self) -> list:
        return [i for i in range(self.n_nodes) if self.is_leaf(i)]

    def leaf_entry(self, u: int) -> LeafEntry:
        a = self.arrays
        return LeafEntry(int(u), a["user_words"][u], int(a["phi"][u]), a["user_inf_out"][u],
                         a["user_inf_in"][u], a["road_table"][u], a["social_table"][u])

    def node(self, i: int) -> IndexNode:
        a = self.arrays
        leaf = self.is_leaf(i)
        return IndexNode(
            id=i,
            is_leaf=leaf,
            children=tuple(int(c) for c in self.children(i)),
            users=tuple(int(u) for u in self.members(i)) if leaf else (),
            mbr=a["node_mbr"][i],
            keyword_bits=a["node_words"][i],
            lb_phi=int(a["node_lb_phi"][i]),
            ub_phi=int(a["node_ub_phi"][i]),
            inf_out=a["node_inf_out"][i],
            inf_in=a["node_inf_in"][i],
            road_bounds=np.column_stack([a["node_road_lb"][i], a["node_road_ub"][i]]),
            social_bounds=np.column_stack([a["node_social_lb"][i], a["node_social_ub"][i]]),
        )

    def height(self) -> int:
        def depth(n):
            ch = self.children(n)
            return 1 + (max(depth(int(c)) for c in ch) if len(ch) else 0)

        return depth(self.root)

    def parents(self) -> np.ndarray:
        par = np.full(self.n_nodes, -1, dtype=np.int64)
        for n in range(self.n_nodes):
            for c in self.children(n):
                par[c] = n
        return par

    def __eq__(self, other):
        if not isinstance(other, SocialSpatialIndex):
            return NotImplemented
        if self.meta != other.meta or set(self.arrays) != set(other.arrays):
            return False
        return all(
            self.arrays[k].dtype == other.arrays[k].dtype and np.array_equal(self.arrays[k], other.arrays[k])
            for k in self.arrays
        )

    __hash__ = None


def node_bounds_for_query(idx: SocialSpatialIndex, node: int, topics: QueryTopicVector) -> NodeTopicBound:
    """Fold a node's per-topic influence maxima against the query topics."""
    t = topics.array
    if len(t) != idx.arrays["node_inf_out"].shape[1]:
        raise TopicLengthError("topic vector length does not match the index")
    return NodeTopicBound(float(idx.arrays["node_inf_out"][node] @ t), float(idx.arrays["node_inf_in"][node] @ t))


# ---------------------------------------------------------------------------
# building


def _user_influence_maxima(net: SpatialSocialNetwork) -> tuple:
    social = net.social
    m, t = social.n_users, social.topic_count
    out = np.zeros((m, t))
    inn = np.zeros((m, t))
    if social.edges:
        w = social.weights
        np.maximum.at(out, social.src, w)
        np.maximum.at(inn, social.dst, w)
    return out, inn


def _group_nodes(centroids: np.ndarray, ids: list, fanout: int) -> list:
    """Greedy nearest-centroid grouping into groups of at most ``fanout``.

    Seeds are taken in order of ``x + y`` of the centroid (ties by id); each seed
    absorbs its nearest ungrouped neighbours.
    """
    remaining = list(range(len(ids)))
    remaining.sort(key=lambda i: (centroids[i, 0] + centroids[i, 1], ids[i]))
    taken = np.zeros(len(ids), dtype=bool)
    groups = []
    for seed in remaining:
        if taken[seed]:
            continue
        taken[seed] = True
        free = np.flatnonzero(~taken)
        group = [seed]
        if len(free):
            d = np.hypot(*(centroids[free] - centroids[seed]).T)
            order = np.lexsort((np.asarray(ids)[free], d))
            pick = free[order[: fanout - 1]]
            taken[pick] = True
            group.extend(int(p) for p in pick)
        groups.append([ids[g] for g in group])
    return groups


def build_index(net: SpatialSocialNetwork, config: IndexConfig = IndexConfig(),
                cache: Optional[RoadDistanceCache] = None) -> SocialSpatialIndex:
    """Select pivots, partition users into leaves, and group leaves into a tree."""
    m = net.n_users
    if m == 0:
        raise IndexBuildError("cannot index an empty network")
    cfg = config.resolved(m, net.road.n_vertices)
    cache = cache or RoadDistanceCache(net.road)
    supports = compute_supports(net.social)
    search = PivotSearch(net, cfg.pivot, cache, profile=cfg.profile, phi=supports.phi)
    road = search.select("road", min(cfg.l, net.road.n_vertices))
    social = search.select("social", min(cfg.h, m))
    index = search.select("index", min(cfg.iota, m))

    labels = _assign(net, index.pivots.pivots, cfg.profile, search.cols)
    groups = [np.flatnonzero(labels == i) for i in range(index.pivots.size)]
    groups = [g for g in groups if len(g)]

    road_table = road_pivot_table(net, road.pivots.pivots, cache)
    social_table = social_pivot_table(net, social.pivots.pivots)
    width = net.social.users[0].keywords.width
    user_words = np.stack([keyword_words(u.keywords.bits, width) for u in net.social.users])
    inf_out, inf_in = _user_influence_maxima(net)
    phi = supports.phi.astype(np.int64)

    xy = net.road.xy
    checkin_xy = [xy[v] for v in net.checkin_vertices]

    # leaves first, then each level of grouping; order gives the leaf layout
    nodes = []  # (is_leaf, members array, child ids)
    for g in groups:
        nodes.append((True, g, []))
    level = list(range(len(nodes)))

    def centroid(i):
        pts = np.vstack([checkin_xy[u] for u in nodes[i][1]])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return (lo + hi) / 2

    while len(level) > 1:
        cents = np.array([centroid(i) for i in level])
        next_level = []
        for grp in _group_nodes(cents, level, cfg.fanout):
            if len(grp) == 1:
                next_level.append(grp[0])
                continue
            members = np.concatenate([nodes[c][1] for c in grp])
            nodes.append((False, members, grp))
            next_level.append(len(nodes) - 1)
        level = next_level
    root = level[0]

    # leaf order: depth-first from the root
    order = []
    lo_hi = {}

    def layout(n):
        start = len(order)
        leaf, members, kids = nodes[n]
        if leaf:
            order.extend(int(u) for u in sorted(members))
        else:
            for c in kids:
                layout(c)
        lo_hi[n] = (start, len(order))

    layout(root)

    # renumber nodes breadth-first from the root so ids are deterministic and compact
    bfs = [root]
    for n in bfs:
        bfs.extend(nodes[n][2])
    new_id = {old: i for i, old in enumerate(bfs)}
    count = len(bfs)
    t = net.social.topic_count
    a = {
        "order": np.asarray(order, dtype=np.int64),
        "user_words": user_words,
        "phi": phi,
        "user_inf_out": inf_out,
        "user_inf_in": inf_in,
        "road_table": road_table,
        "social_table": social_table,
        "node_leaf": np.zeros(count, dtype=np.uint8),
        "node_lo": np.zeros(count, dtype=np.int64),
        "node_hi": np.zeros(count, dtype=np.int64),
        "child_ptr": np.zeros(count + 1, dtype=np.int64),
        "node_mbr": np.zeros((count, 4)),
        "node_words": np.zeros((count, user_words.shape[1]), dtype=np.uint64),
        "node_lb_phi": np.zeros(count, dtype=np.int64),
        "node_ub_phi": np.zeros(count, dtype=np.int64),
        "node_inf_out": np.zeros((count, t)),
        "node_inf_in": np.zeros((count, t)),
        "node_road_lb": np.zeros((count, road_table.shape[1])),
        "node_road_ub": np.zeros((count, road_table.shape[1])),
        "node_social_lb": np.zeros((count, social_table.shape[1])),
        "node_social_ub": np.zeros((count, social_table.shape[1])),
    }
    child_ids = []
    for i, old in enumerate(bfs):
        leaf, members, kids = nodes[old]
        members = np.asarray(members, dtype=np.int64)
        a["node_leaf"][i] = 1 if leaf else 0
        a["node_lo"][i], a["node_hi"][i] = lo_hi[old]
        child_ids.extend(new_id[c] for c in kids)
        a["child_ptr"][i + 1] = len(child_ids)
        pts = np.vstack([checkin_xy[u] for u in members])
        a["node_mbr"][i] = [*pts.min(axis=0), *pts.max(axis=0)]
        a["node_words"][i] = np.bitwise_or.reduce(user_words[members], axis=0)
        a["node_lb_phi"][i] = phi[members].min()
        a["node_ub_phi"][i] = phi[members].max()
        a["node_inf_out"][i] = inf_out[members].max(axis=0)
        a["node_inf_in"][i] = inf_in[members].max(axis=0)
        a["node_road_lb"][i] = road_table[members].min(axis=0)
        a["node_road_ub"][i] = road_table[members].max(axis=0)
        a["node_social_lb"][i] = social_table[members].min(axis=0)
        a["node_social_ub"][i] = social_table[members].max(axis=0)
    a["child_ids"] = np.asarray(child_ids, dtype=np.int64)

    meta = {
        "n_users": m,
        "n_road": int(net.road.n_vertices),
        "topic_count": t,
        "keyword_width": int(width),
        "fanout": cfg.fanout,
        "profile": cfg.profile,
        "root": 0,
        "road_pivots": list(road.pivots.pivots),
        "social_pivots": list(social.pivots.pivots),
        "index_pivots": list(index.pivots.pivots),
        "pivot_costs": {"road": road.cost, "social": social.cost, "index": index.cost},
        "config": {"l": cfg.l, "h": cfg.h, "iota": cfg.iota, "global_iter": cfg.pivot.global_iter,
                   "swap_iter": cfg.pivot.swap_iter, "weights": list(cfg.pivot.weights),
                   "sample_pairs": cfg.pivot.sample_pairs, "seed": cfg.pivot.rng_seed,
                   "paper_literal": cfg.pivot.paper_literal},
    }
    return SocialSpatialIndex(meta, a)


# ---------------------------------------------------------------------------
# binary format: magic, u32 version, u64 meta length + JSON, u32 array count,
# then per array: u16 name length, name, u8 dtype code, u8 ndim, u64 shape...,
# u64 byte length, raw little-endian data.

_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8"), 2: np.dtype("<u8"), 3: np.dtype("u1")}
_CODES = {v: k for k, v in _DTYPES.items()}


def serialize_index(idx: SocialSpatialIndex) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    meta = json.dumps(idx.meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<Q", len(meta)))
    buf.write(meta)
    names = [n for n in _USER_FIELDS + _NODE_FIELDS]
    buf.write(struct.pack("<I", len(names)))
    for name in names:
        arr = idx.arrays[name]
        dt = arr.dtype.newbyteorder("<") if arr.dtype.itemsize > 1 else arr.dtype
        code = _CODES[np.dtype(dt)]
        data = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
        enc = name.encode("ascii")
        buf.write(struct.pack("<H", len(enc)))
        buf.write(enc)
        buf.write(struct.pack("<BB", code, arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        buf.write(struct.pack("<Q", len(data)))
        buf.write(data)
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedIndexError(f"index stream ends at byte {len(self.data)}, needed {self.pos + n}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return bytes(out)

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def deserialize_index(data: bytes) -> SocialSpatialIndex:
    if len(data) < 4 or data[:4] != MAGIC:
        if len(data) < 4 and MAGIC.startswith(bytes(data)):
            raise TruncatedIndexError("index stream shorter than its header")
        raise BadMagicError("not a social-spatial index file (bad magic bytes)")
    r = _Reader(data)
    r.take(4)
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"index format version {version}, expected {FORMAT_VERSION}")
    (meta_len,) = r.unpack("<Q")
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    (count,) = r.unpack("<I")
    arrays = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("ascii")
        code, ndim = r.unpack("<BB")
        shape = r.unpack(f"<{ndim}Q") if ndim else ()
        (nbytes,) = r.unpack("<Q")
        if code not in _DTYPES:
            raise TruncatedIndexError(f"corrupt dtype code {code} for array {name!r}")
        raw = r.take(nbytes)
        arr = np.frombuffer(raw, dtype=_DTYPES[code]).reshape(shape)
        arrays[name] = arr.astype(arr.dtype.newbyteorder("="), copy=True)
    if r.pos != len(r.data):
        raise TruncatedIndexError("trailing bytes after the last array")
    missing = set(_USER_FIELDS + _NODE_FIELDS) - set(arrays)
    if missing:
        raise TruncatedIndexError(f"index is missing arrays: {sorted(missing)}")
    return SocialSpatialIndex(meta, arrays)


def save_index(idx: SocialSpatialIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_index(idx))


def load_index(path) -> SocialSpatialIndex:
    with open(path, "rb") as fh:
        return deserialize_index(fh.read())
