"""Spatial-social network data model.

A :class:`SpatialSocialNetwork` couples an undirected, weighted road graph with a
directed social graph whose users check in at road vertices.  Every object here
is immutable after construction; derived adjacency structures are computed
lazily and cached on the instance.

Constructors are deliberately permissive so that malformed data can be
inspected with :func:`validate_network` instead of failing at load time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import QueryError, TopicLengthError, UnknownUserError

DEFAULT_KEYWORD_WIDTH = 256
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def keyword_position(keyword: int, width: int = DEFAULT_KEYWORD_WIDTH) -> int:
    """Bucket of ``keyword`` in a bit-vector of ``width`` bits."""
    return _splitmix64(int(keyword)) % width


# ---------------------------------------------------------------------------
# keywords


@dataclass(frozen=True)
class KeywordSet:
    ids: frozenset
    bits: int
    width: int = DEFAULT_KEYWORD_WIDTH

    def may_contain(self, keyword: int) -> bool:
        return bool(self.bits >> keyword_position(keyword, self.width) & 1)

    def contains(self, keyword: int) -> bool:
        return self.may_contain(keyword) and keyword in self.ids

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(sorted(self.ids))


def build_keyword_bits(keywords: Iterable[int], width: int = DEFAULT_KEYWORD_WIDTH) -> KeywordSet:
    """Hash every keyword id into a ``width``-bit vector (``width`` a power of two)."""
    if width <= 0 or width & (width - 1):
        raise ValueError(f"keyword bit width must be a power of two, got {width}")
    ids = frozenset(int(k) for k in keywords)
    bits = 0
    for k in ids:
        bits |= 1 << keyword_position(k, width)
    return KeywordSet(ids, bits, width)


def keyword_overlap(a: KeywordSet, b: Iterable[int]) -> bool:
    """Exact test ``a.ids & b != {}``; the bit-vector is used as a may-contain filter."""
    b = b.ids if isinstance(b, KeywordSet) else frozenset(b)
    if not a.ids or not b:
        return False
    probe = 0
    for k in b:
        probe |= 1 << keyword_position(k, a.width)
    if not probe & a.bits:
        return False
    return not a.ids.isdisjoint(b)


# ---------------------------------------------------------------------------
# road network


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    """Undirected road graph; vertex ids are expected to be ``0..N-1``."""

    ids: np.ndarray
    xy: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray

    @classmethod
    def from_lists(cls, vertices: Sequence[tuple], edges: Sequence[tuple]) -> "RoadNetwork":
        vertices = list(vertices)
        edges = list(edges)
        ids = np.array([int(v[0]) for v in vertices], dtype=np.int64)
        xy = np.array([(float(v[1]), float(v[2])) for v in vertices], dtype=np.float64).reshape(-1, 2)
        e = np.array([(int(s), int(d)) for s, d, _ in edges], dtype=np.int64).reshape(-1, 2)
        lengths = np.array([float(w) for _, _, w in edges], dtype=np.float64)
        return cls(ids, xy, e, lengths)

    @property
    def n_vertices(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        n = self.n_vertices
        s, d = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([s, d])
        cols = np.concatenate([d, s])
        data = np.concatenate([self.lengths, self.lengths])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.xy, other.xy)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.lengths, other.lengths)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# social network


@dataclass(frozen=True)
class CheckIn:
    road_vertex: int
    timestamp: int = 0


@dataclass(frozen=True)
class User:
    id: int
    keywords: KeywordSet
    checkins: tuple
    name: str = ""


@dataclass(frozen=True)
class TopicEdge:
    src: int
    dst: int
    weights: tuple


@dataclass(frozen=True, eq=False)
class SocialNetwork:
    users: tuple
    edges: tuple
    topic_count: int

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def n_users(self) -> int:
        return len(self.users)

    def user(self, uid: int) -> User:
        if not 0 <= uid < len(self.users):
            raise UnknownUserError(uid)
        return self.users[uid]

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([e.src for e in self.edges], dtype=np.int64)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([e.dst for e in self.edges], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        """``(E, T)`` matrix of topic weights, row ``i`` belongs to ``edges[i]``."""
        if not self.edges:
            return np.zeros((0, self.topic_count))
        return np.array([e.weights for e in self.edges], dtype=np.float64)

    @cached_property
    def edge_index(self) -> dict:
        return {(e.src, e.dst): i for i, e in enumerate(self.edges)}

    @cached_property
    def out_edges(self) -> list:
        """Per user, list of edge row indices leaving that user."""
        out = [[] for _ in self.users]
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return out

    @cached_property
    def in_edges(self) -> list:
        inn = [[] for _ in self.users]
        for i, e in enumerate(self.edges):
            inn[e.dst].append(i)
        return inn

    @cached_property
    def neighbors(self) -> list:
        """Undirected friendship adjacency as a list of frozensets."""
        adj = [set() for _ in self.users]
        for e in self.edges:
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
        return [frozenset(a) for a in adj]

    @cached_property
    def undirected_csr(self) -> sp.csr_matrix:
        n = self.n_users
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        m = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        m.data[:] = 1.0
        return m

    def __eq__(self, other):
        if not isinstance(other, SocialNetwork):
            return NotImplemented
        return (
            self.topic_count == other.topic_count
            and self.users == other.users
            and self.edges == other.edges
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SpatialSocialNetwork:
    road: RoadNetwork
    social: SocialNetwork

    @property
    def n_users(self) -> int:
        return self.social.n_users

    @cached_property
    def checkin_vertices(self) -> list:
        """Per user, int array of check-in road vertices."""
        return [np.array([c.road_vertex for c in u.checkins], dtype=np.int64) for u in self.social.users]

    @cached_property
    def checkin_flat(self) -> tuple:
        """``(vertices, owners, counts)`` over all check-ins, for vectorised per-user means."""
        verts = self.checkin_vertices
        counts = np.array([len(v) for v in verts], dtype=np.int64)
        flat = np.concatenate(verts) if verts else np.zeros(0, dtype=np.int64)
        owners = np.repeat(np.arange(len(verts)), counts)
        return flat, owners, counts

    def per_user_mean(self, road_values: np.ndarray) -> np.ndarray:
        """Average of a per-road-vertex vector over each user's check-ins."""
        flat, owners, counts = self.checkin_flat
        sums = np.bincount(owners, weights=road_values[flat], minlength=self.n_users)
        with np.errstate(invalid="ignore", divide="ignore"):
            return sums / counts

    @cached_property
    def home_xy(self) -> np.ndarray:
        """Mean check-in coordinate per user (grouping and diagnostics only)."""
        out = np.zeros((self.n_users, 2))
        for i, verts in enumerate(self.checkin_vertices):
            if len(verts):
                out[i] = self.road.xy[verts].mean(axis=0)
        return out

    def __eq__(self, other):
        if not isinstance(other, SpatialSocialNetwork):
            return NotImplemented
        return self.road == other.road and self.social == other.social

    __hash__ = None


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class QueryTopicVector:
    weights: tuple

    @classmethod
    def normalized(cls, weights: Iterable[float]) -> "QueryTopicVector":
        w = [float(x) for x in weights]
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise QueryError("topic weights must be finite and non-negative")
        total = sum(w)
        if total <= 0:
            raise QueryError("topic weights must not all be zero")
        return cls(tuple(x / total for x in w))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class QuerySpec:
    q: int
    topics: QueryTopicVector
    keywords: frozenset
    k: int
    d: float
    sigma: float
    theta: float

    def __post_init__(self):
        if not isinstance(self.topics, QueryTopicVector):
            object.__setattr__(self, "topics", QueryTopicVector.normalized(self.topics))
        object.__setattr__(self, "keywords", frozenset(int(x) for x in self.keywords))

    def validate(self, net: SpatialSocialNetwork) -> None:
        if not 0 <= self.q < net.n_users:
            raise UnknownUserError(self.q)
        if self.k < 2:
            raise QueryError(f"k must be >= 2, got {self.k}")
        if not self.d >= 1:
            raise QueryError(f"d must be >= 1, got {self.d}")
        if not self.sigma >= 0:
            raise QueryError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.theta <= 1.0:
            raise QueryError(f"theta must be in [0,1], got {self.theta}")
        if len(self.topics) != net.social.topic_count:
            raise TopicLengthError(
                f"query has {len(self.topics)} topics, network has {net.social.topic_count}"
            )
        w = self.topics.array
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise QueryError("query topic vector must be non-negative and sum to 1")

    def replace(self, **changes) -> "QuerySpec":
        from dataclasses import replace

        return replace(self, **changes)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str

    def __str__(self):
        return f"{self.entity}: {self.rule}"


def validate_network(net: SpatialSocialNetwork) -> list:
    """Return every broken model invariant as a :class:`Violation` (empty if valid)."""
    out = []
    road, social = net.road, net.social
    n = road.n_vertices

    if not np.array_equal(road.ids, np.arange(n)):
        out.append(Violation("road", "vertex ids not dense 0..N-1"))
    if road.xy.shape != (n, 2) or not np.all(np.isfinite(road.xy)):
        out.append(Violation("road", "vertex coordinates missing or non-finite"))
    seen = set()
    for i, ((s, d), w) in enumerate(zip(road.edges.tolist(), road.lengths.tolist())):
        ent = f"road edge {i} ({s},{d})"
        if not (0 <= s < n and 0 <= d < n):
            out.append(Violation(ent, "endpoint is not a road vertex"))
            continue
        if s == d:
            out.append(Violation(ent, "self-loop"))
        key = (min(s, d), max(s, d))
        if key in seen:
            out.append(Violation(ent, "duplicate edge"))
        seen.add(key)
        if not (w > 0 and math.isfinite(w)):
            out.append(Violation(ent, "edge length not strictly positive"))
    if n and not out:
        from scipy.sparse.csgraph import connected_components

        ncomp, _ = connected_components(road.csr, directed=False)
        if ncomp != 1:
            out.append(Violation("road", f"not connected ({ncomp} components)"))
    elif n == 0:
        out.append(Violation("road", "empty road network"))

    m = social.n_users
    if social.topic_count < 1:
        out.append(Violation("social", "topic_count must be >= 1"))
    for i, u in enumerate(social.users):
        ent = f"user {u.id}"
        if u.id != i:
            out.append(Violation(ent, "user ids not dense 0..M-1"))
        if not u.checkins:
            out.append(Violation(ent, "empty check-in list"))
        for c in u.checkins:
            if not 0 <= c.road_vertex < n:
                out.append(Violation(ent, f"check-in vertex {c.road_vertex} not in road network"))
        if any(k < 0 for k in u.keywords.ids):
            out.append(Violation(ent, "negative keyword id"))
        if build_keyword_bits(u.keywords.ids, u.keywords.width).bits != u.keywords.bits:
            out.append(Violation(ent, "keyword bits disagree with keyword ids"))
    pairs = set()
    for i, e in enumerate(social.edges):
        ent = f"social edge {i} ({e.src}->{e.dst})"
        if not (0 <= e.src < m and 0 <= e.dst < m):
            out.append(Violation(ent, "endpoint is not a user"))
        if e.src == e.dst:
            out.append(Violation(ent, "self-loop"))
        if (e.src, e.dst) in pairs:
            out.append(Violation(ent, "duplicate directed edge"))
        pairs.add((e.src, e.dst))
        if len(e.weights) != social.topic_count:
            out.append(Violation(ent, f"has {len(e.weights)} weights, expected {social.topic_count}"))
        if any(not (0.0 <= w <= 1.0) for w in e.weights):
            out.append(Violation(ent, "weight out of [0,1]"))
    return out


def make_user(uid: int, keywords: Iterable[int], checkins: Iterable, name: str = "",
              width: int = DEFAULT_KEYWORD_WIDTH) -> User:
    """Convenience constructor; ``checkins`` may be vertex ids or ``(vertex, timestamp)`` pairs."""
    cs = []
    for c in checkins:
        if isinstance(c, CheckIn):
            cs.append(c)
        elif isinstance(c, tuple):
            cs.append(CheckIn(int(c[0]), int(c[1])))
        else:
            cs.append(CheckIn(int(c), 0))
    return User(int(uid), build_keyword_bits(keywords, width), tuple(cs), name)
