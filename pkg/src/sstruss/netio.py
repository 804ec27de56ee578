"""Five-file TSV format for spatial-social networks."""
from __future__ import annotations

import os
from pathlib import Path

from .errors import DanglingReferenceError, MalformedRowError, MissingFileError
from .network import CheckIn, RoadNetwork, SocialNetwork, SpatialSocialNetwork, TopicEdge, make_user

FILES = ("road_nodes.tsv", "road_edges.tsv", "users.tsv", "social_edges.tsv", "checkins.tsv")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def save_network(net: SpatialSocialNetwork, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    road, social = net.road, net.social
    _write(d / "road_nodes.tsv", ("id", "x", "y"),
           ((str(int(i)), _fmt(x), _fmt(y)) for i, (x, y) in zip(road.ids, road.xy)))
    _write(d / "road_edges.tsv", ("src", "dst", "length"),
           ((str(int(a)), str(int(b)), _fmt(w)) for (a, b), w in zip(road.edges, road.lengths)))
    with_names = any(u.name for u in social.users)
    header = ("id", "keywords", "name") if with_names else ("id", "keywords")
    _write(d / "users.tsv", header,
           ((str(u.id), ",".join(str(k) for k in sorted(u.keywords.ids))) + ((u.name,) if with_names else ())
            for u in social.users))
    _write(d / "social_edges.tsv", ("src", "dst") + tuple(f"w_{j + 1}" for j in range(social.topic_count)),
           ((str(e.src), str(e.dst)) + tuple(_fmt(w) for w in e.weights) for e in social.edges))
    _write(d / "checkins.tsv", ("user_id", "road_vertex_id", "timestamp"),
           ((str(u.id), str(c.road_vertex), str(c.timestamp)) for u in social.users for c in u.checkins))


def _rows(path: Path):
    if not path.is_file():
        raise MissingFileError(f"missing network file {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            yield header, lineno, line.split("\t")


def _num(path, lineno, text, kind):
    try:
        return kind(text)
    except ValueError:
        raise MalformedRowError(path, lineno, f"cannot parse {text!r} as {kind.__name__}") from None


def load_network(directory) -> SpatialSocialNetwork:
    d = Path(directory)
    if not d.is_dir():
        raise MissingFileError(f"network directory {d} does not exist")

    verts = []
    p = d / "road_nodes.tsv"
    for _, ln, f in _rows(p):
        if len(f) != 3:
            raise MalformedRowError(p, ln, f"expected 3 columns, got {len(f)}")
        verts.append((_num(p, ln, f[0], int), _num(p, ln, f[1], float), _num(p, ln, f[2], float)))
    vertex_ids = {v[0] for v in verts}

    edges = []
    p = d / "road_edges.tsv"
    for _, ln, f in _rows(p):
        if len(f) != 3:
            raise MalformedRowError(p, ln, f"expected 3 columns, got {len(f)}")
        a, b, w = _num(p, ln, f[0], int), _num(p, ln, f[1], int), _num(p, ln, f[2], float)
        for x in (a, b):
            if x not in vertex_ids:
                raise DanglingReferenceError(f"{p}:{ln}: road edge ({a}, {b}) references unknown vertex {x}")
        edges.append((a, b, w))
    road = RoadNetwork.from_lists(verts, edges)

    user_rows = []
    p = d / "users.tsv"
    for header, ln, f in _rows(p):
        if len(f) not in (2, 3) or len(f) != len(header):
            raise MalformedRowError(p, ln, f"expected {len(header)} columns, got {len(f)}")
        uid = _num(p, ln, f[0], int)
        kws = [_num(p, ln, k, int) for k in f[1].split(",") if k != ""]
        name = f[2] if len(f) == 3 else ""
        user_rows.append((uid, kws, name))
    user_ids = {u[0] for u in user_rows}

    checkins = {uid: [] for uid in user_ids}
    p = d / "checkins.tsv"
    for _, ln, f in _rows(p):
        if len(f) != 3:
            raise MalformedRowError(p, ln, f"expected 3 columns, got {len(f)}")
        uid, v, ts = (_num(p, ln, x, int) for x in f)
        if uid not in user_ids:
            raise DanglingReferenceError(f"{p}:{ln}: check-in references unknown user {uid}")
        if v not in vertex_ids:
            raise DanglingReferenceError(f"{p}:{ln}: check-in of user {uid} references unknown road vertex {v}")
        checkins[uid].append(CheckIn(v, ts))

    p = d / "social_edges.tsv"
    social_edges = []
    topic_count = None
    for header, ln, f in _rows(p):
        topic_count = len(header) - 2
        if len(f) != len(header):
            raise MalformedRowError(p, ln, f"expected {topic_count} topic weights, got {len(f) - 2}")
        a, b = _num(p, ln, f[0], int), _num(p, ln, f[1], int)
        for x in (a, b):
            if x not in user_ids:
                raise DanglingReferenceError(f"{p}:{ln}: social edge ({a}, {b}) references unknown user {x}")
        social_edges.append(TopicEdge(a, b, tuple(_num(p, ln, w, float) for w in f[2:])))
    if topic_count is None:
        with open(p, encoding="utf-8") as fh:
            topic_count = max(1, len(fh.readline().rstrip("\n").split("\t")) - 2)

    users = [make_user(uid, kws, checkins[uid], name) for uid, kws, name in sorted(user_rows)]
    return SpatialSocialNetwork(road, SocialNetwork(tuple(users), tuple(social_edges), topic_count))


def network_files(directory) -> list:
    return [os.path.join(directory, f) for f in FILES]
