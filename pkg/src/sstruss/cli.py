"""Command-line interface.  stdout carries only JSON/CSV payloads; diagnostics go to stderr.

Exit codes: 0 ok, 1 verification failed, 2 bad configuration, 3 I/O error, 4 query error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import bench as benchmod
from .baselines import greedy_baseline
from .datagen import GenConfig, GenConfigError, gen_network
from .engine import answer_batch, answer_query
from .errors import (
    IndexBuildError,
    IndexFormatError,
    NetworkIOError,
    PivotError,
    QueryError,
    TopicLengthError,
    UnknownUserError,
)
from .index import IndexConfig, build_index, load_index, save_index
from .metrics import RoadDistanceCache
from .netio import load_network, save_network
from .network import QuerySpec, QueryTopicVector
from .pivots import PivotSearchConfig
from .pruning import MODES, SOUND

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO, EXIT_QUERY = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _warn(msg: str) -> None:
    print(f"sstruss: {msg}", file=sys.stderr)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def _load_net(path):
    try:
        return load_network(path)
    except NetworkIOError as exc:
        raise CliError(EXIT_IO, f"cannot load network: {exc}") from exc


def _load_idx(path):
    try:
        return load_index(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_IO, f"cannot read index: {exc}") from exc
    except IndexFormatError as exc:
        raise CliError(EXIT_IO, f"corrupt index file: {exc}") from exc


# ---------------------------------------------------------------------------
# query files


def parse_query(obj: dict, topic_count: int) -> QuerySpec:
    required = ("q", "k", "d", "sigma", "theta", "topics", "keywords")
    missing = [k for k in required if k not in obj]
    if missing:
        raise CliError(EXIT_CONFIG, f"query is missing fields: {missing}")
    topics = [float(t) for t in obj["topics"]]
    if len(topics) != topic_count:
        raise CliError(EXIT_CONFIG, f"query has {len(topics)} topics, network has {topic_count}")
    total = sum(topics)
    if total > 0 and abs(total - 1.0) > 1e-9:
        _warn(f"topic weights sum to {total:g}; re-normalising")
    try:
        tv = QueryTopicVector.normalized(topics)
        return QuerySpec(int(obj["q"]), tv, frozenset(int(k) for k in obj["keywords"]), int(obj["k"]),
                         float(obj["d"]), float(obj["sigma"]), float(obj["theta"]))
    except (QueryError, ValueError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid query: {exc}") from exc


def _result_json(net, comm, stats, timing: bool) -> dict:
    out = comm.to_json()
    names = [net.social.users[u].name for u in comm.members]
    if any(names):
        out["member_names"] = names
    st = stats.to_json()
    if not timing:
        st["cpu_nanos"] = 0
    out["stats"] = st
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    try:
        cfg = GenConfig(n_road=args.n_road, n_users=args.n_users, distribution=args.dist,
                        topic_count=args.topics, checkins_per_user=(args.min_checkins, args.max_checkins),
                        extent=args.extent, rng_seed=args.seed)
    except GenConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    net = gen_network(cfg)
    try:
        save_network(net, args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write network: {exc}") from exc
    _emit({"out": str(args.out), "road_vertices": net.road.n_vertices, "road_edges": net.road.n_edges,
           "users": net.n_users, "social_edges": len(net.social.edges)})
    return EXIT_OK


def cmd_build(args) -> int:
    net = _load_net(args.net)
    try:
        pcfg = PivotSearchConfig(global_iter=args.global_iter, swap_iter=args.swap_iter, rng_seed=args.seed,
                                 sample_pairs=args.sample_pairs, paper_literal=args.paper_literal)
        cfg = IndexConfig(args.l, args.h, args.iota, args.fanout, pcfg, args.profile)
        t0 = time.perf_counter()
        idx = build_index(net, cfg)
        elapsed = time.perf_counter() - t0
    except (IndexBuildError, PivotError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    try:
        save_index(idx, args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write index: {exc}") from exc
    _emit({"out": str(args.out), "build_seconds": round(elapsed, 3), "nodes": idx.n_nodes,
           "height": idx.height(), "profile": idx.profile, "pivot_costs": idx.meta["pivot_costs"]})
    return EXIT_OK


def cmd_query(args) -> int:
    net = _load_net(args.net)
    idx = _load_idx(args.index)
    try:
        raw = json.loads(Path(args.query).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise CliError(EXIT_IO, f"cannot read query file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"query file is not valid JSON: {exc}") from exc
    batch = isinstance(raw, list)
    objs = raw if batch else [raw]
    queries = [parse_query(o, net.social.topic_count) for o in objs]
    for qy in queries:
        if not 0 <= qy.q < net.n_users:
            raise CliError(EXIT_QUERY, f"query user {qy.q} is not in the network")
    timing = not args.no_timing
    try:
        if args.algo == "greedy":
            cache = RoadDistanceCache(net.road)
            results = [greedy_baseline(net, qy, cache) for qy in queries]
        elif batch:
            results = answer_batch(net, idx, queries, mode=args.prune_mode)
        else:
            results = [answer_query(net, idx, queries[0], mode=args.prune_mode)]
    except UnknownUserError as exc:
        raise CliError(EXIT_QUERY, f"unknown user {exc}") from exc
    except (QueryError, TopicLengthError) as exc:
        raise CliError(EXIT_QUERY, str(exc)) from exc
    payload = [_result_json(net, c, s, timing) for c, s in results]
    _emit(payload if batch else payload[0])
    return EXIT_OK


def cmd_bench(args) -> int:
    net = _load_net(args.net)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in benchmod.ALGOS]
    if bad:
        raise CliError(EXIT_CONFIG, f"unknown algorithms: {bad}")
    grid = benchmod.Grid()
    if args.grid:
        try:
            grid = benchmod.Grid.from_json(json.loads(Path(args.grid).read_text(encoding="utf-8")))
        except FileNotFoundError as exc:
            raise CliError(EXIT_IO, f"cannot read grid: {exc}") from exc
        except (ValueError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_CONFIG, f"bad grid file: {exc}") from exc
    if args.queries is not None:
        grid.queries = args.queries
    indexes = {"engine": _load_idx(args.index)}
    base_cfg = IndexConfig(**{k: indexes["engine"].meta["config"][k] for k in ("l", "h", "iota")},
                           fanout=indexes["engine"].fanout,
                           pivot=PivotSearchConfig(rng_seed=indexes["engine"].meta["config"]["seed"]))
    for algo, kind, path in (("sindex", "social", args.sindex), ("rindex", "spatial", args.rindex)):
        if algo in algos:
            if path:
                indexes[algo] = _load_idx(path)
            else:
                _warn(f"building {algo} index")
                from .baselines import build_baseline_index

                indexes[algo] = build_baseline_index(net, kind, base_cfg)
    results = benchmod.run_grid(net, indexes, grid, algos)
    sys.stdout.write(benchmod.to_csv(results))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite

    net = _load_net(args.net) if args.net else None
    idx = _load_idx(args.index) if args.index else None
    if args.trials == 0:
        _warn("no trials requested; the randomised suite is vacuous")
    report = run_suite(args.trials, args.seed, net, idx, dump_dir=args.dump_dir)
    _emit(report.to_json())
    if not report.passed:
        _warn(f"{len(report.failures)} property failures; reproduce with --seed {args.seed}")
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sstruss", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", aliases=["generate"], help="generate a synthetic network")
    g.add_argument("--out", required=True)
    g.add_argument("--n-road", type=int, default=30000)
    g.add_argument("--n-users", type=int, default=30000)
    g.add_argument("--dist", choices=["uniform", "gaussian"], default="uniform")
    g.add_argument("--topics", type=int, default=3)
    g.add_argument("--min-checkins", type=int, default=1)
    g.add_argument("--max-checkins", type=int, default=3)
    g.add_argument("--extent", type=float, default=1.0, help="side length of the square holding road vertices")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", aliases=["build-index"], help="build and save an index")
    b.add_argument("--net", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--l", type=int, default=None)
    b.add_argument("--h", type=int, default=None)
    b.add_argument("--iota", type=int, default=None)
    b.add_argument("--fanout", type=int, default=8)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--global-iter", type=int, default=5)
    b.add_argument("--swap-iter", type=int, default=50)
    b.add_argument("--sample-pairs", type=int, default=2000)
    b.add_argument("--profile", choices=["full", "social", "spatial"], default="full")
    b.add_argument("--paper-literal", action="store_true", help="minimise the road pivot cost")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer one query or a batch (JSON array)")
    q.add_argument("--net", required=True)
    q.add_argument("--index", required=True)
    q.add_argument("--query", required=True)
    q.add_argument("--prune-mode", choices=MODES, default=SOUND)
    q.add_argument("--algo", choices=["engine", "greedy"], default="engine")
    q.add_argument("--no-timing", action="store_true", help="report cpu_nanos as 0 for reproducible output")
    q.set_defaults(func=cmd_query)

    be = sub.add_parser("bench", help="parameter sweep, CSV on stdout")
    be.add_argument("--net", required=True)
    be.add_argument("--index", required=True)
    be.add_argument("--grid", default=None)
    be.add_argument("--algos", default=",".join(benchmod.ALGOS))
    be.add_argument("--queries", type=int, default=None)
    be.add_argument("--sindex", default=None, help="prebuilt social-profile index")
    be.add_argument("--rindex", default=None, help="prebuilt spatial-profile index")
    be.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="randomised property suite")
    v.add_argument("--net", default=None)
    v.add_argument("--index", default=None)
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--dump-dir", default=None, help="write failing instances here")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        _warn(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
