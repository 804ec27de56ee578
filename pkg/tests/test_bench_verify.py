import pytest

from sstruss.bench import Grid, make_query, monotone_steps, run_grid, sweep_points, to_csv
from sstruss.index import build_index
from sstruss.baselines import build_baseline_index
from sstruss.verify import SMALL_INDEX, check_case, random_small_case, run_suite, thread_count


def test_sweep_points_vary_one_factor():
    g = Grid(sweeps={"k": [2, 3], "sigma": [1.0]})
    pts = list(sweep_points(g))
    assert [(p, v) for p, v, _ in pts] == [("k", 2), ("k", 3), ("sigma", 1.0)]
    assert pts[0][2]["sigma"] == g.defaults["sigma"]


def test_grid_rejects_unknown_parameters():
    with pytest.raises(ValueError):
        Grid.from_json({"sweeps": {"colour": [1]}})


def test_keyword_sets_nest(fig_net):
    order = [3, 1, 2, 6, 5, 4]
    small = make_query(fig_net, 1, {"keywords": 2, "topics": 1, "sigma": 2, "theta": 0.1, "k": 3, "d": 3}, order)
    big = make_query(fig_net, 1, {"keywords": 4, "topics": 2, "sigma": 2, "theta": 0.1, "k": 3, "d": 3}, order)
    assert small.keywords <= big.keywords
    assert small.topics.weights == (1.0, 0.0) and big.topics.weights == (0.5, 0.5)


def test_run_grid_agreement_on_small_instance():
    case = random_small_case(3, max_users=12)
    net = case.net
    indexes = {"engine": build_index(net, SMALL_INDEX),
               "sindex": build_baseline_index(net, "social", SMALL_INDEX),
               "rindex": build_baseline_index(net, "spatial", SMALL_INDEX)}
    grid = Grid(defaults={"keywords": 2, "topics": 2, "sigma": 3.0, "theta": 0.1, "k": 3, "d": 3},
                sweeps={"sigma": [1, 3], "k": [2, 3]}, queries=3, keyword_universe=3)
    res = run_grid(net, indexes, grid)
    digests = {}
    for r in res:
        digests.setdefault((r.param, r.value), set()).add(r.digest)
    assert all(len(d) == 1 for d in digests.values())
    assert to_csv(res).count("\n") == 1 + len(res)


def test_monotone_steps():
    assert monotone_steps([1, 2, 2, 3], increasing=True) == 3
    assert monotone_steps([3, 2, 4], increasing=False) == 1


def test_suite_passes_and_reports_counts():
    rep = run_suite(3, seed=5)
    assert rep.passed
    assert rep.counts["oracle_equivalence"]["checked"] == 3


def test_single_case_checks_every_property():
    rep = check_case(random_small_case(11))
    assert {"oracle_equivalence", "bound_sandwich", "influence_upper_bound", "greedy_agreement"} <= set(rep.counts)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("SSTRUSS_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SSTRUSS_THREADS", "many")
    assert thread_count() >= 1
