import json

import pytest

from sstruss.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_QUERY, main
from sstruss.netio import save_network

QUERY = {"q": 1, "k": 3, "d": 3, "sigma": 2, "theta": 0.3, "topics": [0.5, 0.5], "keywords": [1, 2, 3]}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, fig_net):
    d = tmp_path_factory.mktemp("cli")
    save_network(fig_net, d / "net")
    assert main(["build", "--net", str(d / "net"), "--out", str(d / "idx.ssix"), "--l", "2", "--h", "2",
                 "--iota", "3", "--fanout", "2"]) == EXIT_OK
    return d


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_query(d, obj, name="q.json"):
    p = d / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_query_prints_json_with_names(workdir, capsys):
    code, out, err = run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                                  "--query", write_query(workdir, QUERY), "--no-timing"])
    assert code == EXIT_OK and err == ""
    res = json.loads(out)
    assert res["members"] == [0, 1, 3] and res["valid"]
    assert res["member_names"] == ["u1", "u2", "u4"]
    assert res["stats"]["cpu_nanos"] == 0


def test_query_output_is_stable(workdir, capsys):
    argv = ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
            "--query", write_query(workdir, QUERY), "--no-timing"]
    assert run(capsys, argv)[1] == run(capsys, argv)[1]


def test_batch_query_and_greedy(workdir, capsys):
    batch = [QUERY, dict(QUERY, sigma=0.5)]
    code, out, _ = run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                                "--query", write_query(workdir, batch, "b.json")])
    assert code == EXIT_OK
    res = json.loads(out)
    assert [r["members"] for r in res] == [[0, 1, 3], [1]]
    code, out, _ = run(capsys, ["query", "--algo", "greedy", "--net", str(workdir / "net"), "--index",
                                str(workdir / "idx.ssix"), "--query", write_query(workdir, QUERY)])
    assert json.loads(out)["members"] == [0, 1, 3]


def test_topics_are_renormalised_with_a_warning(workdir, capsys):
    code, out, err = run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                                  "--query", write_query(workdir, dict(QUERY, topics=[2, 2]))])
    assert code == EXIT_OK and "re-normalising" in err
    assert json.loads(out)["members"] == [0, 1, 3]


@pytest.mark.parametrize("query, code", [
    (dict(QUERY, q=99), EXIT_QUERY),
    ({"q": 1}, EXIT_CONFIG),
    (dict(QUERY, topics=[1.0]), EXIT_CONFIG),
    (dict(QUERY, k=1), EXIT_QUERY),
])
def test_query_errors(workdir, capsys, query, code):
    got, out, err = run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                                 "--query", write_query(workdir, query, "bad.json")])
    assert got == code and out == "" and err


def test_io_errors(workdir, capsys, tmp_path):
    bad = tmp_path / "bad.ssix"
    bad.write_bytes(b"nope")
    q = write_query(workdir, QUERY)
    assert run(capsys, ["query", "--net", str(tmp_path / "none"), "--index", "x", "--query", q])[0] == EXIT_IO
    assert run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(bad), "--query", q])[0] == EXIT_IO
    assert run(capsys, ["query", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                        "--query", str(tmp_path / "missing.json")])[0] == EXIT_IO


def test_gen_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        code, out, _ = run(capsys, ["gen", "--out", str(tmp_path / name), "--n-road", "60", "--n-users", "40",
                                    "--seed", "3"])
        assert code == EXIT_OK and json.loads(out)["users"] == 40
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    assert run(capsys, ["gen", "--out", str(tmp_path / "c"), "--n-road", "1"])[0] == EXIT_CONFIG


def test_bad_arguments_exit_with_config_code(capsys):
    assert run(capsys, ["frobnicate"])[0] == EXIT_CONFIG
    assert run(capsys, ["query", "--net", "x"])[0] == EXIT_CONFIG


def test_bench_writes_csv(workdir, capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"defaults": {"k": 3, "sigma": 2, "theta": 0.3, "keywords": 3},
                                "sweeps": {"sigma": [1, 2]}, "queries": 2, "keyword_universe": 6}))
    code, out, _ = run(capsys, ["bench", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                                "--grid", str(grid)])
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("algo,param,value")
    assert len(lines) == 1 + 2 * 4
    assert run(capsys, ["bench", "--net", str(workdir / "net"), "--index", str(workdir / "idx.ssix"),
                        "--algos", "engine,magic"])[0] == EXIT_CONFIG


def test_verify_subcommand(workdir, capsys):
    code, out, _ = run(capsys, ["verify", "--trials", "2", "--net", str(workdir / "net"),
                                "--index", str(workdir / "idx.ssix")])
    rep = json.loads(out)
    assert code == EXIT_OK and rep["passed"]
    assert "index_domination" in rep["properties"]
    code, out, err = run(capsys, ["verify", "--trials", "0"])
    assert code == EXIT_OK and "vacuous" in err
