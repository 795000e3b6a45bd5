import json
import subprocess
import sys

import pytest
from conftest import clique_layers

from firmml import MultilayerGraph, load_graph, maximal_firmtruss
from firmml.cli import dispatch
from firmml.graph import write_edge_list


@pytest.fixture
def graph_file(tmp_path):
    # two 5-cliques in layers 1 and 2 joined through node 4
    edges = clique_layers(5, 2) + clique_layers(5, 2, offset=4)
    g = MultilayerGraph.from_edges([(l + 1, f"n{u}", f"n{v}") for l, u, v in edges])
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    return path


def run(capsys, *argv):
    code = dispatch([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_stats(capsys, graph_file):
    code, out, _ = run(capsys, "stats", "--graph", graph_file)
    doc = json.loads(out)
    assert code == 0
    assert (doc["nodes"], doc["layers"], doc["edge_schemas"], doc["edges"]) == (9, 2, 20, 40)
    code, out, _ = run(capsys, "stats", "--graph", graph_file, "--format", "csv")
    assert out.splitlines()[0].startswith("nodes,layers")


def test_search_happy_path(capsys, graph_file):
    code, out, _ = run(capsys, "search", "--graph", graph_file, "--k", 4, "--lambda", 2, "--query", "n0",
                       "--algo", "ftcs-global")
    doc = json.loads(out)
    assert code == 0
    assert sorted(doc["nodes"]) == ["n0", "n1", "n2", "n3", "n4"]
    assert doc["algorithm"] == "ftcs-global" and doc["query_distance"] == 1


@pytest.mark.parametrize("algo", ["ftcs-local", "ftcs-hybrid", "fccs-global", "fccs-local", "fccs-ihybrid"])
def test_search_algos(capsys, graph_file, algo):
    code, out, _ = run(capsys, "search", "--graph", graph_file, "--k", 3, "--lambda", 2, "--query", "n0",
                       "--algo", algo)
    assert code == 0
    assert "n0" in json.loads(out)["nodes"]


def test_search_errors(capsys, graph_file):
    code, out, err = run(capsys, "search", "--graph", graph_file, "--k", 4, "--lambda", 2, "--query", "zzz")
    assert code == 2 and "zzz" in err and out == ""
    code, out, _ = run(capsys, "search", "--graph", graph_file, "--k", 9, "--lambda", 2, "--query", "n0")
    assert code == 1 and json.loads(out) == {"nodes": []}
    code, _, _ = run(capsys, "search", "--graph", graph_file, "--k", 4, "--lambda", 5, "--query", "n0")
    assert code == 2
    code, _, _ = run(capsys, "search", "--graph", graph_file.parent / "missing.txt", "--k", 4, "--lambda", 1,
                     "--query", "n0")
    assert code == 2
    assert run(capsys, "search", "--graph", graph_file)[0] == 2


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 a b\nbroken\n")
    code, _, err = run(capsys, "stats", "--graph", bad)
    assert code == 2 and "2" in err


def strip_time(doc):
    doc = dict(doc)
    doc.pop("elapsed_ms")
    return doc


@pytest.mark.parametrize("algo", ["ftcs-global", "ftcs-local", "ftcs-hybrid"])
def test_index_round_trip(capsys, graph_file, tmp_path, algo):
    idx = tmp_path / "g.ftsi"
    code, out, _ = run(capsys, "decompose", "--graph", graph_file, "--mode", "firmtruss", "--out", idx,
                       "--json", tmp_path / "g.json")
    assert code == 0 and json.loads(out)["bytes"] == idx.stat().st_size
    assert json.loads((tmp_path / "g.json").read_text())
    args = ["search", "--graph", graph_file, "--k", 4, "--lambda", 2, "--query", "n0,n4"]
    _, plain, _ = run(capsys, *args, "--algo", algo)
    ialgo = algo.replace("-", "-i")
    _, indexed, _ = run(capsys, *args, "--algo", ialgo, "--index", idx)
    assert strip_time(json.loads(plain)) == strip_time(json.loads(indexed))


def test_core_index_round_trip(capsys, graph_file, tmp_path):
    idx = tmp_path / "core.json"
    assert run(capsys, "decompose", "--graph", graph_file, "--mode", "firmcore", "--out", idx)[0] == 0
    args = ["search", "--graph", graph_file, "--k", 3, "--lambda", 2, "--query", "n1"]
    _, plain, _ = run(capsys, *args, "--algo", "fccs-local")
    _, indexed, _ = run(capsys, *args, "--algo", "fccs-ilocal", "--index", idx)
    assert strip_time(json.loads(plain)) == strip_time(json.loads(indexed))


def test_stale_and_corrupt_index(capsys, graph_file, tmp_path):
    idx = tmp_path / "g.ftsi"
    run(capsys, "decompose", "--graph", graph_file, "--out", idx)
    with open(graph_file, "a") as fh:
        fh.write("1 n0 n8\n")
    code, _, err = run(capsys, "search", "--graph", graph_file, "--k", 4, "--lambda", 2, "--query", "n0",
                       "--algo", "ftcs-ilocal", "--index", idx)
    assert code == 3 and "index" in err
    data = idx.read_bytes()
    idx.write_bytes(data[:-3])
    code, _, _ = run(capsys, "search", "--graph", graph_file, "--k", 4, "--lambda", 2, "--query", "n0",
                     "--algo", "ftcs-ilocal", "--index", idx)
    assert code == 3
    core = tmp_path / "core.json"
    core.write_text("not json")
    code, _, _ = run(capsys, "search", "--graph", graph_file, "--k", 2, "--lambda", 2, "--query", "n0",
                     "--algo", "fccs-iglobal", "--index", core)
    assert code == 3


def test_asearch(capsys, graph_file, tmp_path):
    attrs = tmp_path / "a.txt"
    attrs.write_text("".join(f"n{i} {1 if i < 5 else 0} {0 if i < 5 else 1}\n" for i in range(9)))
    for p in ("1", "2", "-inf", "inf", "-1"):
        code, out, _ = run(capsys, "asearch", "--graph", graph_file, "--attributes", attrs, "--k", 3, "--lambda", 2,
                           "--query", "n0", "--p", p)
        doc = json.loads(out)
        assert code == 0
        assert {"p", "homophily_score", "removed_as_free_riders"} <= set(doc)
    assert doc["p"] == -1.0
    code, out, _ = run(capsys, "asearch", "--graph", graph_file, "--attributes", attrs, "--k", 3, "--lambda", 2,
                       "--query", "n0", "--p", "0")
    assert code == 2
    assert run(capsys, "asearch", "--graph", graph_file, "--attributes", attrs, "--k", 3, "--lambda", 2,
               "--query", "n0", "--p", "abc")[0] == 2


def test_eval(capsys, graph_file, tmp_path):
    truth = tmp_path / "t.txt"
    truth.write_text("n0 n1 n2 n3 n4\nn5 n6 n7 n8 n4\n")
    code, out, _ = run(capsys, "eval", "--graph", graph_file, "--ground-truth", truth, "--k", 5, "--lambda", 2)
    rows = json.loads(out)
    assert code == 0 and len(rows) == 2
    assert {"F1", "density", "diameter", "size"} <= set(rows[0])
    assert rows[0]["F1"] == 1.0 and rows[0]["density"] == 2.0 * 2


def test_oracle(capsys, graph_file):
    code, out, _ = run(capsys, "oracle", "--graph", graph_file, "--k", 5, "--lambda", 2, "--query", "n0")
    doc = json.loads(out)
    assert code == 0 and doc["diameter"] == 1 and sorted(doc["nodes"]) == ["n0", "n1", "n2", "n3", "n4"]
    code, _, err = run(capsys, "oracle", "--graph", graph_file, "--k", 5, "--lambda", 2, "--query", "n0",
                       "--budget", 4)
    assert code == 2 and "budget" in err


def test_gen(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["gen", "--n", 60, "--layers", 3, "--k", 4, "--lambda", 2, "--size", 6, "--noise", 1.0, "--seed", 5]
    assert run(capsys, *args, "--out", a, "--truth", tmp_path / "ta.txt")[0] == 0
    assert run(capsys, *args, "--out", b, "--truth", tmp_path / "tb.txt")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "ta.txt").read_bytes() == (tmp_path / "tb.txt").read_bytes()
    g = load_graph(a)
    planted = {g.node_id(x) for x in (tmp_path / "ta.txt").read_text().split()}
    nodes, _ = maximal_firmtruss(g, 4, 2, [min(planted)])
    assert planted <= nodes
    assert run(capsys, "gen", "--n", 10, "--layers", 2, "--k", 4, "--size", 3, "--out", a)[0] == 2


def test_gen_noise_free_is_the_plant(capsys, tmp_path):
    out = tmp_path / "p.txt"
    run(capsys, "gen", "--n", 20, "--layers", 3, "--k", 4, "--lambda", 2, "--size", 5, "--out", out, "--truth",
        tmp_path / "t.txt")
    g = load_graph(out)
    assert g.n == 5 and g.num_schemas == 10 and g.num_edges == 20


def test_bench(capsys, graph_file, monkeypatch):
    monkeypatch.setenv("FIRMML_THREADS", "2")
    code, out, _ = run(capsys, "bench", "--graph", graph_file, "--algo", "ftcs-ilocal", "--queries", 10)
    doc = json.loads(out)
    assert code == 0 and doc["queries"] == 10 and doc["threads"] == 2
    assert doc["median_query_s"] >= 0


def test_module_entry_point(graph_file):
    r = subprocess.run([sys.executable, "-m", "firmml", "stats", "--graph", str(graph_file)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["nodes"] == 9
