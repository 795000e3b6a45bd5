"""Command-line entry point.

Exit codes: 0 success, 1 no community, 2 input/validation error,
3 index mismatch or corruption.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .errors import DomainError, FirmError, IndexError_, NoCommunity, ParseError

EXIT_OK, EXIT_EMPTY, EXIT_INPUT, EXIT_INDEX = 0, 1, 2, 3

ALGOS = [f"{s}-{i}{t}" for s in ("ftcs", "fccs") for i in ("", "i") for t in ("global", "local", "hybrid")]


def _p_value(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid p: {text!r}") from None


def _queries(values) -> list[str]:
    out = []
    for v in values:
        out.extend(x for x in v.split(",") if x)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="firmml", description="Dense structures and community search in multilayer graphs")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def graph_arg(p):
        p.add_argument("--graph", required=True, help="edge list: 'layer src dst' per line")

    def kl_args(p, required=True):
        p.add_argument("--k", type=int, required=required)
        p.add_argument("--lambda", dest="lam", type=int, required=required)

    def fmt_arg(p):
        p.add_argument("--format", choices=["json", "csv", "text"], default="json")

    p = sub.add_parser("stats", help="graph summary")
    graph_arg(p)
    fmt_arg(p)

    p = sub.add_parser("decompose", help="build a skyline index")
    graph_arg(p)
    p.add_argument("--mode", choices=["firmtruss", "firmcore"], default="firmtruss")
    p.add_argument("--out", required=True, help="index file (binary for firmtruss, JSON for firmcore)")
    p.add_argument("--json", help="also export a readable JSON skyline")

    p = sub.add_parser("search", help="minimum-diameter community search")
    graph_arg(p)
    kl_args(p)
    p.add_argument("--query", nargs="+", required=True, help="query node labels (space or comma separated)")
    p.add_argument("--algo", choices=ALGOS, default="ftcs-global")
    p.add_argument("--index", help="skyline index from 'decompose'")
    p.add_argument("--diameter-mode", choices=["exact", "bound"], default="bound")
    p.add_argument("--diameter-cap", type=int, default=2000)
    fmt_arg(p)

    p = sub.add_parser("asearch", help="attributed (homophily) community search")
    graph_arg(p)
    kl_args(p)
    p.add_argument("--query", nargs="+", required=True)
    p.add_argument("--attributes", required=True)
    p.add_argument("--p", type=_p_value, default=1.0, help="mean exponent; accepts inf and -inf")
    p.add_argument("--structure", choices=["firmtruss", "firmcore"], default="firmtruss")
    fmt_arg(p)

    p = sub.add_parser("eval", help="score searches against ground-truth communities")
    graph_arg(p)
    kl_args(p)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--algo", choices=ALGOS, default="ftcs-global")
    p.add_argument("--index")
    p.add_argument("--query", nargs="+", help="fixed query; default is the first node of each community")
    p.add_argument("--beta", type=float, default=1.0)
    fmt_arg(p)

    p = sub.add_parser("oracle", help="exhaustive optimum on a small graph")
    graph_arg(p)
    kl_args(p)
    p.add_argument("--query", nargs="+", required=True)
    p.add_argument("--structure", choices=["firmtruss", "firmcore"], default="firmtruss")
    p.add_argument("--budget", type=int, default=12, help="maximum node count")
    p.add_argument("--timeout", type=float)
    p.add_argument("--attributes", help="with --p, maximise homophily instead of minimising diameter")
    p.add_argument("--p", type=_p_value)
    fmt_arg(p)

    p = sub.add_parser("gen", help="synthetic graph with planted communities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=int, default=2)
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--communities", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.0, help="random edges per node per layer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground-truth output file")

    p = sub.add_parser("bench", help="time random queries per phase")
    graph_arg(p)
    p.add_argument("--algo", choices=ALGOS, default="ftcs-ilocal")
    p.add_argument("--index")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--k", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--seed", type=int, default=0)
    return ap


# -- helpers -------------------------------------------------------------------------

def _emit(obj, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(obj) + "\n")
        return
    rows = obj if isinstance(obj, list) else [obj]
    if fmt == "csv":
        buf = io.StringIO()
        keys = list(rows[0]) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: (" ".join(map(str, v)) if isinstance(v, list) else v) for k, v in r.items()})
        out.write(buf.getvalue())
        return
    for r in rows:
        for k, v in r.items():
            out.write(f"{k}: {' '.join(map(str, v)) if isinstance(v, list) else v}\n")
        out.write("\n")


def _load(path):
    from .graph import load_graph
    return load_graph(path)


def _parse_algo(algo: str):
    family, strat = algo.split("-", 1)
    use_index = strat.startswith("i")
    if use_index:
        strat = strat[1:]
    structure = "firmtruss" if family == "ftcs" else "firmcore"
    return structure, strat, use_index


def _load_index(graph, structure, path, build_if_missing):
    if path:
        if structure == "firmtruss":
            from .firmtruss import index_read
            # a per-schema table makes each lookup O(1) for every later query
            return index_read(path).schema_table(graph)
        from .firmcore import SkylineCoreness
        return SkylineCoreness.read(path, graph)
    if not build_if_missing:
        return None
    print("no --index given; building one in memory", file=sys.stderr)
    if structure == "firmtruss":
        from .firmtruss import firmtruss_decomposition
        return firmtruss_decomposition(graph).schema_table(graph)
    from .firmcore import firmcore_decomposition
    return firmcore_decomposition(graph)


def _node_ids(graph, labels):
    ids = []
    for lab in labels:
        if lab not in graph.node_index:
            raise DomainError(f"query node {lab!r} not in graph")
        ids.append(graph.node_index[lab])
    return ids


def _search(graph, args, algo, index, query_ids):
    from .search import SearchParams, community_search
    structure, strat, use_index = _parse_algo(algo)
    params = SearchParams(args.k, args.lam, tuple(query_ids), structure, strat,
                          use_index=index is not None, index=index,
                          diameter_mode=getattr(args, "diameter_mode", "bound"),
                          diameter_cap=getattr(args, "diameter_cap", 2000))
    return community_search(graph, params)


# -- subcommands -----------------------------------------------------------------------

def cmd_stats(args):
    g = _load(args.graph)
    _emit({"nodes": g.n, "layers": g.num_layers, "edges": g.num_edges, "edge_schemas": g.num_schemas,
           "layer_edges": g.layer_sizes(), "self_loops_dropped": g.self_loops,
           "duplicates_merged": g.duplicates}, args.format)
    return EXIT_OK


def cmd_decompose(args):
    t0 = time.perf_counter()
    g = _load(args.graph)
    t1 = time.perf_counter()
    if args.mode == "firmtruss":
        from .firmtruss import firmtruss_decomposition, index_export_json, index_write
        idx = firmtruss_decomposition(g)
        t2 = time.perf_counter()
        index_write(idx, args.out)
        if args.json:
            index_export_json(idx, g, args.json)
    else:
        from .firmcore import firmcore_decomposition
        idx = firmcore_decomposition(g)
        t2 = time.perf_counter()
        idx.write(args.out)
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(idx.to_json(), fh)
    _emit({"mode": args.mode, "entries": len(idx.pairs) if args.mode == "firmtruss" else len(idx.sky),
           "out": args.out, "bytes": os.path.getsize(args.out),
           "load_s": round(t1 - t0, 3), "decompose_s": round(t2 - t1, 3),
           "total_s": round(time.perf_counter() - t0, 3)}, "json")
    return EXIT_OK


def cmd_search(args):
    g = _load(args.graph)
    structure, _, use_index = _parse_algo(args.algo)
    q = _node_ids(g, _queries(args.query))
    index = _load_index(g, structure, args.index, use_index)
    comm = _search(g, args, args.algo, index, q)
    _emit(comm.to_json(g), args.format)
    return EXIT_OK


def cmd_asearch(args):
    from .attributed import HomophilyContext, aftcs_approx
    from .graph import load_attributes
    g = _load(args.graph)
    q = _node_ids(g, _queries(args.query))
    attrs = load_attributes(args.attributes, g)
    ctx = HomophilyContext(attrs, args.p)
    comm = aftcs_approx(g, ctx, args.k, args.lam, q, args.structure)
    _emit(comm.to_json(g), args.format)
    return EXIT_OK


def cmd_eval(args):
    from .graph import load_ground_truth
    from .metrics import density, f1_score
    g = _load(args.graph)
    truth = load_ground_truth(args.ground_truth, g)
    structure, _, use_index = _parse_algo(args.algo)
    index = _load_index(g, structure, args.index, use_index)
    fixed = _node_ids(g, _queries(args.query)) if args.query else None
    rows = []
    for i, comm_truth in enumerate(truth):
        if not comm_truth:
            continue
        q = fixed or [min(comm_truth)]
        try:
            c = _search(g, args, args.algo, index, q)
            nodes = c.nodes
            row = {"community": i, "query": [g.node_labels[x] for x in q], "F1": round(f1_score(nodes, comm_truth), 6),
                   "density": round(density(g, nodes, args.beta, c.schemas), 6),
                   "diameter": c.diameter, "size": len(nodes)}
        except NoCommunity:
            row = {"community": i, "query": [g.node_labels[x] for x in q], "F1": 0.0, "density": 0.0,
                   "diameter": None, "size": 0}
        rows.append(row)
    _emit(rows, args.format)
    return EXIT_OK


def cmd_oracle(args):
    from .oracle import OracleBudget, brute_max_homophily, brute_min_diameter_community
    g = _load(args.graph)
    q = _node_ids(g, _queries(args.query))
    budget = OracleBudget(max_nodes=args.budget, timeout=args.timeout, max_layers=max(3, g.num_layers))
    if args.attributes:
        from .graph import load_attributes
        if args.p is None:
            raise DomainError("--attributes needs --p")
        attrs = load_attributes(args.attributes, g)
        res = brute_max_homophily(g, {v: attrs.vector(v).tolist() for v in range(g.n)},
                                  args.k, args.lam, q, args.p, args.structure, budget)
        key = "homophily_score"
    else:
        res = brute_min_diameter_community(g, args.k, args.lam, q, args.structure, budget)
        key = "diameter"
    if res is None:
        raise NoCommunity("no feasible subgraph")
    _emit({"structure": args.structure, "k": args.k, "lambda": args.lam,
           "query": [g.node_labels[x] for x in q], "nodes": g.labels(res.nodes), key: res.value,
           "optima": [g.labels(o) for o in res.optima]}, args.format)
    return EXIT_OK


def cmd_gen(args):
    from .synth import generate_edges, write_synthetic
    edges, truth = generate_edges(args.n, args.layers, (args.k, args.lam, args.size), args.noise,
                                  args.seed, args.communities)
    write_synthetic(edges, truth, args.out, args.truth)
    _emit({"edges": int(len(edges)), "communities": len(truth), "out": args.out}, "json")
    return EXIT_OK


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FIRMML_THREADS", "1")))
    except ValueError:
        return 1


def cmd_bench(args):
    t0 = time.perf_counter()
    g = _load(args.graph)
    t1 = time.perf_counter()
    structure, _, use_index = _parse_algo(args.algo)
    index = _load_index(g, structure, args.index, use_index)
    t2 = time.perf_counter()
    rng = random.Random(args.seed)
    jobs = []
    if structure == "firmtruss" and index is not None:
        table = index
        cand = [s for s, sk in enumerate(table) if sk and (args.k is None or any(
            kk >= args.k and ll >= (args.lam or 1) for kk, ll in sk))]
        for _ in range(args.queries):
            s = rng.choice(cand)
            kk, ll = rng.choice(table[s])
            k = args.k if args.k is not None else kk
            lam = args.lam if args.lam is not None else ll
            jobs.append((k, lam, rng.choice((g.su[s], g.sv[s]))))
    else:
        nodes = [v for v in range(g.n) if g.nbrs[v]]
        for _ in range(args.queries):
            jobs.append((args.k if args.k is not None else (2 if structure == "firmtruss" else 1),
                         args.lam or 1, rng.choice(nodes)))

    def run(job):
        k, lam, q = job
        ns = argparse.Namespace(k=k, lam=lam, diameter_mode="bound", diameter_cap=2000)
        s = time.perf_counter()
        try:
            c = _search(g, ns, args.algo, index, [q])
            ph, size = c.phases, len(c.nodes)
        except NoCommunity:
            ph, size = {}, 0
        return time.perf_counter() - s, ph, size

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(run, jobs))
    times = [r[0] for r in results]
    phase_tot = {}
    for _, ph, _ in results:
        for k_, v in ph.items():
            phase_tot[k_] = phase_tot.get(k_, 0.0) + v
    _emit({"algo": args.algo, "queries": len(jobs), "load_s": round(t1 - t0, 3),
           "index_s": round(t2 - t1, 3),
           "median_query_s": round(statistics.median(times), 6) if times else None,
           "max_query_s": round(max(times), 6) if times else None,
           "mean_size": round(statistics.mean(r[2] for r in results), 2) if results else None,
           "phase_totals_s": {k_: round(v, 4) for k_, v in phase_tot.items()},
           "threads": _threads()}, "json")
    return EXIT_OK


COMMANDS = {"stats": cmd_stats, "decompose": cmd_decompose, "search": cmd_search, "asearch": cmd_asearch,
            "eval": cmd_eval, "oracle": cmd_oracle, "gen": cmd_gen, "bench": cmd_bench}


def dispatch(argv=None) -> int:
    parser = build_parser()
    raw = list(sys.argv[1:] if argv is None else argv)
    # let "--p -inf" through; argparse would read "-inf" as an option
    argv, i = [], 0
    while i < len(raw):
        if raw[i] == "--p" and i + 1 < len(raw) and raw[i + 1].startswith("-"):
            argv.append(f"--p={raw[i + 1]}")
            i += 2
        else:
            argv.append(raw[i])
            i += 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.cmd](args)
    except NoCommunity as e:
        print(f"no community: {e}", file=sys.stderr)
        _emit({"nodes": []}, "json")
        return EXIT_EMPTY
    except IndexError_ as e:
        print(f"index error: {e}", file=sys.stderr)
        return EXIT_INDEX
    except (ParseError, DomainError, FirmError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
