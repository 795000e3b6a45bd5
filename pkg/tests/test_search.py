import math
import random

import pytest
from conftest import clique_layers, random_graph

from firmml import (DomainError, MultilayerGraph, NoCommunity, QueryNotContained, SearchParams, community_search,
                    fccs_global, fccs_local, firmtruss_decomposition, ftcs_global, ftcs_local, maximal_firmcore,
                    maximal_firmtruss, query_distance, validate_community)
from firmml.errors import QuerySplit
from firmml.firmcore import firmcore_decomposition
from firmml.oracle import brute_min_diameter_community, layer_edge_sets, naive_query_distance


def two_cliques_bridged():
    # two 4-cliques in both layers joined by the triangle 3-4-5 in layer 0
    edges = clique_layers(4, 2) + clique_layers(4, 2, offset=5) + [(0, 3, 4), (0, 4, 5), (0, 3, 5)]
    return MultilayerGraph.from_edges(edges)


def test_params_validation(two_layer_k5):
    with pytest.raises(DomainError):
        community_search(two_layer_k5, SearchParams(4, 3, (0,)))
    with pytest.raises(DomainError):
        community_search(two_layer_k5, SearchParams(1, 1, (0,)))
    with pytest.raises(DomainError):
        community_search(two_layer_k5, SearchParams(3, 1, ()))
    with pytest.raises(DomainError):
        community_search(two_layer_k5, SearchParams(3, 1, (0,), strategy="magic"))
    with pytest.raises(DomainError):
        community_search(two_layer_k5, SearchParams(3, 1, (0,), use_index=True))


def test_clique_is_its_own_answer(two_layer_k5):
    for fn in (ftcs_global, ftcs_local):
        c = fn(two_layer_k5, SearchParams(5, 2, (0,)))
        assert c.nodes == set(range(5))
        assert c.query_distance == 1 and c.diameter == 1
        assert not validate_community(two_layer_k5, c)


def test_free_rider_dropped():
    g = two_cliques_bridged()
    q = g.node_id(0)
    g0, _ = maximal_firmtruss(g, 3, 1, [q])
    c = ftcs_global(g, SearchParams(3, 1, (q,)))
    assert c.nodes < g0
    assert {g.node_id(x) for x in range(4)} <= c.nodes
    assert c.query_distance <= 2


def test_no_community():
    g = MultilayerGraph.from_edges([(0, 0, 1), (0, 1, 2)], layers=[0, 1])
    for fn in (ftcs_global, ftcs_local):
        with pytest.raises(NoCommunity):
            fn(g, SearchParams(3, 1, (0,)))
    with pytest.raises(QuerySplit):
        fccs_global(MultilayerGraph.from_edges([(0, 0, 1), (0, 2, 3)]), SearchParams(1, 1, (0, 2)))
    with pytest.raises(QueryNotContained):
        fccs_global(g, SearchParams(3, 1, (0,)))
    with pytest.raises(NoCommunity):
        fccs_local(g, SearchParams(3, 1, (0,)))


def test_core_k0_single_query():
    g = random_graph(1, n=8, layers=2, p=0.4)
    c = fccs_global(g, SearchParams(0, 1, (3,)))
    assert c.nodes == {3} and c.query_distance == 0


def test_trace_records_iterations():
    g = random_graph(12, n=12, layers=2, p=0.5)
    c = ftcs_global(g, SearchParams(3, 1, (0,)))
    assert c.iterations == len(c.trace) >= 1
    assert {"d", "ok", "d_min", "d_max", "size"} <= set(c.trace[0])


def test_json_fields(two_layer_k5):
    c = ftcs_global(two_layer_k5, SearchParams(4, 2, (0,)))
    doc = c.to_json(two_layer_k5)
    for key in ("algorithm", "k", "lambda", "query", "nodes", "query_distance", "diameter", "elapsed_ms",
                "iterations"):
        assert key in doc
    assert doc["algorithm"] == "ftcs-global"
    assert doc["nodes"] == [0, 1, 2, 3, 4]


def instances(structure, count, seed0=0):
    rng = random.Random(seed0)
    out = []
    while len(out) < count:
        g = random_graph(rng.randrange(10**6), n=rng.randint(6, 10), layers=rng.randint(1, 3), p=0.45)
        lam = rng.randint(1, g.num_layers)
        k = rng.choice((3, 4)) if structure == "firmtruss" else rng.choice((1, 2, 3))
        q = rng.randrange(g.n)
        try:
            (maximal_firmtruss if structure == "firmtruss" else maximal_firmcore)(g, k, lam, [q])
        except NoCommunity:
            continue
        out.append((g, k, lam, (q,)))
    return out


@pytest.mark.parametrize("structure", ["firmtruss", "firmcore"])
def test_strategies_agree_and_are_valid(structure):
    for g, k, lam, Q in instances(structure, 25, seed0=7):
        ref = None
        for strategy in ("global", "local", "hybrid"):
            c = community_search(g, SearchParams(k, lam, Q, structure=structure, strategy=strategy))
            assert not validate_community(g, c)
            if ref is None:
                ref = c
            assert (c.nodes, c.query_distance) == (ref.nodes, ref.query_distance)


@pytest.mark.parametrize("structure", ["firmtruss", "firmcore"])
def test_result_minimizes_query_distance(structure):
    # no feasible community has a smaller query distance than the one returned
    for g, k, lam, Q in instances(structure, 12, seed0=11):
        c = community_search(g, SearchParams(k, lam, Q, structure=structure))
        edges = layer_edge_sets(g)
        qd = naive_query_distance(c.nodes, [{e for e in es if e[0] in c.nodes and e[1] in c.nodes} for es in edges], Q)
        assert qd == c.query_distance
        opt = brute_min_diameter_community(g, k, lam, Q, structure)
        for H in opt.optima:
            sub = [{e for e in es if e[0] in H and e[1] in H} for es in edges]
            assert naive_query_distance(H, sub, Q) >= c.query_distance


@pytest.mark.parametrize("structure", ["firmtruss", "firmcore"])
def test_diameter_within_provable_factor(structure):
    # with one extra layer switch allowed per joined path the guarantee is 2*D + 1
    for g, k, lam, Q in instances(structure, 12, seed0=13):
        c = community_search(g, SearchParams(k, lam, Q, structure=structure, diameter_mode="exact"))
        opt = brute_min_diameter_community(g, k, lam, Q, structure)
        assert c.diameter <= 2 * opt.value + 1


def test_index_variants_match():
    rng = random.Random(3)
    for _ in range(8):
        g = random_graph(rng.randrange(10**6), n=12, layers=3, p=0.5)
        tidx = firmtruss_decomposition(g)
        cidx = firmcore_decomposition(g)
        for structure, idx, k in (("firmtruss", tidx, 3), ("firmcore", cidx, 2)):
            q = rng.randrange(g.n)
            for strategy in ("global", "local", "hybrid"):
                try:
                    ref = community_search(g, SearchParams(k, 1, (q,), structure=structure, strategy=strategy))
                except NoCommunity:
                    with pytest.raises(NoCommunity):
                        community_search(g, SearchParams(k, 1, (q,), structure=structure, strategy=strategy,
                                                         use_index=True, index=idx))
                    continue
                c = community_search(g, SearchParams(k, 1, (q,), structure=structure, strategy=strategy,
                                                     use_index=True, index=idx))
                assert (c.nodes, c.query_distance) == (ref.nodes, ref.query_distance)


def test_multi_query():
    g = two_cliques_bridged()
    Q = (g.node_id(0), g.node_id(7))
    for fn in (ftcs_global, ftcs_local):
        c = fn(g, SearchParams(2, 1, Q))
        assert set(Q) <= c.nodes
        assert c.query_distance == query_distance(g, c.nodes, c.nodes, Q)


def test_diameter_bound_mode():
    g = random_graph(4, n=12, layers=2, p=0.6)
    c = ftcs_global(g, SearchParams(3, 1, (0,), diameter_cap=1))
    assert not c.diameter_exact and c.diameter == 2 * c.query_distance + 1
    exact = ftcs_global(g, SearchParams(3, 1, (0,), diameter_mode="exact"))
    assert exact.diameter_exact and exact.diameter <= c.diameter
    assert not math.isinf(exact.diameter)
