import itertools
import random

import pytest
from conftest import clique_layers, random_graph, small_graphs
from hypothesis import given, settings

from firmml import (CorruptIndex, DomainError, IndexMismatch, MultilayerGraph, NoCommunity, connected_component,
                    dominates, firmtruss_decomposition, index_maximal_firmtruss, index_read, index_write,
                    layer_supports, maintain_firmtruss, maximal_firmtruss)
from firmml.firmtruss import SkylineIndex, TrussPeeler, firmtruss_peeler, truss_levels
from firmml.oracle import brute_firm_subgraph, enumerate_firm_subgraph, layer_edge_sets


def brute_supports(g):
    edges = layer_edge_sets(g)
    out = {}
    for s in range(g.num_schemas):
        u, v = g.su[s], g.sv[s]
        out[s] = [sum(1 for w in range(g.n) if (u, v) in es
                      and (min(u, w), max(u, w)) in es and (min(v, w), max(v, w)) in es) for es in edges]
    return out


def test_supports_small(triangle):
    assert set(map(tuple, layer_supports(triangle).values())) == {(1,)}
    k4 = MultilayerGraph.from_edges(clique_layers(4, 1))
    assert all(v == [2] for v in layer_supports(k4).values())


@pytest.mark.parametrize("seed", range(8))
def test_supports_match_brute_force(seed):
    g = random_graph(seed, n=12, layers=3, p=0.45)
    assert layer_supports(g) == brute_supports(g)


def test_supports_within_subset():
    g = random_graph(3, n=12, layers=2, p=0.6)
    sub = frozenset(range(7))
    h = MultilayerGraph.from_edges([(l, g.su[s], g.sv[s]) for s in range(g.num_schemas) for l in g.schema_layers(s)
                                    if g.su[s] in sub and g.sv[s] in sub], nodes=range(g.n), layers=range(2))
    ref = brute_supports(h)
    got = layer_supports(g, sub)
    assert {(g.su[s], g.sv[s]): v for s, v in got.items()} == {(h.su[s], h.sv[s]): v for s, v in ref.items()}


def test_maximal_firmtruss_examples(two_layer_k5):
    nodes, schemas = maximal_firmtruss(two_layer_k5, 4, 2, [0])
    assert nodes == set(range(5)) and len(schemas) == 10
    g = random_graph(8, n=10, layers=1, p=0.4)
    q = next(v for v in range(g.n) if g.nbrs[v])
    nodes, schemas = maximal_firmtruss(g, 2, 1, [q])
    assert nodes == connected_component(g, None, [q])
    with pytest.raises(DomainError):
        maximal_firmtruss(g, 1, 1, [q])
    with pytest.raises(NoCommunity):
        maximal_firmtruss(two_layer_k5, 6, 2, [0])


def test_k2_needs_presence_in_lambda_layers():
    g = MultilayerGraph.from_edges([(0, 0, 1), (1, 1, 2), (0, 1, 2)])
    nodes, schemas = maximal_firmtruss(g, 2, 2, [1])
    assert nodes == {1, 2}
    assert schemas == {g.schema_id(1, 2)}


@pytest.mark.parametrize("seed", range(10))
def test_maximal_firmtruss_matches_fixpoint(seed):
    g = random_graph(seed + 50, n=11, layers=3, p=0.45)
    for k in (2, 3, 4, 5):
        for lam in (1, 2, 3):
            nodes, schemas = brute_firm_subgraph(g, k, lam, "firmtruss")
            for q in (0, 6):
                if q not in nodes:
                    with pytest.raises(NoCommunity):
                        maximal_firmtruss(g, k, lam, [q])
                    continue
                comp = connected_component(g, nodes, [q], schemas)
                got_nodes, got_schemas = maximal_firmtruss(g, k, lam, [q])
                assert got_nodes == comp
                assert got_schemas == {s for s in schemas if g.su[s] in comp}


@given(small_graphs(max_nodes=6, max_layers=2))
@settings(max_examples=40, deadline=None)
def test_peeler_matches_schema_enumeration(g):
    if g.num_schemas > 12:
        return
    for lam in range(1, g.num_layers + 1):
        for k in (2, 3, 4):
            nodes, schemas = enumerate_firm_subgraph(g, k, lam, "firmtruss")
            p = TrussPeeler(g, k, lam)
            assert (p.vertices, p.schemas) == (nodes, schemas)


@pytest.mark.parametrize("seed", range(4))
def test_uniqueness_under_shuffled_orders(seed):
    g = random_graph(seed + 60, n=10, layers=2, p=0.55)
    ref = TrussPeeler(g, 4, 2)
    rng = random.Random(seed)
    for _ in range(10):
        nodes, schemas = brute_firm_subgraph(g, 4, 2, "firmtruss", rng)
        assert (nodes, schemas) == (ref.vertices, ref.schemas)


def test_maintain_examples(two_layer_k5):
    p = firmtruss_peeler(two_layer_k5, 4, 2, [0])
    before = (p.vertices, p.schemas)
    maintain_firmtruss(p, [])
    assert (p.vertices, p.schemas) == before
    # a 5-clique minus two nodes is a triangle, too sparse for k=4
    maintain_firmtruss(p, [3])
    assert len(p.vertices) == 4
    maintain_firmtruss(p, [4])
    assert p.vertices == frozenset()


@pytest.mark.parametrize("seed", range(8))
def test_maintain_matches_fresh(seed):
    g = random_graph(seed + 70, n=12, layers=3, p=0.55)
    rng = random.Random(seed)
    for k, lam in ((3, 1), (3, 2), (4, 2)):
        p = TrussPeeler(g, k, lam)
        removed = set()
        for _ in range(3):
            vs = rng.sample(range(g.n), 2)
            removed.update(vs)
            maintain_firmtruss(p, vs)
            fresh = TrussPeeler(g, k, lam, frozenset(range(g.n)) - removed)
            assert (p.vertices, p.schemas) == (fresh.vertices, fresh.schemas)


def test_decomposition_examples(two_layer_k5):
    idx = firmtruss_decomposition(two_layer_k5)
    assert set(map(tuple, idx.pairs.values())) == {((5, 2),)}
    g = MultilayerGraph.from_edges([(0, 0, 1), (0, 1, 2), (0, 0, 2)], layers=[0, 1])
    idx = firmtruss_decomposition(g)
    assert all(p == [(3, 1)] for p in idx.pairs.values())
    assert truss_levels(g, 2).tolist() == [1, 1, 1]


@pytest.mark.parametrize("seed", range(12))
def test_decomposition_matches_grid(seed):
    g = random_graph(seed + 80, n=12, layers=3, p=0.4)
    idx = firmtruss_decomposition(g)
    table = idx.schema_table(g)
    for lam in (1, 2, 3):
        for k in range(2, 12):
            _, schemas = brute_firm_subgraph(g, k, lam, "firmtruss")
            got = {s for s in range(g.num_schemas) if any(dominates(p, (k, lam)) for p in table[s])}
            assert got == schemas


def test_decomposition_pairs_valid():
    g = random_graph(5, n=12, layers=3, p=0.5)
    for pairs in firmtruss_decomposition(g).pairs.values():
        assert pairs
        for k, lam in pairs:
            assert k >= 2 and 1 <= lam <= 3
        for a, b in itertools.permutations(pairs, 2):
            assert not dominates(a, b)


def test_dominates():
    assert dominates((5, 2), (4, 2))
    assert not dominates((5, 1), (4, 2)) and not dominates((4, 2), (5, 1))
    assert dominates((3, 3), (3, 3))


def test_index_lookup_examples(two_layer_k5):
    idx = firmtruss_decomposition(two_layer_k5)
    nodes, schemas = index_maximal_firmtruss(two_layer_k5, idx, 4, 2, [0])
    assert nodes == set(range(5)) and len(schemas) == 10
    with pytest.raises(NoCommunity):
        index_maximal_firmtruss(two_layer_k5, idx, 6, 2, [0])


@pytest.mark.parametrize("seed", range(6))
def test_index_lookup_matches_online(seed):
    g = random_graph(seed + 90, n=12, layers=3, p=0.5)
    idx = firmtruss_decomposition(g)
    rng = random.Random(seed)
    for _ in range(20):
        k, lam, q = rng.randint(2, 6), rng.randint(1, 3), rng.randrange(g.n)
        try:
            ref = maximal_firmtruss(g, k, lam, [q])
        except NoCommunity:
            with pytest.raises(NoCommunity):
                index_maximal_firmtruss(g, idx, k, lam, [q])
            continue
        assert index_maximal_firmtruss(g, idx, k, lam, [q]) == ref


def test_index_roundtrip(tmp_path, two_layer_k5):
    empty = SkylineIndex(0, 0, 0, {})
    index_write(empty, tmp_path / "e.ftsi")
    assert index_read(tmp_path / "e.ftsi") == empty
    idx = firmtruss_decomposition(two_layer_k5)
    index_write(idx, tmp_path / "k5.ftsi")
    assert index_read(tmp_path / "k5.ftsi") == idx
    data = (tmp_path / "k5.ftsi").read_bytes()
    assert data[:4] == b"FTSI"
    (tmp_path / "cut.ftsi").write_bytes(data[:-5])
    with pytest.raises(CorruptIndex):
        index_read(tmp_path / "cut.ftsi")
    (tmp_path / "magic.ftsi").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(CorruptIndex):
        index_read(tmp_path / "magic.ftsi")
    flipped = bytearray(data)
    flipped[30] ^= 1
    (tmp_path / "flip.ftsi").write_bytes(bytes(flipped))
    with pytest.raises(CorruptIndex):
        index_read(tmp_path / "flip.ftsi")


def test_index_mismatch(two_layer_k5):
    idx = firmtruss_decomposition(two_layer_k5)
    other = MultilayerGraph.from_edges(clique_layers(5, 2) + [(0, 0, 9)])
    with pytest.raises(IndexMismatch):
        index_maximal_firmtruss(other, idx, 3, 1, [0])


def test_json_export(two_layer_k5):
    idx = firmtruss_decomposition(two_layer_k5)
    doc = idx.to_json(two_layer_k5)
    assert doc["0,1"] == [[5, 2]]
