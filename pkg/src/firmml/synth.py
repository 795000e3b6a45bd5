"""Seeded synthetic multilayer graphs with planted dense communities."""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .graph import MultilayerGraph


def generate_edges(n: int, num_layers: int, planted=(4, 2, 6), noise: float = 0.0, seed: int = 0,
                   communities: int = 1):
    """Return (edges, truth).

    ``edges`` is an int array of rows (layer, u, v) with u < v, sorted and
    deduplicated; ``truth`` lists the planted node sets.  Each planted set is
    a clique overlaid on ``lam`` randomly chosen layers, so it is a
    (k, lam)-FirmTruss whenever size >= k.  ``noise`` is the number of random
    edges per node per layer.
    """
    k, lam, size = planted
    if size < k + 1:
        raise DomainError(f"planted size {size} must be at least k+1={k + 1}")
    if not 1 <= lam <= num_layers:
        raise DomainError("planted lambda outside 1..|L|")
    if communities * size > n:
        raise DomainError("planted communities do not fit in n nodes")
    if noise < 0:
        raise DomainError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    truth = []
    chunks = []
    iu, iv = np.triu_indices(size, 1)
    for c in range(communities):
        members = np.sort(perm[c * size:(c + 1) * size])
        truth.append(members.tolist())
        layers = rng.choice(num_layers, size=lam, replace=False)
        for l in layers:
            block = np.empty((len(iu), 3), dtype=np.int64)
            block[:, 0] = l
            block[:, 1] = members[iu]
            block[:, 2] = members[iv]
            chunks.append(block)
    m = int(round(noise * n))
    for l in range(num_layers):
        if m == 0:
            break
        pairs = rng.integers(0, n, size=(m, 2))
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        pairs.sort(axis=1)
        block = np.empty((len(pairs), 3), dtype=np.int64)
        block[:, 0] = l
        block[:, 1:] = pairs
        chunks.append(block)
    edges = np.concatenate(chunks) if chunks else np.zeros((0, 3), dtype=np.int64)
    edges = np.unique(edges, axis=0)
    return edges, truth


def write_synthetic(edges: np.ndarray, truth, graph_path, truth_path=None) -> None:
    with open(graph_path, "w", encoding="utf-8") as fh:
        if len(edges):
            shown = edges.copy()
            shown[:, 0] += 1  # layer labels start at 1
            fh.write("\n".join(" ".join(map(str, r)) for r in shown.tolist()))
            fh.write("\n")
    if truth_path is not None:
        with open(truth_path, "w", encoding="utf-8") as fh:
            for members in truth:
                fh.write(" ".join(map(str, members)) + "\n")


def generate_synthetic(n: int, num_layers: int, planted=(4, 2, 6), noise: float = 0.0, seed: int = 0,
                       communities: int = 1):
    """Build the graph in memory; returns (graph, truth as node-id sets)."""
    edges, truth = generate_edges(n, num_layers, planted, noise, seed, communities)
    g = MultilayerGraph.from_edges(((str(l + 1), str(u), str(v)) for l, u, v in edges.tolist()),
                                   layers=[str(l + 1) for l in range(num_layers)])
    ids = [{g.node_index[str(x)] for x in members} for members in truth]
    return g, ids
