"""Brute-force reference implementations for small graphs.

Nothing here imports the peeling, bucket or BFS code of the main modules:
fixpoints recompute every quantity from scratch after each deletion, and
distances come from an explicitly materialised (node, layer) supra-graph.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .errors import BudgetExceeded, DomainError

INF = math.inf


@dataclass
class OracleBudget:
    max_nodes: int = 12
    max_layers: int = 3
    timeout: float | None = None
    max_schemas: int = 16

    def check(self, graph, what="graph"):
        if graph.n > self.max_nodes:
            raise BudgetExceeded(f"{what} has {graph.n} nodes > budget {self.max_nodes}")
        if graph.num_layers > self.max_layers:
            raise BudgetExceeded(f"{what} has {graph.num_layers} layers > budget {self.max_layers}")

    def deadline(self):
        return None if self.timeout is None else time.monotonic() + self.timeout


def _tick(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise BudgetExceeded("oracle timeout")


@dataclass
class OracleCommunity:
    nodes: frozenset
    schemas: frozenset | None
    value: float
    optima: list = field(default_factory=list)


# -- raw edge sets -------------------------------------------------------------------

def layer_edge_sets(graph) -> list[set[tuple[int, int]]]:
    """Per layer, the set of (u, v) pairs with u < v, read off the schema table."""
    out = [set() for _ in range(graph.num_layers)]
    for s in range(graph.num_schemas):
        u, v, m = graph.su[s], graph.sv[s], graph.smask[s]
        for l in range(graph.num_layers):
            if m >> l & 1:
                out[l].add((u, v))
    return out


def _pairs_to_layers(edges_by_layer) -> dict[tuple[int, int], set[int]]:
    pairs: dict[tuple[int, int], set[int]] = {}
    for l, es in enumerate(edges_by_layer):
        for e in es:
            pairs.setdefault(e, set()).add(l)
    return pairs


def _restrict(edges_by_layer, nodes):
    return [{(u, v) for (u, v) in es if u in nodes and v in nodes} for es in edges_by_layer]


def _kth_largest(vals, lam):
    return sorted(vals, reverse=True)[lam - 1]


# -- distances ------------------------------------------------------------------

def supra_distances(nodes, edges_by_layer, src) -> dict:
    """Distances from ``src`` on the explicit supra-graph.

    Vertices are (node, layer); intra-layer edges and same-node layer switches
    have unit cost; a virtual root reaches every copy of ``src`` at cost 0.
    """
    nl = len(edges_by_layer)
    sup = {(v, l): [] for v in nodes for l in range(nl)}
    for l, es in enumerate(edges_by_layer):
        for u, v in es:
            if u in nodes and v in nodes:
                sup[(u, l)].append((v, l))
                sup[(v, l)].append((u, l))
    for v in nodes:
        for a in range(nl):
            for b in range(nl):
                if a != b:
                    sup[(v, a)].append((v, b))
    dist = {}
    dq = deque()
    for l in range(nl):
        dist[(src, l)] = 0
        dq.append((src, l))
    while dq:
        x = dq.popleft()
        for y in sup[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                dq.append(y)
    out = {v: INF for v in nodes}
    out[src] = 0
    for (v, _), d in dist.items():
        if d < out[v]:
            out[v] = d
    return out


def naive_diameter(nodes, edges_by_layer):
    worst = 0
    for s in nodes:
        d = supra_distances(nodes, edges_by_layer, s)
        worst = max(worst, max(d.values()))
    return worst


def naive_query_distance(nodes, edges_by_layer, Q):
    worst = 0
    for q in Q:
        d = supra_distances(nodes, edges_by_layer, q)
        worst = max(worst, max(d[u] for u in nodes))
    return worst


# -- definitional fixpoints ----------------------------------------------------------

def truss_fixpoint(edges_by_layer, nl, k, lam, rng=None):
    """Delete violating schemas one at a time (order from ``rng``) until none is left.

    Returns ``{(u, v): layers}`` of surviving schemas.
    """
    pairs = _pairs_to_layers(edges_by_layer)
    while True:
        layer_sets = [{e for e, ls in pairs.items() if l in ls} for l in range(nl)]
        nodes = {x for e in pairs for x in e}
        bad = []
        for (u, v), ls in pairs.items():
            vec = []
            for l in range(nl):
                if l not in ls:
                    vec.append(-1)
                    continue
                es = layer_sets[l]
                vec.append(sum(1 for w in nodes
                               if (min(u, w), max(u, w)) in es and (min(v, w), max(v, w)) in es))
            if _kth_largest(vec, lam) < k - 2:
                bad.append((u, v))
        if not bad:
            return pairs
        victim = rng.choice(sorted(bad)) if rng is not None else min(bad)
        del pairs[victim]


def core_fixpoint(nodes, edges_by_layer, nl, k, lam, rng=None) -> set:
    alive = set(nodes)
    while True:
        bad = []
        for v in alive:
            deg = [sum(1 for (a, b) in edges_by_layer[l]
                       if (a == v and b in alive) or (b == v and a in alive)) for l in range(nl)]
            if _kth_largest(deg, lam) < k:
                bad.append(v)
        if not bad:
            return alive
        victim = rng.choice(sorted(bad)) if rng is not None else min(bad)
        alive.discard(victim)


def brute_firm_subgraph(graph, k, lam, structure="firmtruss", rng=None, budget=None):
    """Maximal (k, lam) structure by arbitrary-order deletion.

    Returns the node set for FirmCore, ``(nodes, schema ids)`` for FirmTruss.
    ``rng`` (a random.Random or int seed) randomises the deletion order.
    """
    budget = budget or OracleBudget()
    budget.check(graph)
    if not 1 <= lam <= graph.num_layers:
        raise DomainError("lambda out of range")
    if isinstance(rng, int):
        rng = random.Random(rng)
    edges = layer_edge_sets(graph)
    nl = graph.num_layers
    if structure == "firmcore":
        return frozenset(core_fixpoint(range(graph.n), edges, nl, k, lam, rng))
    if k < 2:
        raise DomainError("FirmTruss requires k >= 2")
    pairs = truss_fixpoint(edges, nl, k, lam, rng)
    nodes = frozenset(x for e in pairs for x in e)
    return nodes, frozenset(graph.schema_id(u, v) for u, v in pairs)


def enumerate_firm_subgraph(graph, k, lam, structure="firmtruss", budget=None):
    """Second, enumeration-based reference: largest subset meeting the condition.

    FirmCore enumerates node subsets; FirmTruss enumerates schema subsets.
    """
    budget = budget or OracleBudget(max_nodes=8)
    budget.check(graph)
    nl = graph.num_layers
    edges = layer_edge_sets(graph)
    if structure == "firmcore":
        best = frozenset()
        for r in range(graph.n, 0, -1):
            for sub in itertools.combinations(range(graph.n), r):
                s = set(sub)
                ok = True
                for v in sub:
                    deg = [sum(1 for (a, b) in edges[l] if (a == v and b in s) or (b == v and a in s))
                           for l in range(nl)]
                    if _kth_largest(deg, lam) < k:
                        ok = False
                        break
                if ok:
                    return frozenset(sub)
        return best
    pairs = sorted(_pairs_to_layers(edges).items())
    if len(pairs) > budget.max_schemas:
        raise BudgetExceeded(f"{len(pairs)} schemas > budget {budget.max_schemas}")
    for r in range(len(pairs), 0, -1):
        for sub in itertools.combinations(pairs, r):
            chosen = dict(sub)
            ok = True
            for (u, v), ls in chosen.items():
                vec = []
                for l in range(nl):
                    if l not in ls:
                        vec.append(-1)
                        continue
                    cnt = 0
                    for (a, b), ls2 in chosen.items():
                        # count w closing a layer-l triangle on (u, v)
                        if l in ls2 and (a, b) != (u, v) and u in (a, b):
                            w = b if a == u else a
                            if w == v:
                                continue
                            other = chosen.get((min(v, w), max(v, w)))
                            if other is not None and l in other:
                                cnt += 1
                    vec.append(cnt)
                if _kth_largest(vec, lam) < k - 2:
                    ok = False
                    break
            if ok:
                nodes = frozenset(x for e in chosen for x in e)
                return nodes, frozenset(graph.schema_id(u, v) for u, v in chosen)
    return frozenset(), frozenset()


# -- exhaustive community search ------------------------------------------------------

def _feasible_subsets(graph, k, lam, Q, structure, budget):
    """Yield (H, surviving layer edges) for every H ⊇ Q whose own maximal
    structure spans H and is connected, in ascending size."""
    budget = budget or OracleBudget()
    budget.check(graph)
    deadline = budget.deadline()
    nl = graph.num_layers
    edges = layer_edge_sets(graph)
    Q = frozenset(Q)
    rest = [v for v in range(graph.n) if v not in Q]
    for r in range(len(rest) + 1):
        for extra in itertools.combinations(rest, r):
            _tick(deadline)
            H = Q | frozenset(extra)
            sub = _restrict(edges, H)
            if structure == "firmcore":
                if core_fixpoint(H, sub, nl, k, lam) != set(H):
                    continue
                kept = sub
            else:
                if len(H) < 2:
                    continue
                pairs = truss_fixpoint(sub, nl, k, lam)
                if {x for e in pairs for x in e} != set(H):
                    continue
                kept = [{e for e, ls in pairs.items() if l in ls} for l in range(nl)]
            if len(H) > 1 and any(d == INF for d in supra_distances(H, kept, next(iter(H))).values()):
                continue
            yield H, kept


def _schema_ids(graph, kept):
    return frozenset(graph.schema_id(u, v) for es in kept for (u, v) in es)


def brute_min_diameter_community(graph, k, lam, Q, structure="firmtruss", budget=None):
    """Minimum-diameter connected structure containing Q, or None.

    ``optima`` lists every node set reaching the minimum, smallest first.
    """
    best = None
    for H, kept in _feasible_subsets(graph, k, lam, Q, structure, budget):
        d = naive_diameter(H, kept)
        if best is None or d < best.value:
            best = OracleCommunity(H, _schema_ids(graph, kept) if structure == "firmtruss" else None, d, [H])
        elif d == best.value:
            best.optima.append(H)
    return best


def cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def naive_homophily(vectors: dict, S, p, sim=cosine) -> float:
    S = list(S)
    if len(S) < 2:
        return 0.0
    agg = [sum(sim(vectors[v], vectors[u]) for u in S if u != v) for v in S]
    if p == INF:
        return max(agg)
    if p == -INF:
        return min(agg)
    if p == 0:
        if any(a == 0 for a in agg):
            return 0.0
        return math.exp(sum(math.log(a) for a in agg) / len(agg))
    if p < 0 and any(a == 0 for a in agg):
        return 0.0
    return (sum(a ** p for a in agg) / len(agg)) ** (1.0 / p)


def brute_max_homophily(graph, attrs, k, lam, Q, p, structure="firmtruss", budget=None, sim=cosine):
    """Best homophily score over all connected structures containing Q.

    ``attrs`` maps node id to a feature vector (missing nodes read as zero).
    """
    dim = len(next(iter(attrs.values()))) if attrs else 0
    vectors = {v: list(attrs.get(v, [0.0] * dim)) for v in range(graph.n)}
    best = None
    for H, kept in _feasible_subsets(graph, k, lam, Q, structure, budget):
        score = naive_homophily(vectors, H, p, sim)
        if best is None or score > best.value + 1e-12:
            best = OracleCommunity(H, _schema_ids(graph, kept) if structure == "firmtruss" else None, score, [H])
        elif abs(score - best.value) <= 1e-12:
            best.optima.append(H)
    return best


# -- connectivity -----------------------------------------------------------------

def min_intra_layer_cut(graph, subset=None, schemas=None, budget=None) -> int:
    """Fewest intra-layer edges whose removal disconnects the subset.

    A node pair joined in c layers needs all c copies cut, so the answer is
    the weighted min cut of the union graph, found as the minimum over
    max-flows from a fixed node to every other node.
    """
    if budget is not None:
        budget.check(graph)
    nodes = sorted(range(graph.n) if subset is None else subset)
    if len(nodes) < 2:
        return 0
    ns = set(nodes)
    G = nx.Graph()
    G.add_nodes_from(nodes)
    for s in range(graph.num_schemas):
        if schemas is not None and s not in schemas:
            continue
        u, v = graph.su[s], graph.sv[s]
        if u in ns and v in ns:
            G.add_edge(u, v, capacity=bin(graph.smask[s]).count("1"))
    src = nodes[0]
    best = None
    for t in nodes[1:]:
        val = nx.minimum_cut_value(G, src, t) if nx.has_path(G, src, t) else 0
        best = val if best is None else min(best, val)
    return int(best)


def exhaustive_intra_layer_cut(graph, subset=None, schemas=None, max_size=8):
    """Smallest number of (pair, layer) edges whose removal disconnects the union graph.

    Tries every edge set of size 0..max_size; returns None if none works.
    """
    nodes = sorted(range(graph.n) if subset is None else subset)
    ns = set(nodes)
    inst = []
    for s in range(graph.num_schemas):
        if schemas is not None and s not in schemas:
            continue
        u, v = graph.su[s], graph.sv[s]
        if u in ns and v in ns:
            for l in range(graph.num_layers):
                if graph.smask[s] >> l & 1:
                    inst.append((u, v, l))

    def connected(removed):
        adj = {v: set() for v in nodes}
        for i, (u, v, _) in enumerate(inst):
            if i not in removed:
                adj[u].add(v)
                adj[v].add(u)
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(nodes)

    if len(nodes) < 2:
        return 0
    for r in range(max_size + 1):
        for rem in itertools.combinations(range(len(inst)), r):
            if not connected(set(rem)):
                return r
    return None
