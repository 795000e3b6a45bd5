"""FirmCore extraction, skyline coreness, and the generic node-property fixpoint.

A (k, lam)-FirmCore is the maximal induced subgraph in which every node has
degree at least k in at least lam layers, i.e. Top-lam degree >= k.
"""
from __future__ import annotations

import heapq
import json
from collections.abc import Callable, Iterable
from dataclasses import dataclass

from .errors import DomainError, NoCommunity, QueryNotContained
from .graph import MultilayerGraph, SubgraphView, connected_component


# -- dominance / skyline helpers (shared with the truss index) --------------

def dominates(p1: tuple[int, int], p2: tuple[int, int]) -> bool:
    """True when p1 = (k1, lam1) dominates p2: k1 >= k2 and lam1 >= lam2."""
    return p1[0] >= p2[0] and p1[1] >= p2[1]


def skyline_from_levels(levels: Iterable[tuple[int, int]], min_k: int = 0) -> list[tuple[int, int]]:
    """Reduce (k, lam) pairs to the non-dominated ones, sorted by lam ascending.

    Pairs with k below ``min_k`` are ignored.
    """
    pairs = sorted({p for p in levels if p[0] >= min_k}, key=lambda p: (-p[1], -p[0]))
    out = []
    best_k = None
    for k, lam in pairs:  # lam descending; keep a pair only if it beats every larger lam
        if best_k is None or k > best_k:
            out.append((k, lam))
            best_k = k
    out.reverse()
    return out


def _check_lambda(graph: MultilayerGraph, lam: int):
    if not 1 <= lam <= graph.num_layers:
        raise DomainError(f"lambda={lam} outside 1..{graph.num_layers}")


# -- generic property engine -------------------------------------------------

@dataclass(frozen=True)
class NodeProperty:
    """Boolean per-(subset, node, layer) predicate."""
    fn: Callable[[SubgraphView, int, int], bool]
    monotone: bool = True
    name: str = "property"

    def __call__(self, view, v, l):
        return bool(self.fn(view, v, l))


def degree_property(k: int) -> NodeProperty:
    return NodeProperty(lambda view, v, l: len(view.neighbors(l, v)) >= k, True, f"deg>={k}")


def property_support(graph, subset, f: NodeProperty, v: int) -> int:
    view = graph if isinstance(graph, SubgraphView) else SubgraphView(graph, subset)
    if v not in view.nodes:
        raise DomainError(f"node {v} not in subset")
    return sum(1 for l in range(view.graph.num_layers) if f(view, v, l))


def firm_fixpoint(graph: MultilayerGraph, properties: list[tuple[NodeProperty, int]], subset=None) -> frozenset[int]:
    """Largest node set where each node meets every property in >= lam_i layers."""
    alive = set(graph.all_nodes() if subset is None else subset)
    changed = True
    while changed:
        changed = False
        view = SubgraphView(graph, alive)
        bad = [v for v in sorted(alive)
               if any(property_support(view, None, f, v) < lam for f, lam in properties)]
        if bad:
            alive.difference_update(bad)
            changed = True
    return frozenset(alive)


# -- peeling state ------------------------------------------------------------

class CorePeeler:
    """Maintains the (k, lam)-FirmCore of an induced subgraph under node deletion.

    Top-lam degrees are only recomputed when the decremented layer attains
    the current Top-lam value; otherwise the value cannot change.
    """

    structure = "firmcore"

    def __init__(self, graph: MultilayerGraph, k: int, lam: int, nodes=None):
        _check_lambda(graph, lam)
        if k < 0:
            raise DomainError("k must be >= 0")
        self.graph, self.k, self.lam = graph, k, lam
        nodes = graph.all_nodes() if nodes is None else nodes
        self.alive: set[int] = set(nodes)
        nl = graph.num_layers
        adj = graph.adj
        alive = self.alive
        self.deg: dict[int, list[int]] = {}
        self.top: dict[int, int] = {}
        for v in alive:
            d = [sum(1 for w in adj[l][v] if w in alive) for l in range(nl)]
            self.deg[v] = d
            self.top[v] = sorted(d, reverse=True)[lam - 1]
        self.removed_total = 0
        self._cascade([v for v in alive if self.top[v] < k])

    def copy(self) -> CorePeeler:
        c = object.__new__(CorePeeler)
        c.graph, c.k, c.lam = self.graph, self.k, self.lam
        c.alive = set(self.alive)
        c.deg = {v: list(d) for v, d in self.deg.items() if v in self.alive}
        c.top = {v: self.top[v] for v in c.alive}
        c.removed_total = self.removed_total
        return c

    def _cascade(self, seeds):
        adj, nl, k, lam = self.graph.adj, self.graph.num_layers, self.k, self.lam
        alive, deg, top = self.alive, self.deg, self.top
        stack = [v for v in seeds if v in alive]
        for v in stack:
            alive.discard(v)
        while stack:
            v = stack.pop()
            self.removed_total += 1
            for l in range(nl):
                for w in adj[l][v]:
                    if w in alive:
                        d = deg[w]
                        old = d[l]
                        d[l] = old - 1
                        if old == top[w]:
                            t = sorted(d, reverse=True)[lam - 1]
                            top[w] = t
                            if t < k:
                                alive.discard(w)
                                stack.append(w)

    def delete_vertices(self, vs) -> None:
        self._cascade([v for v in vs if v in self.alive])

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.alive)

    @property
    def schemas(self):
        return None

    def view(self) -> SubgraphView:
        return SubgraphView(self.graph, self.alive)

    def restrict_to_component(self, Q) -> frozenset[int]:
        comp = connected_component(self.view(), None, Q)
        drop = self.alive - comp
        if drop:
            # other components share no edges with comp, so no cascade needed
            self.alive.intersection_update(comp)
        return comp


def maximal_firmcore(graph: MultilayerGraph, k: int, lam: int, Q) -> frozenset[int]:
    """Connected component containing Q of the maximal (k, lam)-FirmCore."""
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    peeler = CorePeeler(graph, k, lam)
    for q in Q:
        if q not in peeler.alive:
            raise QueryNotContained(f"query node {q} is not in the ({k},{lam})-FirmCore")
    return peeler.restrict_to_component(Q)


def firmcore_peeler(graph, k, lam, Q, nodes=None) -> CorePeeler:
    """Peeler restricted to Q's component of the FirmCore of G[nodes]."""
    peeler = CorePeeler(graph, k, lam, nodes)
    for q in Q:
        if q not in peeler.alive:
            raise QueryNotContained(f"query node {q} is not in the ({k},{lam})-FirmCore")
    peeler.restrict_to_component(Q)
    return peeler


# -- decomposition --------------------------------------------------------------

def core_levels(graph: MultilayerGraph, lam: int, nodes=None) -> dict[int, int]:
    """For each node, the largest k with the node inside the (k, lam)-FirmCore."""
    _check_lambda(graph, lam)
    adj, nl = graph.adj, graph.num_layers
    alive = set(graph.all_nodes() if nodes is None else nodes)
    deg = {}
    key = {}
    heap = []
    for v in alive:
        d = [sum(1 for w in adj[l][v] if w in alive) for l in range(nl)]
        deg[v] = d
        key[v] = sorted(d, reverse=True)[lam - 1]
        heap.append((key[v], v))
    heapq.heapify(heap)
    level = {}
    k = 0
    while heap:
        kv, v = heapq.heappop(heap)
        if v not in alive or kv != key[v]:
            continue
        k = max(k, kv)
        level[v] = k
        alive.discard(v)
        for l in range(nl):
            for w in adj[l][v]:
                if w in alive:
                    d = deg[w]
                    old = d[l]
                    d[l] = old - 1
                    if old == key[w]:
                        t = sorted(d, reverse=True)[lam - 1]
                        if t != key[w]:
                            key[w] = t
                            heapq.heappush(heap, (t, w))
    return level


class SkylineCoreness:
    """Per node, the non-dominated (k, lam) FirmCore memberships."""

    def __init__(self, graph: MultilayerGraph, sky: dict[int, list[tuple[int, int]]]):
        self.graph = graph
        self.sky = sky
        self.fingerprint = graph.fingerprint()

    def pairs(self, v: int) -> list[tuple[int, int]]:
        return self.sky.get(v, [])

    def contains(self, v: int, k: int, lam: int) -> bool:
        return any(kk >= k and ll >= lam for kk, ll in self.sky.get(v, ()))

    def to_json(self) -> dict:
        g = self.graph
        return {str(g.node_labels[v]): [list(p) for p in self.sky[v]] for v in sorted(self.sky)}

    def write(self, path) -> None:
        doc = {"format": "firmcore-skyline", "version": 1, "fingerprint": f"{self.fingerprint:016x}",
               "num_nodes": self.graph.n, "skyline": self.to_json()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)

    @classmethod
    def read(cls, path, graph: MultilayerGraph) -> SkylineCoreness:
        from .errors import CorruptIndex, IndexMismatch
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            if doc.get("format") != "firmcore-skyline" or doc.get("version") != 1:
                raise CorruptIndex("not a FirmCore skyline file")
            fp = int(doc["fingerprint"], 16)
            raw = doc["skyline"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise CorruptIndex(f"unreadable skyline file: {e}") from None
        if fp != graph.fingerprint() or doc.get("num_nodes") != graph.n:
            raise IndexMismatch("skyline was built for a different graph")
        sky = {}
        for lab, pairs in raw.items():
            try:
                v = graph.node_id(lab)
            except DomainError:
                raise IndexMismatch(f"unknown node {lab!r} in skyline") from None
            sky[v] = [tuple(p) for p in pairs]
        return cls(graph, sky)


def firmcore_decomposition(graph: MultilayerGraph) -> SkylineCoreness:
    nl = graph.num_layers
    per_node: dict[int, list[tuple[int, int]]] = {v: [] for v in range(graph.n)}
    for lam in range(1, nl + 1):
        for v, k in core_levels(graph, lam).items():
            per_node[v].append((k, lam))
    return SkylineCoreness(graph, {v: skyline_from_levels(p) for v, p in per_node.items()})


def index_maximal_firmcore(graph: MultilayerGraph, index: SkylineCoreness, k: int, lam: int, Q) -> frozenset[int]:
    """BFS from Q over nodes whose skyline dominates (k, lam)."""
    from .errors import IndexMismatch
    if index.fingerprint != graph.fingerprint():
        raise IndexMismatch("skyline was built for a different graph")
    _check_lambda(graph, lam)
    Q = list(Q)
    for q in Q:
        if not index.contains(q, k, lam):
            raise QueryNotContained(f"query node {q} is not in the ({k},{lam})-FirmCore")
    ok = {}

    def good(v):
        r = ok.get(v)
        if r is None:
            r = ok[v] = index.contains(v, k, lam)
        return r

    comp = {Q[0]}
    stack = [Q[0]]
    nbrs = graph.nbrs
    while stack:
        v = stack.pop()
        for w in nbrs[v]:
            if w not in comp and good(w):
                comp.add(w)
                stack.append(w)
    if any(q not in comp for q in Q):
        from .errors import QuerySplit
        raise QuerySplit("query nodes are in different FirmCore components")
    return frozenset(comp)
