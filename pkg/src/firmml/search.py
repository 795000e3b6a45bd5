"""Minimum-diameter community search over FirmTruss / FirmCore structures.

All strategies locate the same object: for a distance budget d, the largest
connected structure containing Q whose query distance is at most d (feasible
sets are closed under union, so it is unique).  The smallest d admitting such
a set is searched for, and its query distance bounds the diameter within a
factor of two of the optimum.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import DomainError, NoCommunity
from .firmcore import SkylineCoreness, firmcore_peeler
from .firmtruss import SkylineIndex, _schemas_within, firmtruss_peeler, index_maximal_firmtruss
from .graph import (INF, MultilayerGraph, SubgraphView, bfs_distances, connected_component,
                    diameter, query_distance_map)

STRUCTURES = ("firmtruss", "firmcore")
STRATEGIES = ("global", "local", "hybrid")


@dataclass
class SearchParams:
    k: int
    lam: int
    Q: tuple
    structure: str = "firmtruss"
    strategy: str = "global"
    use_index: bool = False
    diameter_mode: str = "bound"
    diameter_cap: int = 2000
    index: object = None  # SkylineIndex, schema table, or SkylineCoreness

    def validate(self, graph: MultilayerGraph):
        if self.structure not in STRUCTURES:
            raise DomainError(f"unknown structure {self.structure!r}")
        if self.strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy {self.strategy!r}")
        if self.diameter_mode not in ("exact", "bound"):
            raise DomainError(f"unknown diameter mode {self.diameter_mode!r}")
        if not self.Q:
            raise DomainError("empty query set")
        for q in self.Q:
            if not 0 <= q < graph.n:
                raise DomainError(f"query node {q} not in graph")
        if not 1 <= self.lam <= graph.num_layers:
            raise DomainError(f"lambda={self.lam} outside 1..{graph.num_layers}")
        kmin = 2 if self.structure == "firmtruss" else 0
        if self.k < kmin:
            raise DomainError(f"k must be >= {kmin} for {self.structure}")
        if self.use_index and self.index is None:
            raise DomainError("use_index requires an index")


@dataclass
class Community:
    nodes: frozenset
    schemas: frozenset | None
    algorithm: str
    structure: str
    k: int
    lam: int
    query: tuple
    query_distance: float
    diameter: float | None = None
    diameter_exact: bool = True
    iterations: int = 0
    trace: list = field(default_factory=list)
    elapsed_ms: float = 0.0
    phases: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def view(self, graph) -> SubgraphView:
        return SubgraphView(graph, self.nodes, self.schemas)

    def to_json(self, graph: MultilayerGraph) -> dict:
        out = {
            "algorithm": self.algorithm,
            "k": self.k,
            "lambda": self.lam,
            "query": [graph.node_labels[q] for q in self.query],
            "nodes": graph.labels(self.nodes),
            "query_distance": _num(self.query_distance),
            "diameter": _num(self.diameter),
            "elapsed_ms": round(self.elapsed_ms, 3),
            "iterations": self.iterations,
        }
        out.update(self.extra)
        return out


def _num(x):
    if x is None or x == INF:
        return None
    return x


# -- shared machinery ---------------------------------------------------------------

class _Lazy:
    """Membership container backed by a memoised predicate."""

    def __init__(self, pred):
        self.pred = pred
        self.memo = {}

    def __contains__(self, x):
        r = self.memo.get(x)
        if r is None:
            r = self.memo[x] = self.pred(x)
        return r


class _Engine:
    def __init__(self, graph: MultilayerGraph, params: SearchParams):
        params.validate(graph)
        self.graph = graph
        self.p = params
        self.Q = tuple(dict.fromkeys(params.Q))
        self.truss = params.structure == "firmtruss"
        self.table = None
        self.core_index = None
        if params.use_index:
            idx = params.index
            if self.truss:
                if isinstance(idx, SkylineIndex):
                    self.table = idx.schema_table(graph)
                elif isinstance(idx, list):
                    self.table = idx
                else:
                    raise DomainError("FirmTruss search needs a SkylineIndex")
            else:
                if not isinstance(idx, SkylineCoreness):
                    raise DomainError("FirmCore search needs a SkylineCoreness")
                if idx.fingerprint != graph.fingerprint():
                    from .errors import IndexMismatch
                    raise IndexMismatch("skyline was built for a different graph")
                self.core_index = idx
        k, lam = params.k, params.lam
        self.good_schema = self.good_node = None
        if self.table is not None:
            table = self.table
            self.good_schema = _Lazy(lambda s: any(kk >= k and ll >= lam for kk, ll in table[s]))
        if self.core_index is not None:
            ci = self.core_index
            self.good_node = _Lazy(lambda v: ci.contains(v, k, lam))
        self.trace = []

    # candidate construction
    def peeler(self, nodes=None):
        """Q's component of the maximal structure inside G[nodes] (None = all)."""
        g, k, lam, Q = self.graph, self.p.k, self.p.lam, self.Q
        if self.truss:
            schemas = None
            if self.good_schema is not None:
                if nodes is None:
                    nodes, schemas = index_maximal_firmtruss(g, self.table, k, lam, Q)
                else:
                    schemas = {s for s in _schemas_within(g, nodes) if s in self.good_schema}
            return firmtruss_peeler(g, k, lam, Q, nodes, schemas)
        if self.good_node is not None:
            base = g.all_nodes() if nodes is None else nodes
            nodes = {v for v in base if v in self.good_node}
        return firmcore_peeler(g, k, lam, Q, nodes)

    def search_view(self) -> SubgraphView:
        """Graph used to grow local balls (index-filtered when available)."""
        g = self.graph
        if self.good_schema is not None:
            return SubgraphView(g, _Everything(), self.good_schema)
        if self.good_node is not None:
            return SubgraphView(g, self.good_node)
        return SubgraphView(g, _Everything())

    def refine(self, peeler, d):
        """Shrink to the largest sub-structure with query distance <= d, in place."""
        Q = self.Q
        while True:
            dm = query_distance_map(peeler.view(), Q)
            far = [u for u, x in dm.items() if x > d]
            if not far:
                return max(dm.values())
            peeler.delete_vertices(sorted(far))
            peeler.restrict_to_component(Q)

    def qdist(self, peeler):
        return max(query_distance_map(peeler.view(), self.Q).values())

    def ball(self, view, radius):
        """Q plus nodes within ``radius`` of every query node; also reports exhaustion."""
        sets = None
        exhausted = True
        for q in self.Q:
            info = {}
            d = bfs_distances(view, q, radius, info)
            exhausted = exhausted and not info["truncated"]
            keys = set(d)
            sets = keys if sets is None else sets & keys
        return frozenset(sets | set(self.Q)), exhausted

    def probe(self, nodes, d):
        try:
            p = self.peeler(nodes)
            qd = self.refine(p, d)
        except NoCommunity:
            return None, None
        return p, qd

    def log(self, d, ok, dmin, dmax, size):
        self.trace.append({"d": d, "ok": ok, "d_min": dmin, "d_max": _num(dmax), "size": size})


class _Everything:
    def __contains__(self, x):
        return True


def _dmin(engine):
    # a FirmTruss needs an edge, so its query distance is at least 1
    return 1 if engine.truss else 0


def _global(engine: _Engine):
    t0 = time.perf_counter()
    best = engine.peeler()
    dmax = engine.qdist(best)
    engine.log(dmax, True, _dmin(engine), dmax, len(best.vertices))
    t1 = time.perf_counter()
    dmin = _dmin(engine)
    while dmin < dmax:
        t = (dmin + dmax) // 2
        cand = best.copy()
        try:
            qd = engine.refine(cand, t)
        except NoCommunity:
            dmin = t + 1
            engine.log(t, False, dmin, dmax, 0)
            continue
        best, dmax = cand, qd
        engine.log(t, True, dmin, dmax, len(cand.vertices))
    return best, dmax, {"g0": t1 - t0, "loop": time.perf_counter() - t1}


def _local(engine: _Engine):
    t0 = time.perf_counter()
    view = engine.search_view()
    dmin = _dmin(engine)
    dmax = INF
    dmid = max(1, dmin)
    best = None
    while dmax == INF or dmin < dmax:
        nodes, exhausted = engine.ball(view, dmid)
        p, qd = engine.probe(nodes, dmid)
        if p is not None:
            best, dmax = p, qd
            engine.log(dmid, True, dmin, dmax, len(p.vertices))
        else:
            dmin = dmid + 1
            engine.log(dmid, False, dmin, dmax, 0)
            if dmax == INF and exhausted:
                raise NoCommunity("no connected structure contains the query")
        dmid = dmid * 2 if dmax == INF else (dmin + dmax) // 2
    return best, dmax, {"g0": 0.0, "loop": time.perf_counter() - t0}


def _hybrid(engine: _Engine):
    t0 = time.perf_counter()
    g0 = engine.peeler()
    dmax = engine.qdist(g0)
    best = g0
    t1 = time.perf_counter()
    view = g0.view()
    dmin = _dmin(engine)
    engine.log(dmax, True, dmin, dmax, len(g0.vertices))
    while dmin < dmax:
        t = (dmin + dmax) // 2
        nodes, _ = engine.ball(view, t)
        p, qd = engine.probe(nodes, t)
        if p is None:
            dmin = t + 1
            engine.log(t, False, dmin, dmax, 0)
        else:
            best, dmax = p, qd
            engine.log(t, True, dmin, dmax, len(p.vertices))
    return best, dmax, {"g0": t1 - t0, "loop": time.perf_counter() - t1}


_DRIVERS = {"global": _global, "local": _local, "hybrid": _hybrid}


def community_search(graph: MultilayerGraph, params: SearchParams) -> Community:
    start = time.perf_counter()
    engine = _Engine(graph, params)
    best, qd, phases = _DRIVERS[params.strategy](engine)
    nodes = best.vertices
    schemas = best.schemas
    prefix = "ftcs" if engine.truss else "fccs"
    comm = Community(nodes, schemas, f"{prefix}-{params.strategy}", params.structure,
                     params.k, params.lam, engine.Q, qd,
                     iterations=len(engine.trace), trace=engine.trace, phases=phases)
    t = time.perf_counter()
    if params.diameter_mode == "bound" and len(nodes) > params.diameter_cap:
        comm.diameter, comm.diameter_exact = 2 * qd + 1, False
    else:
        comm.diameter = diameter(comm.view(graph))
    phases["diameter"] = time.perf_counter() - t
    comm.elapsed_ms = (time.perf_counter() - start) * 1000.0
    return comm


def _run(graph, params, structure, strategy, **kw):
    if isinstance(params, SearchParams):
        params.structure = structure
        params.strategy = strategy
        return community_search(graph, params)
    return community_search(graph, SearchParams(*params, structure=structure, strategy=strategy, **kw))


def ftcs_global(graph, params):
    return _run(graph, params, "firmtruss", "global")


def ftcs_local(graph, params):
    return _run(graph, params, "firmtruss", "local")


def fccs_global(graph, params):
    return _run(graph, params, "firmcore", "global")


def fccs_local(graph, params):
    return _run(graph, params, "firmcore", "local")


# -- post-hoc validation -----------------------------------------------------------------

def validate_community(graph: MultilayerGraph, comm: Community) -> list[str]:
    """Definitional re-check from raw adjacency; returns a list of violations."""
    problems = []
    nodes = comm.nodes
    for q in comm.query:
        if q not in nodes:
            problems.append(f"query node {q} missing")
    if not nodes:
        return problems + ["empty community"]
    view = comm.view(graph)
    try:
        comp = connected_component(view, None, [next(iter(nodes))])
        if comp != nodes:
            problems.append("not connected")
    except NoCommunity:
        problems.append("not connected")
    nl = graph.num_layers
    if comm.structure == "firmcore":
        for v in nodes:
            deg = sorted((sum(1 for w in graph.adj[l][v] if w in nodes) for l in range(nl)), reverse=True)
            if deg[comm.lam - 1] < comm.k:
                problems.append(f"node {v} has Top-lambda degree {deg[comm.lam - 1]} < {comm.k}")
    else:
        S = comm.schemas
        touched = set()
        for s in S:
            u, v = graph.su[s], graph.sv[s]
            touched.update((u, v))
            vec = []
            for l in range(nl):
                if not graph.smask[s] >> l & 1:
                    vec.append(-1)
                    continue
                cnt = 0
                for w, s1 in graph.adj[l][u].items():
                    s2 = graph.adj[l][v].get(w)
                    if s2 is not None and s1 in S and s2 in S:
                        cnt += 1
                vec.append(cnt)
            vec.sort(reverse=True)
            if vec[comm.lam - 1] < comm.k - 2:
                problems.append(f"schema {s} has Top-lambda support {vec[comm.lam - 1]} < {comm.k - 2}")
        if touched != set(nodes):
            problems.append("node set differs from schema endpoints")
    return problems


