"""Homophily scoring and attributed community search.

h_S(v) is the summed similarity of v to the other members of S, and the
homophily score Gamma_p(S) is the p-mean of those aggregates.  Greedy peeling
removes the node whose deletion shrinks sum_v h_S(v)^p the least (p > 0) or
the most (p < 0), keeping the structure condition intact after each step.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .errors import DomainError, NoCommunity, UnsupportedParameter
from .firmcore import firmcore_peeler
from .firmtruss import firmtruss_peeler
from .graph import INF, AttributeTable, MultilayerGraph, diameter, query_distance_map
from .metrics import generalized_mean
from .search import Community


def similarity(a, b) -> float:
    """Cosine similarity of two non-negative vectors; 0 when either is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), 0.0, 1.0))


def cosine_matrix(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    Y = X / safe[:, None]
    M = np.clip(Y @ Y.T, 0.0, 1.0)
    M[norms == 0, :] = 0.0
    M[:, norms == 0] = 0.0
    np.fill_diagonal(M, 0.0)
    return M


class HomophilyContext:
    """Attribute table, similarity measure and p for one search.

    Similarities are materialised lazily as a dense block over the nodes of
    the current working set (``prepare``), never over the whole graph.
    ``sim`` may replace cosine with any symmetric non-negative function of
    two vectors.
    """

    def __init__(self, attrs: AttributeTable, p: float = 1.0, sim=None, pairwise=None):
        self.attrs = attrs
        self.p = float(p)
        self.sim = sim
        self.pairwise = pairwise  # optional dict {(u, v): h} overriding attributes
        self.nodes: list[int] = []
        self.pos: dict[int, int] = {}
        self.M = np.zeros((0, 0))

    def h(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        if self.pairwise is not None:
            return float(self.pairwise.get((u, v), self.pairwise.get((v, u), 0.0)))
        if u in self.pos and v in self.pos:
            return float(self.M[self.pos[u], self.pos[v]])
        f = self.sim or similarity
        return float(f(self.attrs.vector(u), self.attrs.vector(v)))

    def prepare(self, nodes) -> np.ndarray:
        nodes = sorted(nodes)
        self.nodes = nodes
        self.pos = {v: i for i, v in enumerate(nodes)}
        if self.pairwise is not None:
            M = np.array([[self.h(u, v) for v in nodes] for u in nodes]) if nodes else np.zeros((0, 0))
        elif self.sim is None:
            M = cosine_matrix(self.attrs.matrix(nodes)) if nodes else np.zeros((0, 0))
        else:
            vecs = [self.attrs.vector(v) for v in nodes]
            n = len(nodes)
            M = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    M[i, j] = M[j, i] = self.sim(vecs[i], vecs[j])
        if (M < 0).any():
            raise DomainError("similarity must be non-negative")
        self.M = M
        return M

    def aggregates(self, S) -> dict[int, float]:
        S = list(S)
        return {v: sum(self.h(v, u) for u in S if u != v) for v in S}


def homophily_score(ctx: HomophilyContext, S, p: float | None = None) -> float:
    """Generalized p-mean of the aggregates h_S(v); 0 for singletons."""
    p = ctx.p if p is None else p
    S = list(S)
    if not S:
        raise DomainError("empty set")
    if len(S) == 1:
        return 0.0
    return generalized_mean(list(ctx.aggregates(S).values()), p)


def delta_u(ctx: HomophilyContext, S, u: int, p: float | None = None) -> float:
    """Exact decrease of sum_v h_S(v)^p caused by removing u from S."""
    p = ctx.p if p is None else p
    if math.isinf(p):
        raise DomainError("delta_u needs finite p")
    S = list(S)
    if u not in S:
        raise DomainError("u must belong to S")
    agg = ctx.aggregates(S)
    total = _pow(agg[u], p)
    for v in S:
        if v != u:
            total += _pow(agg[v], p) - _pow(max(agg[v] - ctx.h(v, u), 0.0), p)
    return total


def _pow(x, p):
    if x == 0:
        if p > 0:
            return 0.0
        if p == 0:
            return 1.0
        return INF
    return x ** p


def _deltas(hS: np.ndarray, Msub: np.ndarray, p: float) -> np.ndarray:
    """Vectorised delta for every member: sum(A) - colsum(B) + A[u]."""
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.power(hS, p) if p > 0 else np.where(hS > 0, np.power(np.where(hS > 0, hS, 1.0), p), INF)
        R = np.clip(hS[:, None] - Msub, 0.0, None)
        R[R < 1e-12] = 0.0
        if p > 0:
            B = np.power(R, p)
        else:
            B = np.where(R > 0, np.power(np.where(R > 0, R, 1.0), p), INF)
        colsum = B.sum(axis=0)
        return A.sum() - colsum + A


def _peeler(graph, k, lam, Q, structure):
    if structure == "firmtruss":
        return firmtruss_peeler(graph, k, lam, Q)
    if structure == "firmcore":
        return firmcore_peeler(graph, k, lam, Q)
    raise DomainError(f"unknown structure {structure!r}")


def _finish(graph, ctx, name, k, lam, Q, g0_nodes, nodes, schemas, structure, score, p, iters, trace, t0):
    from .graph import SubgraphView
    view = SubgraphView(graph, nodes, schemas)
    qd = max(query_distance_map(view, Q).values())
    comm = Community(nodes, schemas, name, structure, k, lam, tuple(Q), qd,
                     diameter=diameter(view), iterations=iters, trace=trace)
    comm.extra = {"p": _pjson(p), "homophily_score": float(score),
                  "removed_as_free_riders": graph.labels(set(g0_nodes) - set(nodes))}
    comm.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return comm


def _pjson(p):
    if p == INF:
        return "inf"
    if p == -INF:
        return "-inf"
    return p


def _greedy(graph, ctx, k, lam, Q, structure, choose, score_fn):
    """Shared peeling loop: ``choose(hS, Msub, ids, qmask)`` picks the next victim
    (or None to stop); every Q-containing intermediate is scored."""
    Q = list(dict.fromkeys(Q))
    if not Q:
        raise DomainError("empty query set")
    peeler = _peeler(graph, k, lam, Q, structure)
    g0 = peeler.vertices
    M = ctx.prepare(g0)
    pos = ctx.pos
    cur = sorted(g0)
    idx = np.array([pos[v] for v in cur])
    hS = M[np.ix_(idx, idx)].sum(axis=1)
    qset = set(Q)
    best = (score_fn(hS), peeler.vertices, peeler.schemas)
    trace = [{"size": len(cur), "score": best[0]}]
    while len(cur) > 1:
        Msub = M[np.ix_(idx, idx)]
        qmask = np.array([v in qset for v in cur])
        j = choose(hS, Msub, np.array(cur), qmask)
        if j is None:
            break
        u = cur[j]
        if u in qset:
            break
        trial = peeler.copy()
        trial.delete_vertices([u])
        if not qset <= trial.vertices:
            break
        try:
            trial.restrict_to_component(Q)
        except NoCommunity:
            break
        peeler = trial
        keep = peeler.vertices
        cur = sorted(keep)
        idx = np.array([pos[v] for v in cur])
        hS = M[np.ix_(idx, idx)].sum(axis=1)
        sc = score_fn(hS)
        trace.append({"removed": graph.node_labels[u], "size": len(cur), "score": sc})
        if sc > best[0]:
            best = (sc, peeler.vertices, peeler.schemas)
    return g0, best, trace


def _gmean(hS, p):
    if len(hS) < 2:
        return 0.0
    return generalized_mean(hS.tolist(), p)


def aftcs_approx(graph: MultilayerGraph, ctx: HomophilyContext, k: int, lam: int, Q,
                 structure: str = "firmtruss") -> Community:
    """Greedy peeling for finite p != 0; returns the best-scoring intermediate."""
    t0 = time.perf_counter()
    p = ctx.p
    if p == 0:
        raise UnsupportedParameter("p=0 is supported for scoring only, not for search")
    if math.isinf(p):
        return exact_maxmin(graph, ctx, k, lam, Q, structure) if p < 0 else exact_maxinf(graph, ctx, k, lam, Q, structure)

    def choose(hS, Msub, ids, qmask):
        if p < 0:
            zero = np.flatnonzero(hS <= 0)
            if len(zero):
                # zero aggregates drive the p<0 mean to 0: drop them first
                return int(zero[0])
            d = _deltas(hS, Msub, p)
            return int(np.flatnonzero(d == d.max())[0])
        d = _deltas(hS, Msub, p)
        return int(np.flatnonzero(d == d.min())[0])

    g0, (score, nodes, schemas), trace = _greedy(graph, ctx, k, lam, Q, structure, choose,
                                                 lambda h: _gmean(h, p))
    return _finish(graph, ctx, "aftcs-approx", k, lam, Q, g0, nodes, schemas, structure, score, p,
                   len(trace) - 1, trace, t0)


def exact_maxmin(graph, ctx, k, lam, Q, structure="firmtruss") -> Community:
    """Maximises min_v h_S(v) by repeatedly removing a minimum-aggregate node."""
    t0 = time.perf_counter()

    def choose(hS, Msub, ids, qmask):
        return int(np.flatnonzero(hS == hS.min())[0])

    g0, (score, nodes, schemas), trace = _greedy(graph, ctx, k, lam, Q, structure, choose,
                                                 lambda h: float(h.min()) if len(h) > 1 else 0.0)
    return _finish(graph, ctx, "exact-maxmin", k, lam, Q, g0, nodes, schemas, structure, score, -INF,
                   len(trace) - 1, trace, t0)


def exact_maxinf(graph, ctx, k, lam, Q, structure="firmtruss") -> Community:
    """p = +inf: the maximal connected structure containing Q is optimal."""
    t0 = time.perf_counter()
    Q = list(dict.fromkeys(Q))
    peeler = _peeler(graph, k, lam, Q, structure)
    nodes = peeler.vertices
    ctx.prepare(nodes)
    score = homophily_score(ctx, nodes, INF)
    return _finish(graph, ctx, "exact-maxinf", k, lam, Q, nodes, nodes, peeler.schemas, structure,
                   score, INF, 0, [], t0)
