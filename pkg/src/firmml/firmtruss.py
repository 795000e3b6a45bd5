"""Triangle supports, FirmTruss extraction/maintenance, decomposition and skyline index.

A schema counts toward a layer only where it is present; absent layers carry a
sentinel support of -1 internally, so even k=2 requires presence in >= lam
layers.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import struct

import numpy as np

from .errors import CorruptIndex, DomainError, IndexMismatch, NoCommunity, QueryNotContained, QuerySplit
from .firmcore import CorePeeler, skyline_from_levels
from .graph import MultilayerGraph, SubgraphView, connected_component, mask_layers

ABSENT = -1


def _check(graph, k, lam):
    if not 1 <= lam <= graph.num_layers:
        raise DomainError(f"lambda={lam} outside 1..{graph.num_layers}")
    if k < 2:
        raise DomainError("FirmTruss requires k >= 2")


def _schemas_within(graph: MultilayerGraph, nodes) -> set[int]:
    out = set()
    nbrs = graph.nbrs
    for v in nodes:
        for w, s in nbrs[v].items():
            if w > v and w in nodes:
                out.add(s)
    return out


def layer_support_counts(graph: MultilayerGraph, schemas=None) -> dict[int, list[int]]:
    """Per-layer triangle counts for every schema in ``schemas`` (default: all).

    Uses the degree-ordered forward scheme: each node keeps only neighbours of
    higher rank, so every triangle is found once by intersecting two short
    sets.  Absent layers report 0; only schemas with a nonzero entry appear in
    the result.
    """
    nl = graph.num_layers
    sup: dict[int, list[int]] = {}
    for l in range(nl):
        adj = graph.adj[l]
        if schemas is None:
            def nb(v, adj=adj):
                return adj[v]
            active = [v for v in range(graph.n) if adj[v]]
        else:
            fadj: dict[int, dict[int, int]] = {}
            for v_ in _endpoints(graph, schemas):
                d = {w: s for w, s in adj[v_].items() if s in schemas}
                if d:
                    fadj[v_] = d

            def nb(v, fadj=fadj):
                return fadj[v]
            active = list(fadj)
        rank = {v: (len(nb(v)), v) for v in active}
        out = {}
        for v in active:
            rv = rank[v]
            out[v] = {w: s for w, s in nb(v).items() if rank[w] > rv}
        for u in active:
            ou = out[u]
            if len(ou) < 2:
                continue
            for v, suv in ou.items():
                ov = out[v]
                if not ov:
                    continue
                small, big = (ou, ov) if len(ou) <= len(ov) else (ov, ou)
                for w in small:
                    if w in big:
                        for s in (suv, ou[w], ov[w]):
                            row = sup.get(s)
                            if row is None:
                                row = sup[s] = [0] * nl
                            row[l] += 1
    return sup


def _endpoints(graph, schemas):
    pts = set()
    for s in schemas:
        pts.add(graph.su[s])
        pts.add(graph.sv[s])
    return pts


def layer_supports(graph: MultilayerGraph, subset=None) -> dict[int, list[int]]:
    """Support vector of every schema inside ``subset`` (0 for absent layers)."""
    nodes = graph.all_nodes() if subset is None else frozenset(subset)
    schemas = None if subset is None else _schemas_within(graph, nodes)
    counts = layer_support_counts(graph, schemas)
    nl = graph.num_layers
    ids = range(graph.num_schemas) if schemas is None else sorted(schemas)
    return {s: counts.get(s, [0] * nl) for s in ids}


def _top(vec, lam):
    return sorted(vec, reverse=True)[lam - 1]


class TrussPeeler:
    """Maintains the (k, lam)-FirmTruss of a schema set under deletions.

    Removing a schema destroys every live triangle through it in each layer,
    decrementing the two other edges; their Top-lam support is recomputed
    only when the decremented layer attains it.
    """

    structure = "firmtruss"

    def __init__(self, graph: MultilayerGraph, k: int, lam: int, nodes=None, schemas=None):
        _check(graph, k, lam)
        self.graph, self.k, self.lam = graph, k, lam
        if schemas is None:
            schemas = set(range(graph.num_schemas)) if nodes is None else _schemas_within(graph, nodes)
        elif nodes is not None:
            su, sv = graph.su, graph.sv
            schemas = {s for s in schemas if su[s] in nodes and sv[s] in nodes}
        self.alive: set[int] = set(schemas)
        nl = graph.num_layers
        counts = layer_support_counts(graph, self.alive)
        smask = graph.smask
        self.sup: dict[int, list[int]] = {}
        self.top: dict[int, int] = {}
        self.node_deg: dict[int, int] = {}
        need = k - 2
        bad = []
        for s in self.alive:
            m = smask[s]
            row = counts.get(s)
            vec = [(row[l] if row else 0) if m >> l & 1 else ABSENT for l in range(nl)]
            self.sup[s] = vec
            t = _top(vec, lam)
            self.top[s] = t
            if t < need:
                bad.append(s)
            for x in (graph.su[s], graph.sv[s]):
                self.node_deg[x] = self.node_deg.get(x, 0) + 1
        self.removed_total = 0
        self._cascade(bad)

    def copy(self) -> TrussPeeler:
        c = object.__new__(TrussPeeler)
        c.graph, c.k, c.lam = self.graph, self.k, self.lam
        c.alive = set(self.alive)
        c.sup = {s: list(self.sup[s]) for s in c.alive}
        c.top = {s: self.top[s] for s in c.alive}
        c.node_deg = dict(self.node_deg)
        c.removed_total = self.removed_total
        return c

    def _cascade(self, seeds):
        g = self.graph
        adj, su, sv, smask = g.adj, g.su, g.sv, g.smask
        alive, sup, top, lam = self.alive, self.sup, self.top, self.lam
        need = self.k - 2
        node_deg = self.node_deg
        stack = list({s for s in seeds if s in alive})
        # queued but unprocessed schemas still hold their triangles
        pending = set(stack)
        alive.difference_update(pending)
        while stack:
            s = stack.pop()
            pending.discard(s)
            self.removed_total += 1
            u, v = su[s], sv[s]
            for x in (u, v):
                c = node_deg[x] - 1
                if c:
                    node_deg[x] = c
                else:
                    del node_deg[x]
            vec = sup[s]
            for l in mask_layers(smask[s]):
                if vec[l] <= 0:
                    continue
                au, av = adj[l][u], adj[l][v]
                if len(au) > len(av):
                    au, av = av, au
                for w, s1 in au.items():
                    if s1 not in alive and s1 not in pending:
                        continue
                    s2 = av.get(w)
                    if s2 is None or (s2 not in alive and s2 not in pending):
                        continue
                    for t in (s1, s2):
                        tv = sup[t]
                        old = tv[l]
                        tv[l] = old - 1
                        if old == top[t]:
                            nt = _top(tv, lam)
                            top[t] = nt
                            if nt < need and t in alive:
                                alive.discard(t)
                                pending.add(t)
                                stack.append(t)

    def delete_vertices(self, vs) -> None:
        """Remove all schemas touching ``vs`` and cascade (maintain step)."""
        nbrs = self.graph.nbrs
        alive = self.alive
        seeds = []
        for v in vs:
            if v in self.node_deg:
                seeds.extend(s for s in nbrs[v].values() if s in alive)
        self._cascade(seeds)

    def delete_schemas(self, ss) -> None:
        self._cascade(list(ss))

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.node_deg)

    @property
    def schemas(self) -> frozenset[int]:
        return frozenset(self.alive)

    def view(self) -> SubgraphView:
        return SubgraphView(self.graph, frozenset(self.node_deg), self.alive)

    def restrict_to_component(self, Q) -> frozenset[int]:
        for q in Q:
            if q not in self.node_deg:
                raise QueryNotContained(f"query node {q} has no surviving edge")
        comp = connected_component(self.view(), None, Q)
        g = self.graph
        drop = [s for s in self.alive if g.su[s] not in comp]
        if drop:
            # triangles never span components, so dropping needs no cascade
            for s in drop:
                self.alive.discard(s)
                for x in (g.su[s], g.sv[s]):
                    c = self.node_deg[x] - 1
                    if c:
                        self.node_deg[x] = c
                    else:
                        del self.node_deg[x]
        return comp


def firmtruss_peeler(graph, k, lam, Q, nodes=None, schemas=None, prefilter=True) -> TrussPeeler:
    """Peeler holding Q's component of the maximal FirmTruss of the given scope."""
    _check(graph, k, lam)
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    scope = graph.all_nodes() if nodes is None else nodes
    for q in Q:
        if q not in scope:
            raise QueryNotContained(f"query node {q} outside the search scope")
    if prefilter and schemas is None and k >= 3:
        # every FirmTruss node has Top-lam degree >= k-1
        core = CorePeeler(graph, k - 1, lam, scope)
        scope = core.alive
        for q in Q:
            if q not in scope:
                raise QueryNotContained(f"query node {q} is not in the ({k - 1},{lam})-FirmCore")
    peeler = TrussPeeler(graph, k, lam, scope, schemas)
    peeler.restrict_to_component(Q)
    return peeler


def maximal_firmtruss(graph: MultilayerGraph, k: int, lam: int, Q) -> tuple[frozenset[int], frozenset[int]]:
    """Q's component of the maximal (k, lam)-FirmTruss as (nodes, schema ids)."""
    p = firmtruss_peeler(graph, k, lam, Q)
    return p.vertices, p.schemas


def maintain_firmtruss(state: TrussPeeler, deleted_vertices) -> TrussPeeler:
    state.delete_vertices(deleted_vertices)
    return state


# -- decomposition --------------------------------------------------------------

def truss_levels(graph: MultilayerGraph, lam: int, base=None) -> np.ndarray:
    """For every schema, the largest k with it in the (k, lam)-FirmTruss (1 = none).

    ``base`` holds precomputed support counts (as from layer_support_counts) so
    repeated passes reinitialise from it instead of recounting triangles.
    """
    nl = graph.num_layers
    if not 1 <= lam <= nl:
        raise DomainError(f"lambda={lam} outside 1..{nl}")
    if base is None:
        base = layer_support_counts(graph)
    smask = graph.smask
    m = graph.num_schemas
    counts = np.fromiter((bin(x).count("1") for x in smask), dtype=np.int64, count=m)
    # schemas in no triangle never change: present in >= lam layers -> 2, else 1
    level = np.where(counts >= lam, 2, 1).astype(np.int32)
    adj, su, sv = graph.adj, graph.su, graph.sv
    sup: dict[int, list[int]] = {}
    top: dict[int, int] = {}
    key: dict[int, int] = {}  # heap key: max(top + 2, level at last update)
    heap = []
    for s, row in base.items():
        msk = smask[s]
        vec = [row[l] if msk >> l & 1 else ABSENT for l in range(nl)]
        sup[s] = vec
        top[s] = _top(vec, lam)
        key[s] = top[s] + 2
        heap.append((key[s], su[s], sv[s], s))
    heapq.heapify(heap)
    dead = set()
    k = 1
    while heap:
        ks, _, _, s = heapq.heappop(heap)
        if s in dead or ks != key[s]:
            continue
        if ks > k:
            k = ks
        level[s] = k
        dead.add(s)
        u, v = su[s], sv[s]
        vec = sup[s]
        for l in range(nl):
            if vec[l] <= 0:
                continue
            au, av = adj[l][u], adj[l][v]
            if len(au) > len(av):
                au, av = av, au
            for w, s1 in au.items():
                if s1 in dead or s1 not in sup:
                    continue
                s2 = av.get(w)
                if s2 is None or s2 in dead:
                    continue
                for t in (s1, s2):
                    tv = sup[t]
                    old = tv[l]
                    tv[l] = old - 1
                    if old == top[t]:
                        nt = _top(tv, lam)
                        if nt != old:
                            top[t] = nt
                            nk = max(nt + 2, k)
                            if nk != key[t]:
                                key[t] = nk
                                heapq.heappush(heap, (nk, su[t], sv[t], t))
    return level


class SkylineIndex:
    """Per schema, the non-dominated (k, lam) pairs with k >= 2."""

    def __init__(self, graph_fingerprint: int, n_nodes: int, n_layers: int,
                 pairs: dict[tuple[int, int], list[tuple[int, int]]]):
        self.fingerprint = graph_fingerprint
        self.n_nodes = n_nodes
        self.n_layers = n_layers
        self.pairs = pairs  # (u, v) node ids with u < v -> skyline

    @classmethod
    def from_levels(cls, graph: MultilayerGraph, levels: np.ndarray) -> SkylineIndex:
        """``levels`` is (num_schemas, |L|): column lam-1 holds the lam-level."""
        su, sv = graph.su, graph.sv
        pairs = {}
        nl = graph.num_layers
        rows = levels.tolist()
        for s, row in enumerate(rows):
            pairs[(su[s], sv[s])] = skyline_from_levels(((row[j], j + 1) for j in range(nl)), min_k=2)
        return cls(graph.fingerprint(), graph.n, nl, pairs)

    def __eq__(self, other):
        return isinstance(other, SkylineIndex) and (
            self.fingerprint, self.n_nodes, self.n_layers, self.pairs) == (
            other.fingerprint, other.n_nodes, other.n_layers, other.pairs)

    def __len__(self):
        return len(self.pairs)

    def skyline(self, u: int, v: int) -> list[tuple[int, int]]:
        if u > v:
            u, v = v, u
        return self.pairs.get((u, v), [])

    def check(self, graph: MultilayerGraph) -> None:
        if (self.fingerprint, self.n_nodes, self.n_layers) != (graph.fingerprint(), graph.n, graph.num_layers):
            raise IndexMismatch("index was built for a different graph")

    def schema_table(self, graph: MultilayerGraph) -> list[list[tuple[int, int]]]:
        self.check(graph)
        table = [[] for _ in range(graph.num_schemas)]
        for (u, v), sk in self.pairs.items():
            s = graph.schema_id(u, v)
            if s is None:
                raise IndexMismatch(f"index schema ({u},{v}) absent from graph")
            table[s] = sk
        return table

    def to_json(self, graph: MultilayerGraph) -> dict:
        lab = graph.node_labels
        return {f"{lab[u]},{lab[v]}": [list(p) for p in sk] for (u, v), sk in sorted(self.pairs.items())}


def firmtruss_decomposition(graph: MultilayerGraph) -> SkylineIndex:
    nl = graph.num_layers
    base = layer_support_counts(graph)
    levels = np.ones((graph.num_schemas, max(nl, 1)), dtype=np.int32)
    for lam in range(1, nl + 1):
        levels[:, lam - 1] = truss_levels(graph, lam, base)
    return SkylineIndex.from_levels(graph, levels[:, :nl])


def index_maximal_firmtruss(graph: MultilayerGraph, index, k: int, lam: int, Q):
    """BFS from Q over schemas whose skyline dominates (k, lam).

    ``index`` is a SkylineIndex or a schema table from ``schema_table``.
    Returns (nodes, schema ids).
    """
    _check(graph, k, lam)
    table = index.schema_table(graph) if isinstance(index, SkylineIndex) else index
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    nbrs = graph.nbrs

    def good(s):
        return any(kk >= k and ll >= lam for kk, ll in table[s])

    comp = set()
    kept = set()
    for q in Q:
        if not 0 <= q < graph.n or not any(good(s) for s in nbrs[q].values()):
            raise QueryNotContained(f"query node {q} is not in the ({k},{lam})-FirmTruss")
    comp.add(Q[0])
    stack = [Q[0]]
    while stack:
        v = stack.pop()
        for w, s in nbrs[v].items():
            if s in kept or not good(s):
                continue
            kept.add(s)
            if w not in comp:
                comp.add(w)
                stack.append(w)
    if any(q not in comp for q in Q):
        raise QuerySplit("query nodes are in different FirmTruss components")
    return frozenset(comp), frozenset(kept)


def good_schemas(graph: MultilayerGraph, table, k: int, lam: int) -> set[int]:
    return {s for s, sk in enumerate(table) if any(kk >= k and ll >= lam for kk, ll in sk)}


# -- index persistence -------------------------------------------------------------

MAGIC = b"FTSI"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQQ")


def index_write(index: SkylineIndex, path) -> None:
    buf = bytearray(_HEADER.pack(MAGIC, VERSION, index.n_nodes, index.n_layers, len(index.pairs), index.fingerprint))
    rec = struct.Struct("<IIH")
    pair = struct.Struct("<IH")
    for (u, v), sk in sorted(index.pairs.items()):
        buf += rec.pack(u, v, len(sk))
        for k, lam in sk:
            buf += pair.pack(k, lam)
    buf += hashlib.blake2b(bytes(buf), digest_size=8).digest()
    with open(path, "wb") as fh:
        fh.write(buf)


def index_read(path) -> SkylineIndex:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise CorruptIndex(f"cannot read index: {e}") from None
    if len(data) < _HEADER.size + 8:
        raise CorruptIndex("index file truncated")
    body, digest = data[:-8], data[-8:]
    magic, version, n_nodes, n_layers, count, fp = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise CorruptIndex("bad magic")
    if version != VERSION:
        raise CorruptIndex(f"unsupported index version {version}")
    if hashlib.blake2b(body, digest_size=8).digest() != digest:
        raise CorruptIndex("content hash mismatch (truncated or modified)")
    pairs = {}
    off = _HEADER.size
    rec = struct.Struct("<IIH")
    try:
        for _ in range(count):
            u, v, c = rec.unpack_from(body, off)
            off += rec.size
            flat = struct.unpack_from("<" + "IH" * c, body, off)
            off += 6 * c
            pairs[(u, v)] = [(flat[i], flat[i + 1]) for i in range(0, 2 * c, 2)]
    except struct.error:
        raise CorruptIndex("index records truncated") from None
    if off != len(body):
        raise CorruptIndex("trailing bytes in index")
    return SkylineIndex(fp, n_nodes, n_layers, pairs)


def index_export_json(index: SkylineIndex, graph: MultilayerGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(index.to_json(graph), fh)
