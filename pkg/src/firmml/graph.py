"""Multilayer graph store, file loaders, induced views and multilayer distances.

Nodes and layers get dense integer ids in order of first appearance.  Every
unordered node pair present in at least one layer is an *edge schema* with a
layer bitmask; schema ids follow the lexicographic order of (min id, max id).
"""
from __future__ import annotations

import hashlib
import math
from collections import deque
from collections.abc import Hashable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, QueryNotContained, QuerySplit

INF = math.inf


def popcount(x: int) -> int:
    return bin(x).count("1")


def mask_layers(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class MultilayerGraph:
    """Immutable multilayer graph.

    ``adj[l][v]`` maps each layer-``l`` neighbour of ``v`` to the schema id of
    the pair, in ascending neighbour order.  ``nbrs[v]`` is the same map over
    the union of all layers.
    """

    def __init__(self, node_labels, layer_labels, pairs, masks, self_loops=0, duplicates=0):
        self.node_labels: list = list(node_labels)
        self.layer_labels: list = list(layer_labels)
        self.node_index = {lab: i for i, lab in enumerate(self.node_labels)}
        self.layer_index = {lab: i for i, lab in enumerate(self.layer_labels)}
        self.self_loops = self_loops
        self.duplicates = duplicates
        n, nl = len(self.node_labels), len(self.layer_labels)

        order = sorted(range(len(pairs)), key=pairs.__getitem__)
        self.su: list[int] = [pairs[i][0] for i in order]
        self.sv: list[int] = [pairs[i][1] for i in order]
        self.smask: list[int] = [masks[i] for i in order]
        self.adj: list[list[dict[int, int]]] = [[{} for _ in range(n)] for _ in range(nl)]
        self.nbrs: list[dict[int, int]] = [{} for _ in range(n)]
        layer_bits = [(l, 1 << l) for l in range(nl)]
        # schemas are sorted by (u, v), so every neighbour dict is filled in ascending order
        for sid, (u, v, m) in enumerate(zip(self.su, self.sv, self.smask)):
            if u == v or not m:
                raise DomainError("invalid schema")
            self.nbrs[u][v] = sid
            self.nbrs[v][u] = sid
            for l, b in layer_bits:
                if m & b:
                    self.adj[l][u][v] = sid
                    self.adj[l][v][u] = sid
        self._fingerprint = None

    # -- construction ---------------------------------------------------
    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Hashable, Hashable, Hashable]], nodes=(), layers=()):
        """Build from ``(layer, u, v)`` label triples.

        ``nodes``/``layers`` pre-register labels (fixing their ids and allowing
        isolated nodes or empty layers).
        """
        b = _Builder()
        for lab in layers:
            b.layer(lab)
        for lab in nodes:
            b.node(lab)
        for l, u, v in edges:
            b.add(l, u, v)
        return b.build()

    # -- basic accessors ------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.node_labels)

    @property
    def num_layers(self) -> int:
        return len(self.layer_labels)

    @property
    def num_schemas(self) -> int:
        return len(self.su)

    @property
    def num_edges(self) -> int:
        return sum(popcount(m) for m in self.smask)

    def layer_sizes(self) -> list[int]:
        return [sum(len(d) for d in a) // 2 for a in self.adj]

    def schema(self, sid: int) -> tuple[int, int]:
        return self.su[sid], self.sv[sid]

    def schema_id(self, u: int, v: int) -> int | None:
        return self.nbrs[u].get(v)

    def schema_layers(self, sid: int) -> list[int]:
        return mask_layers(self.smask[sid])

    def node_id(self, label) -> int:
        try:
            return self.node_index[label]
        except KeyError:
            pass
        # labels read from files are strings; allow "3" to match 3 and vice versa
        alt = str(label)
        for cand in (alt, _maybe_int(alt)):
            if cand in self.node_index:
                return self.node_index[cand]
        raise DomainError(f"unknown node label {label!r}")

    def labels(self, ids: Iterable[int]) -> list:
        return [self.node_labels[i] for i in sorted(ids)]

    def all_nodes(self) -> frozenset[int]:
        return frozenset(range(self.n))

    def fingerprint(self) -> int:
        """64-bit content hash over node/layer labels and the schema table."""
        if self._fingerprint is None:
            h = hashlib.blake2b(digest_size=8)
            h.update(f"{self.n}:{self.num_layers}:{self.num_schemas}\n".encode())
            h.update("\x1f".join(map(str, self.node_labels)).encode())
            h.update(b"\x1e")
            h.update("\x1f".join(map(str, self.layer_labels)).encode())
            h.update(b"\x1e")
            h.update(np.asarray(self.su, dtype="<u4").tobytes())
            h.update(np.asarray(self.sv, dtype="<u4").tobytes())
            h.update(np.asarray(self.smask, dtype="<u8").tobytes())
            self._fingerprint = int.from_bytes(h.digest(), "little")
        return self._fingerprint

    def __repr__(self):
        return f"MultilayerGraph(n={self.n}, layers={self.num_layers}, edges={self.num_edges}, schemas={self.num_schemas})"


def _maybe_int(s: str):
    try:
        return int(s)
    except ValueError:
        return s


class _Builder:
    def __init__(self):
        self.nodes: dict = {}
        self.layers: dict = {}
        self.masks: dict[tuple[int, int], int] = {}
        self.self_loops = 0
        self.duplicates = 0

    def node(self, lab) -> int:
        i = self.nodes.get(lab)
        if i is None:
            i = self.nodes[lab] = len(self.nodes)
        return i

    def layer(self, lab) -> int:
        i = self.layers.get(lab)
        if i is None:
            i = self.layers[lab] = len(self.layers)
        return i

    def add(self, l, u, v):
        li = self.layer(l)
        a, b = self.node(u), self.node(v)
        if a == b:
            self.self_loops += 1
            return
        key = (a, b) if a < b else (b, a)
        bit = 1 << li
        m = self.masks.get(key, 0)
        if m & bit:
            self.duplicates += 1
        self.masks[key] = m | bit

    def build(self) -> MultilayerGraph:
        pairs = list(self.masks)
        masks = [self.masks[p] for p in pairs]
        return MultilayerGraph(list(self.nodes), list(self.layers), pairs, masks,
                               self.self_loops, self.duplicates)


# -- file formats ---------------------------------------------------------

def load_graph(path, format: str = "edge-list") -> MultilayerGraph:
    """Read a whitespace separated ``layer src dst`` edge list (``#`` comments)."""
    if format != "edge-list":
        raise DomainError(f"unsupported format {format!r}")
    b = _Builder()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0]
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ParseError(f"expected 'layer src dst', got {len(parts)} tokens", path, lineno)
            b.add(*parts)
    return b.build()


def write_edge_list(graph: MultilayerGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid in range(graph.num_schemas):
            u, v = graph.node_labels[graph.su[sid]], graph.node_labels[graph.sv[sid]]
            for l in mask_layers(graph.smask[sid]):
                fh.write(f"{graph.layer_labels[l]} {u} {v}\n")


@dataclass
class AttributeTable:
    """Non-negative node feature vectors; absent nodes read as zero vectors."""
    dim: int
    rows: dict[int, np.ndarray] = field(default_factory=dict)

    def vector(self, v: int) -> np.ndarray:
        r = self.rows.get(v)
        return r if r is not None else np.zeros(self.dim)

    def matrix(self, nodes: list[int]) -> np.ndarray:
        out = np.zeros((len(nodes), self.dim))
        for i, v in enumerate(nodes):
            r = self.rows.get(v)
            if r is not None:
                out[i] = r
        return out

    @classmethod
    def from_dict(cls, graph: MultilayerGraph, data: dict) -> AttributeTable:
        rows = {}
        dim = None
        for lab, vec in data.items():
            arr = np.asarray(vec, dtype=float)
            if dim is None:
                dim = len(arr)
            elif len(arr) != dim:
                raise DomainError("inconsistent attribute dimension")
            if (arr < 0).any():
                raise DomainError(f"negative attribute for node {lab!r}")
            rows[graph.node_id(lab)] = arr
        return cls(dim or 0, rows)


def load_attributes(path, graph: MultilayerGraph) -> AttributeTable:
    rows: dict[int, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            lab, vals = parts[0], parts[1:]
            try:
                vec = np.array([float(x) for x in vals])
            except ValueError as e:
                raise ParseError(str(e), path, lineno) from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ParseError(f"expected {dim} values, got {len(vec)}", path, lineno)
            if (vec < 0).any() or not np.isfinite(vec).all():
                raise ParseError("attribute values must be finite and non-negative", path, lineno)
            if lab not in graph.node_index:
                raise ParseError(f"unknown node {lab!r}", path, lineno)
            rows[graph.node_index[lab]] = vec
    return AttributeTable(dim or 0, rows)


def load_ground_truth(path, graph: MultilayerGraph | None = None) -> list[set]:
    """One community per line; returns label sets (or id sets when a graph is given)."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if graph is None:
                out.append(set(parts))
            else:
                out.append({graph.node_index[p] for p in parts if p in graph.node_index})
    return out


# -- views ----------------------------------------------------------------

class SubgraphView:
    """Lazy restriction of a graph to a node set and optionally a schema set.

    With ``schemas=None`` the view is the induced subgraph; otherwise only
    listed schemas (with both endpoints inside ``nodes``) are visible.
    """

    __slots__ = ("graph", "nodes", "schemas")

    def __init__(self, graph: MultilayerGraph, nodes=None, schemas=None):
        self.graph = graph
        self.nodes = graph.all_nodes() if nodes is None else nodes
        self.schemas = schemas

    def __contains__(self, v):
        return v in self.nodes

    def __len__(self):
        return len(self.nodes)

    def neighbors(self, l: int, v: int):
        nodes, schemas = self.nodes, self.schemas
        if schemas is None:
            return [w for w in self.graph.adj[l][v] if w in nodes]
        return [w for w, s in self.graph.adj[l][v].items() if s in schemas and w in nodes]

    def union_neighbors(self, v: int):
        nodes, schemas = self.nodes, self.schemas
        if schemas is None:
            return [w for w in self.graph.nbrs[v] if w in nodes]
        return [w for w, s in self.graph.nbrs[v].items() if s in schemas and w in nodes]

    def degree_vector(self, v: int) -> list[int]:
        return [len(self.neighbors(l, v)) for l in range(self.graph.num_layers)]

    def schema_ids(self):
        g, nodes = self.graph, self.nodes
        if self.schemas is not None:
            return sorted(s for s in self.schemas if g.su[s] in nodes and g.sv[s] in nodes)
        out = []
        for v in nodes:
            out.extend(s for w, s in g.nbrs[v].items() if w > v and w in nodes)
        return sorted(out)

    def layer_edge_counts(self) -> list[int]:
        g = self.graph
        counts = [0] * g.num_layers
        for s in self.schema_ids():
            for l in mask_layers(g.smask[s]):
                counts[l] += 1
        return counts


def induced_subgraph(graph: MultilayerGraph, subset) -> SubgraphView:
    return SubgraphView(graph, frozenset(subset))


def _view(graph, subset, schemas=None) -> SubgraphView:
    if isinstance(graph, SubgraphView):
        return graph
    return SubgraphView(graph, graph.all_nodes() if subset is None else subset, schemas)


def degree_vector(graph, subset, v: int, schemas=None) -> list[int]:
    view = _view(graph, subset, schemas)
    if v not in view.nodes:
        raise DomainError(f"node {v} not in subset")
    return view.degree_vector(v)


def top_lambda(vec, lam: int):
    if not 1 <= lam <= len(vec):
        raise DomainError(f"lambda={lam} outside 1..{len(vec)}")
    return sorted(vec, reverse=True)[lam - 1]


# -- distances ------------------------------------------------------------

def bfs_distances(view: SubgraphView, src: int, limit: float = INF, info: dict | None = None) -> dict[int, int]:
    """Multilayer distances from ``src`` to every reachable node of the view.

    States are (node, layer) pairs; moving along a layer edge or switching
    layer at the same node both cost 1.  ``src`` starts in every layer.  The
    search stops expanding past ``limit``; if ``info`` is given,
    ``info["truncated"]`` tells whether some state was left unexpanded there.
    """
    g = view.graph
    nl = g.num_layers
    nodes, schemas = view.nodes, view.schemas
    adj = g.adj
    best = {src: 0}
    if nl == 0:
        return best
    seen = set()
    q = deque()
    for l in range(nl):
        if adj[l][src]:
            seen.add(src * nl + l)
            q.append((src, l, 0))
    truncated = False
    while q:
        v, l, d = q.popleft()
        if d >= limit:
            if info is not None and not truncated:
                truncated = _has_unseen(view, v, l, seen)
            continue
        nd = d + 1
        items = adj[l][v].items() if schemas is not None else adj[l][v]
        if schemas is None:
            for w in items:
                if w in nodes:
                    key = w * nl + l
                    if key not in seen:
                        seen.add(key)
                        if w not in best:
                            best[w] = nd
                        q.append((w, l, nd))
        else:
            for w, s in items:
                if s in schemas and w in nodes:
                    key = w * nl + l
                    if key not in seen:
                        seen.add(key)
                        if w not in best:
                            best[w] = nd
                        q.append((w, l, nd))
        for l2 in range(nl):
            if l2 != l and adj[l2][v]:
                key = v * nl + l2
                if key not in seen:
                    seen.add(key)
                    q.append((v, l2, nd))
    if info is not None:
        info["truncated"] = truncated
    return best


def _has_unseen(view: SubgraphView, v: int, l: int, seen) -> bool:
    g = view.graph
    nl = g.num_layers
    for w in view.neighbors(l, v):
        if w * nl + l not in seen:
            return True
    for l2 in range(nl):
        if l2 != l and g.adj[l2][v] and v * nl + l2 not in seen:
            # a switch only matters if the new layer leads somewhere
            if any(w * nl + l2 not in seen for w in view.neighbors(l2, v)):
                return True
    return False


def ml_distance(graph, subset, src: int, dst: int, schemas=None):
    view = _view(graph, subset, schemas)
    if src not in view.nodes or dst not in view.nodes:
        raise DomainError("distance endpoints must lie in the subset")
    if src == dst:
        return 0
    return bfs_distances(view, src).get(dst, INF)


def query_distance_map(view: SubgraphView, Q, limit: float = INF) -> dict[int, float]:
    """dist(u, Q) = max over q of dist(u, q) for every node of the view."""
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    out = None
    for q in Q:
        d = bfs_distances(view, q, limit)
        if out is None:
            out = {u: d.get(u, INF) for u in view.nodes}
        else:
            for u in out:
                x = d.get(u, INF)
                if x > out[u]:
                    out[u] = x
    return out


def query_distance(graph, subset, S, Q, schemas=None):
    view = _view(graph, subset, schemas)
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    for x in list(S) + Q:
        if x not in view.nodes:
            raise DomainError(f"node {x} not in subset")
    worst = 0
    for q in Q:
        d = bfs_distances(view, q)
        for u in S:
            x = d.get(u, INF)
            if x > worst:
                worst = x
                if worst == INF:
                    return INF
    return worst


def diameter(graph, subset=None, schemas=None):
    view = _view(graph, subset, schemas)
    if not view.nodes:
        raise DomainError("diameter of an empty subset")
    worst = 0
    size = len(view.nodes)
    for s in view.nodes:
        d = bfs_distances(view, s)
        if len(d) < size:
            return INF
        m = max(d.values())
        if m > worst:
            worst = m
    return worst


def connected_component(graph, subset, Q, schemas=None) -> frozenset[int]:
    """Union-graph component holding all of ``Q``; raises QuerySplit otherwise."""
    view = _view(graph, subset, schemas)
    Q = list(Q)
    if not Q:
        raise DomainError("empty query set")
    for q in Q:
        if q not in view.nodes:
            raise QueryNotContained(f"query node {q} not in subset")
    comp = {Q[0]}
    stack = [Q[0]]
    while stack:
        v = stack.pop()
        for w in view.union_neighbors(v):
            if w not in comp:
                comp.add(w)
                stack.append(w)
    if any(q not in comp for q in Q):
        raise QuerySplit("query nodes are in different components")
    return frozenset(comp)


def components(view: SubgraphView) -> list[frozenset[int]]:
    seen = set()
    out = []
    for s in sorted(view.nodes):
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            for w in view.union_neighbors(v):
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        out.append(frozenset(comp))
    return out
