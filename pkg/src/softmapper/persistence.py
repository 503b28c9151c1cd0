"""Extended persistence of real-valued functions on graph vertices.

The diagram has four kinds of points:

``ORD0``
    branches born at a local minimum and merged into an older component
    while sweeping upwards;
``REL1``
    the mirror image for the downward sweep, born at a local maximum;
``EXT0``
    one ``(min, max)`` point per connected component;
``EXT1``
    one point per independent cycle: born at the value where the cycle
    closes sweeping upwards, dying where it closes sweeping downwards.

Vertices with equal values are ordered by index in both sweeps and an edge
enters when its later endpoint does (lower star upwards, upper star
downwards). Every point remembers which vertex supplies its birth and its
death value, which is what the gradient code differentiates through.
"""
from __future__ import annotations

import csv
import io
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .gmm import pointwise_log_likelihood

KINDS = ("ORD0", "REL1", "EXT0", "EXT1")


@dataclass
class FiltrationGraph:
    n_nodes: int
    edges: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.n_nodes:
            raise ValueError(f"{self.values.size} values for {self.n_nodes} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("filtration values must be finite")
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range")
            edges.add((min(u, v), max(u, v)))
        self.edges = sorted(edges)

    @classmethod
    def from_graph(cls, g, values) -> "FiltrationGraph":
        return cls(g.n_nodes, list(g.edges), values)


@dataclass(frozen=True)
class PersistencePoint:
    kind: str
    birth: float
    death: float
    birth_node: int = -1
    death_node: int = -1

    @property
    def persistence(self) -> float:
        return abs(self.death - self.birth)


@dataclass
class PersistenceDiagram:
    points: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.points)

    def __len__(self):
        return len(self.points)

    def of_kind(self, kind: str) -> list:
        return [p for p in self.points if p.kind == kind]

    def multiset(self) -> Counter:
        return Counter((p.kind, p.birth, p.death) for p in self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("class,birth,death\n")
        for p in self.points:
            buf.write(f"{p.kind},{p.birth:.17g},{p.death:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PersistenceDiagram":
        rows = list(csv.DictReader(io.StringIO(text)))
        pts = []
        for r in rows:
            if r["class"] not in KINDS:
                raise ValueError(f"unknown diagram class {r['class']!r}")
            pts.append(PersistencePoint(r["class"], float(r["birth"]), float(r["death"])))
        return cls(pts)


def node_filtration_loglik(g, y, theta) -> FiltrationGraph:
    """Node value = mean log mixture density of the node's members."""
    ll = pointwise_log_likelihood(y, theta)
    values = [ll[nd.members].mean() for nd in g.nodes]
    return FiltrationGraph.from_graph(g, values)


def node_filtration_mean(g, f) -> FiltrationGraph:
    f = np.asarray(f, dtype=float)
    return FiltrationGraph.from_graph(g, [f[nd.members].mean() for nd in g.nodes])


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x


def _sweep_order(values, descending: bool):
    n = len(values)
    key = (lambda v: (-values[v], v)) if descending else (lambda v: (values[v], v))
    order = sorted(range(n), key=key)
    rank = [0] * n
    for r, v in enumerate(order):
        rank[v] = r
    return order, rank


def _zero_sweep(n, adj, order, rank, values, kind, on_cycle=None, on_merge=None):
    """Elder-rule union-find over a vertex order with star-entering edges.

    Returns the union-find structure and the per-root oldest vertex. Merges
    emit a point whose birth is the younger component's oldest vertex and
    whose death is the vertex whose arrival brought the merging edge.
    """
    uf = _UnionFind(n)
    oldest = list(range(n))
    points = []
    for v in order:
        for u in sorted((u for u in adj[v] if rank[u] < rank[v]), key=rank.__getitem__):
            ru, rv = uf.find(u), uf.find(v)
            if ru == rv:
                if on_cycle is not None:
                    on_cycle(u, v)
                continue
            if rank[oldest[ru]] < rank[oldest[rv]]:
                elder, younger = ru, rv
            else:
                elder, younger = rv, ru
            b = oldest[younger]
            points.append(PersistencePoint(kind, float(values[b]), float(values[v]), b, v))
            uf.parent[younger] = elder
            if on_merge is not None:
                on_merge(u, v)
    return uf, oldest, points


def _forest_path(forest, src, dst):
    """Edges of the unique path between two vertices of a forest."""
    prev = {src: None}
    stack = [src]
    while stack:
        x = stack.pop()
        if x == dst:
            break
        for y in forest[x]:
            if y not in prev:
                prev[y] = x
                stack.append(y)
    path = []
    x = dst
    while prev[x] is not None:
        path.append((min(x, prev[x]), max(x, prev[x])))
        x = prev[x]
    return path


def extended_persistence(fg: FiltrationGraph, keep_zero: bool = False) -> PersistenceDiagram:
    """Extended persistence diagram of a vertex function on a graph.

    ORD0, REL1 and EXT0 come from two elder-rule union-find sweeps. For
    EXT1, every edge closing a cycle on the way down yields a cycle of the
    graph; writing it in the fundamental-cycle basis of the upward spanning
    forest (one coordinate per upward cycle-closing edge) and reducing it
    against the cycles already killed gives, as the highest remaining
    coordinate, the youngest upward cycle it kills.

    Zero-persistence ORD0/REL1 points are dropped unless ``keep_zero``;
    EXT points are always kept since they count components and cycles.
    """
    n = fg.n_nodes
    values = fg.values
    adj = [[] for _ in range(n)]
    for u, v in fg.edges:
        adj[u].append(v)
        adj[v].append(u)

    # upward sweep: ORD0, plus the cycle-closing edges in filtration order
    asc_order, asc_rank = _sweep_order(values, descending=False)
    positive = {}
    positive_birth = []

    def record_positive(u, v):
        positive[(min(u, v), max(u, v))] = len(positive_birth)
        positive_birth.append(v)

    uf_up, oldest_up, ord0 = _zero_sweep(n, adj, asc_order, asc_rank, values, "ORD0",
                                         on_cycle=record_positive)

    # downward sweep: REL1, and EXT1 through cycle-space reduction
    desc_order, desc_rank = _sweep_order(values, descending=True)
    forest = [[] for _ in range(n)]
    pivots = {}
    ext1 = []

    def grow_forest(u, v):
        forest[u].append(v)
        forest[v].append(u)

    def kill_cycle(u, v):
        coords = 0
        for e in _forest_path(forest, u, v) + [(min(u, v), max(u, v))]:
            idx = positive.get(e)
            if idx is not None:
                coords ^= 1 << idx
        while coords:
            top = coords.bit_length() - 1
            if top not in pivots:
                break
            coords ^= pivots[top]
        if not coords:
            raise RuntimeError("cycle closed downwards is dependent on killed cycles")
        top = coords.bit_length() - 1
        pivots[top] = coords
        b = positive_birth[top]
        ext1.append(PersistencePoint("EXT1", float(values[b]), float(values[v]), b, v))

    _, _, rel1 = _zero_sweep(n, adj, desc_order, desc_rank, values, "REL1",
                             on_cycle=kill_cycle, on_merge=grow_forest)

    # EXT0: each component's global min paired with its global max
    top_vertex = {}
    for v in desc_order:
        top_vertex.setdefault(uf_up.find(v), v)
    ext0 = []
    for v in asc_order:
        root = uf_up.find(v)
        if root in top_vertex:
            hi = top_vertex.pop(root)
            ext0.append(PersistencePoint("EXT0", float(values[v]), float(values[hi]), v, hi))

    if not keep_zero:
        ord0 = [p for p in ord0 if p.birth != p.death]
        rel1 = [p for p in rel1 if p.birth != p.death]
    return PersistenceDiagram(ord0 + rel1 + ext0 + ext1)


def mean_persistence(D: PersistenceDiagram) -> float:
    if D.M == 0:
        warnings.warn("empty persistence diagram; mean persistence taken as 0", RuntimeWarning)
        return 0.0
    return float(np.mean([p.persistence for p in D.points]))


def cone_oracle(fg: FiltrationGraph, max_vertices: int = 64, keep_zero: bool = False) -> PersistenceDiagram:
    """Extended persistence by brute-force reduction of the coned complex.

    The cone vertex comes first, then the graph in upward (lower-star)
    order, then the cone over every vertex and edge in downward order. The
    full boundary matrix is reduced over Z/2 and each pair is classified by
    which half of the filtration its two simplices fall in. Quadratic in
    memory and cubic in time, so it refuses large graphs.
    """
    n = fg.n_nodes
    if n > max_vertices:
        raise ValueError(f"cone oracle limited to {max_vertices} vertices, got {n}")
    f = [float(x) for x in fg.values]

    def up_key(v):
        return (f[v], v)

    def down_key(v):
        return (-f[v], v)

    # simplex = (part, dim, vertices); value = filtration value used for reporting
    simplices = [("apex", 0, ())]
    up = [(up_key(v), (), ("up", 0, (v,))) for v in range(n)]
    for a, b in fg.edges:
        hi, lo = (a, b) if up_key(a) > up_key(b) else (b, a)
        up.append((up_key(hi), up_key(lo), ("up", 1, (a, b))))
    up.sort(key=lambda t: (t[0], t[1] != (), t[1]))
    down = [(down_key(v), (), ("down", 1, (v,))) for v in range(n)]
    for a, b in fg.edges:
        late, early = (a, b) if down_key(a) > down_key(b) else (b, a)
        down.append((down_key(late), down_key(early), ("down", 2, (a, b))))
    down.sort(key=lambda t: (t[0], t[1] != (), t[1]))
    simplices += [s for *_, s in up] + [s for *_, s in down]
    index = {s: i for i, s in enumerate(simplices)}

    columns = []
    for part, dim, verts in simplices:
        col = 0
        if part == "up" and dim == 1:
            for v in verts:
                col |= 1 << index[("up", 0, (v,))]
        elif part == "down" and dim == 1:
            col = (1 << index[("up", 0, verts)]) | 1  # apex is index 0
        elif part == "down" and dim == 2:
            col = 1 << index[("up", 1, verts)]
            for v in verts:
                col |= 1 << index[("down", 1, (v,))]
        columns.append(col)

    low_owner = {}
    pairs = []
    for j in range(len(columns)):
        col = columns[j]
        while col:
            low = col.bit_length() - 1
            if low not in low_owner:
                break
            col ^= columns[low_owner[low]]
        columns[j] = col
        if col:
            low = col.bit_length() - 1
            low_owner[low] = j
            pairs.append((low, j))

    def value(s):
        part, dim, verts = s
        if part == "up":
            return max(f[v] for v in verts)
        return min(f[v] for v in verts)

    points = []
    for i, j in pairs:
        si, sj = simplices[i], simplices[j]
        if si[0] == "up" and sj[0] == "up":
            kind = "ORD0"
        elif si[0] == "down" and sj[0] == "down":
            kind = "REL1"
        elif si[0] == "up" and sj[0] == "down":
            kind = "EXT0" if si[1] == 0 else "EXT1"
        else:
            raise RuntimeError(f"unexpected pair {si} -> {sj}")
        b, d = value(si), value(sj)
        if kind in ("ORD0", "REL1") and b == d and not keep_zero:
            continue
        points.append(PersistencePoint(kind, b, d))
    return PersistenceDiagram(points)
