"""Mapper graphs: pullback, clustering and nerve, plus graph summaries."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .assignment import check_assignment_matrix, group_members
from .cluster import ClusteringConfig, cluster_points


@dataclass
class Node:
    group: int
    members: np.ndarray

    @property
    def size(self) -> int:
        return int(self.members.size)


@dataclass
class MapperGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list:
        adj = [[] for _ in self.nodes]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def signature(self) -> tuple:
        """Hashable identity: node (group, members) tuples plus the edge list."""
        return (tuple((nd.group, tuple(int(i) for i in nd.members)) for nd in self.nodes),
                tuple(self.edges))

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": k, "group": int(nd.group), "members": [int(i) for i in nd.members]}
                      for k, nd in enumerate(self.nodes)],
            "edges": [[int(u), int(v)] for u, v in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MapperGraph":
        nodes = sorted(data["nodes"], key=lambda d: d["id"])
        if [d["id"] for d in nodes] != list(range(len(nodes))):
            raise ValueError("node ids must be 0..N-1")
        return cls([Node(int(d["group"]), np.array(sorted(d["members"]), dtype=int)) for d in nodes],
                   sorted((min(u, v), max(u, v)) for u, v in data["edges"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "MapperGraph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, labels=None, name: str = "mapper") -> str:
        """Graphviz source; ``labels`` (one int per point) adds a ``label_hist`` attribute."""
        lines = [f"graph {name} {{"]
        for k, nd in enumerate(self.nodes):
            attrs = [f"group={nd.group}", f"size={nd.size}"]
            if labels is not None:
                hist = Counter(int(labels[i]) for i in nd.members)
                text = ";".join(f"{lab}:{cnt}" for lab, cnt in sorted(hist.items()))
                attrs.append(f'label_hist="{text}"')
            lines.append(f"  {k} [{', '.join(attrs)}];")
        for u, v in self.edges:
            lines.append(f"  {u} -- {v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def nerve(nodes: list) -> list:
    """Edges between every pair of nodes whose member sets intersect."""
    owners: dict = {}
    for k, nd in enumerate(nodes):
        for i in nd.members:
            owners.setdefault(int(i), []).append(k)
    edges = set()
    for ks in owners.values():
        for u, v in combinations(sorted(ks), 2):
            edges.add((u, v))
    return sorted(edges)


def build_graph(points, groups, cfg: ClusteringConfig) -> MapperGraph:
    """Cluster each group's points in the original space and take the nerve."""
    points = np.asarray(points, dtype=float)
    nodes = []
    for j, ids in enumerate(groups):
        ids = np.asarray(ids, dtype=int)
        if ids.size == 0:
            continue
        for local in cluster_points(points[ids], cfg):
            nodes.append(Node(j, np.sort(ids[local])))
    nodes.sort(key=lambda nd: (nd.group, int(nd.members[0])))
    return MapperGraph(nodes, nerve(nodes))


def mapper_function(pc, H, cfg: ClusteringConfig) -> MapperGraph:
    points = getattr(pc, "points", pc)
    H = check_assignment_matrix(H)
    if H.shape[0] != len(points):
        raise ValueError(f"assignment has {H.shape[0]} rows but the cloud has {len(points)} points")
    return build_graph(points, group_members(H), cfg)


@dataclass
class StandardCoverSpec:
    K: int
    p: float
    a: float | None = None
    b: float | None = None

    def validate(self):
        if int(self.K) < 1:
            raise ValueError("K must be at least 1")
        if not 0 <= self.p < 1:
            raise ValueError(f"overlap p must lie in [0, 1), got {self.p}")
        if self.a is not None and self.b is not None and self.a > self.b:
            raise ValueError("need a <= b")


def cover_intervals(a: float, b: float, K: int, p: float) -> np.ndarray:
    """K closed intervals of equal length L covering [a, b], adjacent ones overlapping by p*L."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0 <= p < 1:
        raise ValueError(f"overlap p must lie in [0, 1), got {p}")
    if K == 1:
        return np.array([[a, b]], dtype=float)
    L = (b - a) / (K - (K - 1) * p)
    starts = a + np.arange(K) * (1 - p) * L
    out = np.column_stack([starts, starts + L])
    out[-1, 1] = b
    return out


def standard_mapper(pc, f, spec: StandardCoverSpec, cfg: ClusteringConfig):
    """Fixed-interval Mapper. Returns ``(graph, intervals)``."""
    spec.validate()
    f = np.asarray(f, dtype=float)
    a = float(f.min()) if spec.a is None else float(spec.a)
    b = float(f.max()) if spec.b is None else float(spec.b)
    intervals = cover_intervals(a, b, int(spec.K), float(spec.p))
    groups = [np.flatnonzero((f >= lo) & (f <= hi)) for lo, hi in intervals]
    points = getattr(pc, "points", pc)
    return build_graph(points, groups, cfg), intervals


def connected_components(n: int, edges) -> np.ndarray:
    """Component label per vertex (labels numbered by smallest vertex)."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = [find(x) for x in range(n)]
    remap = {r: k for k, r in enumerate(dict.fromkeys(roots))}
    return np.array([remap[r] for r in roots], dtype=int)


def graph_stats(g: MapperGraph) -> dict:
    V, E = g.n_nodes, g.n_edges
    C = int(connected_components(V, g.edges).max() + 1) if V else 0
    return {
        "average_degree": 2.0 * E / V if V else 0.0,
        "connected_components": C,
        "loops": E - V + C,
    }


def summarize(values) -> dict:
    """Mean, normal-approximation 95% CI, median and modal value of a metric."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no values to summarise")
    mean = float(x.mean())
    # constant samples: exact zero spread, not rounding residue
    sd = float(x.std(ddof=1)) if x.size > 1 and np.ptp(x) > 0 else 0.0
    half = 1.96 * sd / np.sqrt(x.size)
    counts = Counter(np.round(x, 2).tolist())
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return {"mean": mean, "ci95": [mean - half, mean + half],
            "median": float(np.median(x)), "mode": float(mode), "n": int(x.size)}


def sample_statistics(graphs) -> dict:
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    stats = [graph_stats(g) for g in graphs]
    return {key: summarize([s[key] for s in stats]) for key in stats[0]}


def implicit_intervals(f, H) -> dict:
    """Per non-empty group j, the range of ``f`` over the points assigned to j."""
    f = np.asarray(f, dtype=float)
    out = {}
    for j, ids in enumerate(group_members(H)):
        if ids.size:
            out[j] = (float(f[ids].min()), float(f[ids].max()))
    return out
