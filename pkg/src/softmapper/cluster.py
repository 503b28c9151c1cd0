"""Clustering backends used inside each pullback set."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import cdist

LINKAGES = ("single", "complete", "average")
NOISE_POLICIES = ("singleton", "drop")


@dataclass
class ClusteringConfig:
    method: str = "dbscan"
    eps: float = 0.3
    min_pts: int = 5
    threshold: float = 1.0
    linkage: str = "average"
    noise_policy: str = "singleton"

    def __post_init__(self):
        if self.method not in ("dbscan", "agglomerative"):
            raise ValueError(f"unknown clustering method {self.method!r}")
        if self.method == "dbscan":
            if not self.eps > 0:
                raise ValueError("dbscan needs eps > 0")
            if int(self.min_pts) < 1:
                raise ValueError("dbscan needs min_pts >= 1")
        else:
            if not self.threshold > 0:
                raise ValueError("agglomerative clustering needs threshold > 0")
            if self.linkage not in LINKAGES:
                raise ValueError(f"linkage must be one of {LINKAGES}")
        if self.noise_policy not in NOISE_POLICIES:
            raise ValueError(f"noise_policy must be one of {NOISE_POLICIES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ClusteringConfig":
        return cls(**data)


def dbscan(points, eps: float, min_pts: int):
    """Density clustering with closed ``eps``-balls.

    A point is core when its ball, itself included, holds at least
    ``min_pts`` points. Clusters grow from cores in index order; a border
    point joins the first cluster that reaches it.

    Returns ``(clusters, noise)``: a list of sorted index arrays and the
    sorted array of noise indices.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        return [], np.empty(0, dtype=int)
    if eps <= 0 or min_pts < 1:
        raise ValueError("dbscan needs eps > 0 and min_pts >= 1")
    adj = cdist(pts, pts) <= eps
    core = adj.sum(axis=1) >= min_pts
    label = np.full(n, -1)
    clusters = []
    for seed in range(n):
        if not core[seed] or label[seed] >= 0:
            continue
        cid = len(clusters)
        label[seed] = cid
        stack = [seed]
        while stack:
            p = stack.pop()
            for q in np.flatnonzero(adj[p] & (label < 0)):
                label[q] = cid
                if core[q]:
                    stack.append(q)
        clusters.append(np.flatnonzero(label == cid))
    return clusters, np.flatnonzero(label < 0)


def agglomerative(points, threshold: float, method: str = "average"):
    """Hierarchical clustering cut so that every merge below ``threshold`` is kept.

    Clusters whose linkage distance is strictly smaller than ``threshold``
    are merged; the rest stay apart.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if method not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        return []
    if n == 1:
        return [np.array([0])]
    Z = linkage(pts, method=method, metric="euclidean")
    labels = fcluster(Z, t=np.nextafter(threshold, -np.inf), criterion="distance")
    return _groups_from_labels(labels)


def _groups_from_labels(labels):
    labels = np.asarray(labels)
    # order clusters by their smallest member for reproducible node ids
    groups = [np.flatnonzero(labels == lab) for lab in np.unique(labels)]
    return sorted(groups, key=lambda g: int(g[0]))


def cluster_points(points, cfg: ClusteringConfig):
    """Cluster ``points`` per ``cfg``; returns local index arrays, noise handled per policy."""
    if cfg.method == "agglomerative":
        return agglomerative(points, cfg.threshold, cfg.linkage)
    clusters, noise = dbscan(points, cfg.eps, int(cfg.min_pts))
    if cfg.noise_policy == "singleton":
        clusters = clusters + [np.array([i]) for i in noise]
        clusters.sort(key=lambda g: int(g[0]))
    return clusters
