"""Graph quality scores and the subgroup chi-square test."""
from __future__ import annotations

import json
from decimal import ROUND_HALF_EVEN, Decimal
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaincc

from .mapper import MapperGraph, graph_stats

TSR_DIMENSIONS = ("components", "loops")
_STAT_KEY = {"components": "connected_components", "loops": "loops"}


@dataclass
class GroundTruthTopology:
    components: Optional[int] = None
    loops: Optional[int] = None

    def __post_init__(self):
        if self.components is None and self.loops is None:
            raise ValueError("ground truth needs components, loops or both")
        for name in TSR_DIMENSIONS:
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 0):
                raise ValueError(f"true {name} must be a nonnegative integer, got {v}")

    def specified(self) -> tuple:
        return tuple(name for name in TSR_DIMENSIONS if getattr(self, name) is not None)


@dataclass
class MetricReport:
    sc: float
    sc_norm: float
    tsr: float
    sc_adj: float

    @classmethod
    def build(cls, sc: float, tsr_value: float) -> "MetricReport":
        norm = sc_norm(sc)
        return cls(float(sc), norm, float(tsr_value), sc_adj(norm, tsr_value))

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "MetricReport":
        return cls(**json.loads(text))

    def row(self, dataset: str = "", method: str = "") -> str:
        cells = [round2(v) for v in (self.sc_norm, self.tsr, self.sc_adj)]
        return "\t".join([dataset, method] + cells)


def round2(value: float) -> str:
    """Two-decimal text with ties to even (0.795 -> 0.80, 0.405 -> 0.40).

    The value is first snapped to 12 significant digits so binary residue
    such as 0.7949999999999999 rounds as the decimal it stands for.
    """
    return str(Decimal(f"{float(value):.12g}").quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def silhouette(pc, g: MapperGraph, block: int = 2048) -> float:
    """Mean silhouette over all (point, node) memberships.

    A point lying in two nodes contributes one sample to each, labelled by
    that node. Samples in single-member nodes score 0.
    """
    points = np.asarray(getattr(pc, "points", pc), dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if g.n_nodes < 2:
        raise ValueError(f"silhouette needs at least 2 nodes, got {g.n_nodes}")
    ids = np.concatenate([nd.members for nd in g.nodes]).astype(int)
    label = np.repeat(np.arange(g.n_nodes), [nd.size for nd in g.nodes])
    sizes = np.bincount(label, minlength=g.n_nodes).astype(float)
    onehot = np.zeros((ids.size, g.n_nodes))
    onehot[np.arange(ids.size), label] = 1.0
    X = points[ids]

    scores = np.zeros(ids.size)
    for start in range(0, ids.size, block):
        stop = min(start + block, ids.size)
        sums = cdist(X[start:stop], X) @ onehot
        lab = label[start:stop]
        rows = np.arange(stop - start)
        own = sizes[lab]
        a = np.where(own > 1, sums[rows, lab] / np.maximum(own - 1, 1), 0.0)
        others = sums / sizes
        others[rows, lab] = np.inf
        b = others.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        scores[start:stop] = np.where(own > 1, s, 0.0)
    return float(scores.mean())


def sc_norm(sc: float) -> float:
    if not -1.0 <= sc <= 1.0:
        raise ValueError(f"silhouette must lie in [-1, 1], got {sc}")
    return (sc + 1.0) / 2.0


def tsr(g: MapperGraph, truth: GroundTruthTopology, dims: Optional[Sequence[str]] = None) -> float:
    """Topological structure ratio: min/max agreement of detected and true counts.

    Averaged over ``dims`` (default: every dimension the truth specifies).
    """
    dims = truth.specified() if dims is None else tuple(dims)
    if not dims:
        raise ValueError("no dimensions to score")
    stats = graph_stats(g)
    ratios = []
    for name in dims:
        if name not in TSR_DIMENSIONS:
            raise ValueError(f"unknown dimension {name!r}; expected one of {TSR_DIMENSIONS}")
        true = getattr(truth, name)
        if true is None:
            raise ValueError(f"ground truth for {name} is required")
        ratios.append(count_ratio(stats[_STAT_KEY[name]], true))
    return float(np.mean(ratios))


def count_ratio(detected: int, true: int) -> float:
    if detected < 0 or true < 0:
        raise ValueError("counts must be nonnegative")
    hi = max(detected, true)
    return 1.0 if hi == 0 else min(detected, true) / hi


def sc_adj(sc_norm_value: float, tsr_value: float) -> float:
    for name, v in (("sc_norm", sc_norm_value), ("tsr", tsr_value)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return (sc_norm_value + tsr_value) / 2.0


def chi_square_test(counts_a, counts_b) -> tuple[float, float]:
    """Pearson chi-square on the 2 x C table of two label histograms.

    Categories empty in both histograms are dropped before counting degrees
    of freedom. Returns ``(statistic, p_value)``.
    """
    table = np.array([np.asarray(counts_a, dtype=float), np.asarray(counts_b, dtype=float)])
    if table.ndim != 2 or table.shape[1] < 1:
        raise ValueError("histograms must be non-empty 1-D sequences of equal length")
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise ValueError("counts must be finite and nonnegative")
    if table.sum() == 0:
        raise ValueError("contingency table is all zeros")
    if np.any(table.sum(axis=1) == 0):
        raise ValueError("each histogram needs at least one count")
    table = table[:, table.sum(axis=0) > 0]
    df = table.shape[1] - 1
    if df == 0:
        return 0.0, 1.0
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    return stat, chi2_sf(stat, df)


def chi2_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-square distribution via the regularized incomplete gamma."""
    if df < 1 or statistic < 0:
        raise ValueError("need df >= 1 and a nonnegative statistic")
    return float(gammaincc(df / 2.0, statistic / 2.0))


def label_histogram(labels, members, categories) -> np.ndarray:
    """Counts of each category among ``labels[members]``."""
    labels = np.asarray(labels)
    index = {c: k for k, c in enumerate(categories)}
    out = np.zeros(len(categories), dtype=int)
    for lab in labels[np.asarray(members, dtype=int)]:
        out[index[lab]] += 1
    return out


def subgroup_test(g: MapperGraph, labels, node_ids) -> dict:
    """Chi-square comparison of label counts in a node set against all other points."""
    labels = np.asarray(labels)
    node_ids = sorted(set(int(k) for k in node_ids))
    for k in node_ids:
        if not 0 <= k < g.n_nodes:
            raise IndexError(f"node {k} out of range for {g.n_nodes} nodes")
    inside = np.unique(np.concatenate([g.nodes[k].members for k in node_ids])) if node_ids else np.array([], int)
    outside = np.setdiff1d(np.arange(labels.size), inside)
    categories = np.unique(labels).tolist()
    a = label_histogram(labels, inside, categories)
    b = label_histogram(labels, outside, categories)
    stat, p = chi_square_test(a, b)
    return {"nodes": node_ids, "categories": categories, "subgroup_counts": a.tolist(),
            "rest_counts": b.tolist(), "statistic": stat, "p_value": p}
