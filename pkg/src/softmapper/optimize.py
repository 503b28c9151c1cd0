"""Combined likelihood + topology loss and its gradient-descent optimiser.

The loss at mixture parameters theta is

    -lambda1 * logL(Y | theta) / n  -  lambda2 * mean_persistence(D_mode)

where ``D_mode`` is the extended persistence diagram of the mode Mapper
graph with node values equal to the mean log mixture density of each
node's members.

The mode assignment, the clustering and the persistence pairing are all
piecewise constant in theta. Gradients hold them fixed (a "frozen
structure"), so every diagram coordinate is the value of one known node
and differentiates as a smooth average of per-point log densities.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assignment import mode_assignment
from .cluster import ClusteringConfig
from .gmm import (FreeParams, GmmParams, from_free, log_likelihood, pointwise_log_likelihood,
                  responsibilities, std_floor, to_free)
from .mapper import MapperGraph, mapper_function
from .persistence import PersistenceDiagram, extended_persistence, mean_persistence, node_filtration_loglik

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e8
GRADIENT_MODES = ("analytic", "finite_difference")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class LossConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.lambda1 == 0 and self.lambda2 == 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    steps: int = 200
    gradient_mode: str = "analytic"

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be nonnegative")
        if int(self.steps) < 1:
            raise ValueError("steps must be at least 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")


@dataclass
class Structure:
    """Everything in the loss that is locally constant in theta."""
    H: np.ndarray
    graph: MapperGraph
    diagram: PersistenceDiagram

    def pairing(self) -> tuple:
        return tuple(sorted((p.kind, p.birth_node, p.death_node) for p in self.diagram.points))

    def same_as(self, other: "Structure") -> bool:
        return (np.array_equal(self.H, other.H) and self.graph.signature() == other.graph.signature()
                and self.pairing() == other.pairing())


@dataclass
class LossValue:
    total: float
    nll_term: float
    topo_term: float
    structure: Structure


@dataclass
class TraceRecord:
    step: int
    total_loss: float
    nll_term: float
    topo_term: float
    params: GmmParams = field(repr=False)


def evaluate(theta: GmmParams, pc, y, cfg: ClusteringConfig, weights: LossConfig) -> LossValue:
    y = np.asarray(y, dtype=float)
    H = mode_assignment(responsibilities(y, theta))
    g = mapper_function(pc, H, cfg)
    D = extended_persistence(node_filtration_loglik(g, y, theta))
    nll = -log_likelihood(y, theta) / y.size
    topo = mean_persistence(D) if D.M else 0.0
    total = weights.lambda1 * nll - weights.lambda2 * topo
    return LossValue(total, nll, topo, Structure(H, g, D))


def total_loss(theta: GmmParams, pc, y, cfg: ClusteringConfig, weights: LossConfig):
    """Returns ``(loss, {"nll_term": ..., "topo_term": ...})``."""
    v = evaluate(theta, pc, y, cfg, weights)
    return v.total, {"nll_term": v.nll_term, "topo_term": v.topo_term}


def _point_gradients(y, theta: GmmParams):
    """Per-point log density and its gradient in free coordinates (n x 3K)."""
    r = responsibilities(y, theta)
    z = (y[:, None] - theta.means) / theta.stds
    d_xi = r - theta.weights
    d_mu = r * z / theta.stds
    d_logsd = r * (z * z - 1.0)
    return pointwise_log_likelihood(y, theta), np.hstack([d_xi, d_mu, d_logsd])


def frozen_loss(phi: FreeParams, y, structure: Structure, weights: LossConfig) -> float:
    """The loss with assignment, graph and pairing held at ``structure``."""
    theta = from_free(phi)
    ll = pointwise_log_likelihood(y, theta)
    loss = -weights.lambda1 * ll.mean()
    pts = structure.diagram.points
    if pts and weights.lambda2:
        node_val = np.array([ll[nd.members].mean() for nd in structure.graph.nodes])
        pers = [abs(node_val[p.death_node] - node_val[p.birth_node]) for p in pts]
        loss -= weights.lambda2 * float(np.mean(pers))
    return float(loss)


def analytic_gradient(phi: FreeParams, y, structure: Structure, weights: LossConfig) -> np.ndarray:
    theta = from_free(phi)
    ll, grad_pt = _point_gradients(y, theta)
    grad = -weights.lambda1 * grad_pt.mean(axis=0)
    pts = structure.diagram.points
    if pts and weights.lambda2:
        nodes = structure.graph.nodes
        node_val = np.array([ll[nd.members].mean() for nd in nodes])
        node_grad = np.array([grad_pt[nd.members].mean(axis=0) for nd in nodes])
        acc = np.zeros_like(grad)
        for p in pts:
            # sign(0) = 0: coincident birth and death contribute nothing
            s = np.sign(node_val[p.death_node] - node_val[p.birth_node])
            if s:
                acc += s * (node_grad[p.death_node] - node_grad[p.birth_node])
        grad -= weights.lambda2 * acc / len(pts)
    return grad


def finite_difference_gradient(phi: FreeParams, y, structure: Structure, weights: LossConfig) -> np.ndarray:
    x = phi.as_vector()
    grad = np.empty_like(x)
    for k in range(x.size):
        h = 1e-5 * (1.0 + abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        grad[k] = (frozen_loss(FreeParams.from_vector(xp), y, structure, weights)
                   - frozen_loss(FreeParams.from_vector(xm), y, structure, weights)) / (2 * h)
    return grad


def loss_gradient(theta: GmmParams, pc, y, cfg: ClusteringConfig, weights: LossConfig,
                  mode: str = "analytic", structure: Optional[Structure] = None) -> FreeParams:
    """Gradient of the loss over the free coordinates (logits, means, log stds).

    The structure is computed at ``theta`` unless supplied.
    """
    y = np.asarray(y, dtype=float)
    if structure is None:
        structure = evaluate(theta, pc, y, cfg, weights).structure
    phi = to_free(theta)
    if mode == "analytic":
        g = analytic_gradient(phi, y, structure, weights)
    elif mode == "finite_difference":
        g = finite_difference_gradient(phi, y, structure, weights)
    else:
        raise ValueError(f"unknown gradient mode {mode!r}")
    return FreeParams.from_vector(g)


def sgd_fit(pc, y, theta0: GmmParams, train: TrainConfig, weights: LossConfig, cfg: ClusteringConfig,
            callback: Optional[Callable[[int, GmmParams], None]] = None):
    """Full-batch gradient descent on the free parameters.

    Each step rebuilds the mode graph and its diagram at the current
    parameters, then updates logits, means and log stds in that order, each
    block using the gradient at the already-updated earlier blocks (with the
    step's structure held fixed). Log stds are clamped so stds never drop
    below ``std_floor(y)``.

    Returns ``(theta, trace)`` with one :class:`TraceRecord` per step,
    recorded before that step's update.
    """
    y = np.asarray(y, dtype=float)
    grad_fn = analytic_gradient if train.gradient_mode == "analytic" else finite_difference_gradient
    log_floor = np.log(std_floor(y))
    phi = to_free(theta0)
    phi.log_stds = np.maximum(phi.log_stds, log_floor)
    K = phi.xi.size
    lr = float(train.learning_rate)
    trace = []
    for step in range(1, int(train.steps) + 1):
        theta = from_free(phi)
        value = evaluate(theta, pc, y, cfg, weights)
        if not np.isfinite(value.total) or abs(value.total) > DIVERGENCE_LIMIT:
            raise TrainingDivergedError(f"step {step}: loss {value.total!r} is not finite or exceeds "
                                        f"{DIVERGENCE_LIMIT:g}; parameters {theta.to_dict()}")
        trace.append(TraceRecord(step, value.total, value.nll_term, value.topo_term, theta))
        log.debug("step %d loss %.6f nll %.6f topo %.6f", step, value.total, value.nll_term, value.topo_term)
        for block in range(3):
            g = grad_fn(phi, y, value.structure, weights)
            vec = phi.as_vector()
            sl = slice(block * K, (block + 1) * K)
            vec[sl] -= lr * g[sl]
            phi = FreeParams.from_vector(vec)
        phi.log_stds = np.maximum(phi.log_stds, log_floor)
        vec = phi.as_vector()
        if not np.all(np.isfinite(vec)) or np.max(np.abs(vec)) > DIVERGENCE_LIMIT or phi.log_stds.max() > 700:
            raise TrainingDivergedError(f"step {step}: parameters left the representable range after the "
                                        f"update (learning rate {lr:g})")
        if callback is not None:
            callback(step, from_free(phi))
    return from_free(phi), trace
