"""Gaussian-mixture soft Mapper graphs with topology-aware parameter fitting."""
from .assignment import mode_assignment, sample_assignment
from .cluster import ClusteringConfig, agglomerative, dbscan
from .dataset import CIRCLE_PRESETS, CircleSpec, PointCloud, generate_circles, generate_cross, load_csv
from .gmm import GmmParams, em_fit, log_likelihood, responsibilities
from .mapper import MapperGraph, graph_stats, mapper_function, sample_statistics, standard_mapper
from .metrics import GroundTruthTopology, MetricReport, chi_square_test, silhouette, tsr
from .optimize import LossConfig, TrainConfig, evaluate, loss_gradient, sgd_fit, total_loss
from .persistence import PersistenceDiagram, extended_persistence, mean_persistence

__version__ = "0.1.0"

__all__ = [
    "CIRCLE_PRESETS", "CircleSpec", "ClusteringConfig", "GmmParams", "GroundTruthTopology", "LossConfig",
    "MapperGraph", "MetricReport", "PersistenceDiagram", "PointCloud", "TrainConfig", "agglomerative",
    "chi_square_test", "dbscan", "em_fit", "evaluate", "extended_persistence", "generate_circles", "generate_cross",
    "graph_stats", "load_csv", "log_likelihood", "loss_gradient", "mapper_function", "mean_persistence",
    "mode_assignment", "responsibilities", "sample_assignment", "sample_statistics", "sgd_fit",
    "silhouette", "standard_mapper", "total_loss", "tsr",
]
