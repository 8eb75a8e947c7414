"""Graph-regularized tubal tensor sparse coding (GTSC)."""

from ._config import config_context, get_config, set_config
from .coder import CodingProblem, istt
from .data import Dataset, load_dataset, synth_clusters
from .dictionary import learn_dictionary
from .graph import knn_graph, laplacian
from .metrics import accuracy, kmeans, nmi
from .pipeline import GTSC, ClusterReport, TrainedModel, evaluate, extract_features, train_gtsc
from .tensor import dft3, idft3, tprod, ttranspose

__version__ = "0.1.0"

__all__ = [
    "GTSC",
    "ClusterReport",
    "CodingProblem",
    "Dataset",
    "TrainedModel",
    "accuracy",
    "config_context",
    "dft3",
    "evaluate",
    "extract_features",
    "get_config",
    "idft3",
    "istt",
    "kmeans",
    "knn_graph",
    "laplacian",
    "learn_dictionary",
    "load_dataset",
    "nmi",
    "set_config",
    "synth_clusters",
    "tprod",
    "train_gtsc",
    "ttranspose",
]
