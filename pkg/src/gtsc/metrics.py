"""K-means on learned features, clustering accuracy and NMI."""

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .exceptions import LabelMismatch

__all__ = ["kmeans", "accuracy", "nmi", "contingency"]


def kmeans(features, n_clusters, seed=0, restarts=10):
    """Lloyd's K-means with k-means++ seeding; best of ``restarts`` by inertia.

    ``features`` has one row per sample. Deterministic for a fixed seed.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError(f"features must be 2-D, got {features.shape}")
    if not 1 <= n_clusters <= features.shape[0]:
        raise ValueError(f"need 1 <= n_clusters <= {features.shape[0]}, got {n_clusters}")
    km = KMeans(n_clusters=n_clusters, init="k-means++", n_init=restarts,
                random_state=seed, algorithm="lloyd")
    return km.fit_predict(features).astype(np.int64)


def _check_pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.ndim != 1 or pred.shape != truth.shape:
        raise LabelMismatch(f"label shapes differ: {pred.shape} vs {truth.shape}")
    return pred, truth


def contingency(pred, truth):
    """Counts table with rows for predicted clusters and columns for true classes."""
    pred, truth = _check_pair(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def accuracy(pred, truth):
    """Fraction of samples correct under the best one-to-one relabeling.

    The matching is a maximum-weight assignment on the contingency table,
    zero-padded to square when the two sides have different cluster counts.
    """
    pred, truth = _check_pair(pred, truth)
    if pred.size == 0:
        return 0.0
    table = contingency(pred, truth)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum()) / pred.size


def nmi(pred, truth):
    """Mutual information over the geometric mean of the two entropies.

    Natural logs. Returns 1.0 when both labelings have a single cluster and
    0.0 when only one of them does.
    """
    pred, truth = _check_pair(pred, truth)
    n = pred.size
    if n == 0:
        return 0.0
    table = contingency(pred, truth)
    if table.shape == (1, 1):
        return 1.0
    if 1 in table.shape:
        return 0.0
    pij = table / n
    pi = table.sum(axis=1) / n
    pj = table.sum(axis=0) / n
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / np.outer(pi, pj)[nz])))
    hi = -float(np.sum(pi * np.log(pi)))
    hj = -float(np.sum(pj * np.log(pj)))
    return min(1.0, max(0.0, mi / np.sqrt(hi * hj)))
