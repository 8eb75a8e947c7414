"""q-nearest-neighbor image graph and its Laplacian."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._config import get_config
from .exceptions import DegenerateData, DimMismatch, NoConvergenceWarning
from .tensor import check_tensor3, unfold

__all__ = [
    "AffinityGraph",
    "GraphLaplacian",
    "knn_graph",
    "laplacian",
    "laplacian_quadratic",
    "spectral_norm",
    "write_edge_list",
]


@dataclass(frozen=True)
class AffinityGraph:
    weights: np.ndarray
    q: int

    @property
    def n(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class GraphLaplacian:
    L: np.ndarray
    degree: np.ndarray

    @property
    def n(self):
        return self.L.shape[0]


def _image_matrix(images):
    # one row per lateral slice
    images = check_tensor3(images, "images")
    return images.transpose(1, 0, 2).reshape(images.shape[1], -1)


def knn_graph(images, q=3, strict_ties=False):
    """Binary, OR-symmetrized q-nearest-neighbor graph over lateral slices.

    Distances are Frobenius distances between the raw images. Ties are broken
    by the smaller index. With ``strict_ties`` a tie straddling the q-th
    neighbor raises DegenerateData instead.
    """
    flat = _image_matrix(images)
    n = flat.shape[0]
    if not 1 <= q < n:
        raise DimMismatch(f"need 1 <= q < n, got q={q}, n={n}")
    dist = cdist(flat, flat, "sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    # stable sort keeps index order among equal distances
    order = np.argsort(dist, axis=1, kind="stable")
    nearest = order[:, :q]
    if strict_ties and q < n - 1:
        rows = np.arange(n)
        if np.any(dist[rows, order[:, q - 1]] == dist[rows, order[:, q]]):
            raise DegenerateData(f"tied distances overflow q={q}")
    w = np.zeros((n, n))
    w[np.repeat(np.arange(n), q), nearest.ravel()] = 1.0
    w = np.maximum(w, w.T)
    return AffinityGraph(weights=w, q=q)


def laplacian(g):
    """``L = E - W`` with ``E`` the diagonal degree matrix."""
    w = g.weights if isinstance(g, AffinityGraph) else np.asarray(g, dtype=np.float64)
    deg = w.sum(axis=1)
    return GraphLaplacian(L=np.diag(deg) - w, degree=deg)


def laplacian_quadratic(b, lap):
    """``Tr(B L B^T)`` where ``B = unfold(b)`` has one column per image."""
    b = check_tensor3(b, "b")
    L = lap.L if isinstance(lap, GraphLaplacian) else np.asarray(lap)
    if L.shape != (b.shape[1], b.shape[1]):
        raise DimMismatch(f"Laplacian {L.shape} does not match {b.shape[1]} codes")
    B = unfold(b)
    return float(np.sum((B @ L) * B))


def spectral_norm(lap, tol=None, max_iter=None):
    """Largest singular value of the Laplacian by power iteration.

    Starts from the normalized all-ones vector plus a fixed perturbation,
    since all-ones spans the Laplacian null space. Warns with
    NoConvergenceWarning and returns the best estimate if ``max_iter`` runs out.
    """
    cfg = get_config()
    tol = cfg.power_tol if tol is None else tol
    max_iter = cfg.power_max_iter if max_iter is None else max_iter
    L = lap.L if isinstance(lap, GraphLaplacian) else np.asarray(lap, dtype=np.float64)
    n = L.shape[0]
    if not np.any(L):
        return 0.0
    idx = np.arange(n)
    v = None
    for phase in (0.5, 1.7, 2.9):
        cand = np.ones(n) + np.cos(phase * (idx + 1))
        cand /= np.linalg.norm(cand)
        if np.linalg.norm(L @ cand) > 0:
            v = cand
            break
    if v is None:
        return 0.0
    est = 0.0
    for _ in range(max_iter):
        u = L @ v
        new = float(np.linalg.norm(u))
        if new == 0.0:
            return est
        v = u / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    warnings.warn(f"power iteration did not converge in {max_iter} steps", NoConvergenceWarning)
    return est


def write_edge_list(path, g):
    """Write ``i j w`` lines (0-based, i < j) for each edge."""
    w = g.weights
    i, j = np.nonzero(np.triu(w, k=1))
    with open(path, "w") as fh:
        for a, c in zip(i, j):
            fh.write(f"{a} {c} {w[a, c]:g}\n")
