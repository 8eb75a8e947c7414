"""Alternating GTSC training, tube-norm features and clustering evaluation."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .coder import CodingProblem, istt, objective, sparsity
from .config import RunConfig
from .dictionary import init_dictionary, learn_dictionary
from .exceptions import DimMismatch, NonFiniteObjective
from .graph import knn_graph, laplacian, spectral_norm
from .metrics import accuracy, kmeans, nmi
from .tensor import _irdft3, _rdft3, check_tensor3, ttranspose

__all__ = [
    "TrainedModel",
    "ClusterReport",
    "default_beta",
    "train_gtsc",
    "encode",
    "extract_features",
    "method_name",
    "GTSC",
    "evaluate",
    "METHODS",
]

METHODS = ("kmeans-raw", "sc", "tubsc", "gtsc")


@dataclass
class TrainedModel:
    dictionary: np.ndarray
    codes: np.ndarray
    config: dict
    trace: list
    lam: np.ndarray = None
    istt_iterations: list = field(default_factory=list)

    @property
    def method(self):
        return self.config.get("method", "gtsc")


def method_name(alpha, k):
    if k == 1:
        return "sc" if alpha == 0 else "graphsc"
    return "tubsc" if alpha == 0 else "gtsc"


def default_beta(x, d):
    """``0.15 * mean |D' * X|``, a scale-aware sparsity weight."""
    k = x.shape[2]
    proj = _irdft3(_rdft3(ttranspose(d)) @ _rdft3(x), k)
    return 0.15 * float(np.mean(np.abs(proj)))


def _graph(x, q, alpha):
    n = x.shape[1]
    if alpha == 0 or n < 2:
        return None, 0.0
    lap = laplacian(knn_graph(x, min(q, n - 1)))
    return lap, spectral_norm(lap)


def train_gtsc(x, r=45, alpha=1.0, beta=None, q=3, rounds=30, seed=0, max_iters=200, tol=1e-6,
               lam_init=1.0):
    """Alternate code and dictionary updates on data ``x`` (m x n x k).

    The kNN graph and its Laplacian are built once from the images. Each round
    runs ISTT warm-started from the previous codes, then the dual dictionary
    update; ``trace`` holds the full objective before the first round and
    after every round. With ``alpha=0`` this is plain tubal sparse coding; with
    ``k=1`` as well it is classical sparse coding.
    """
    x = check_tensor3(x, "x")
    m, n, k = x.shape
    if r < 1 or rounds < 1:
        raise ValueError("r and rounds must be >= 1")
    lap, lap_norm = _graph(x, q, alpha)
    d = init_dictionary(m, r, k, random_state=seed)
    if beta is None:
        beta = default_beta(x, d)
    b = np.zeros((r, n, k))
    lam = np.full(r, float(lam_init))
    problem = CodingProblem(x, d, lap, alpha, beta, lap_norm=lap_norm)
    trace = [objective(problem, b)]
    inner = []
    for rnd in range(rounds):
        b, st = istt(problem, init=b, max_iters=max_iters, tol=tol)
        inner.append(len(st) - 1)
        res = learn_dictionary(x, b, lam_init=np.maximum(lam, 1e-6), previous=d, return_result=True)
        d, lam = res.dictionary, res.lam
        problem = CodingProblem(x, d, lap, alpha, beta, lap_norm=lap_norm)
        val = objective(problem, b)
        if not np.isfinite(val):
            raise NonFiniteObjective(
                f"round {rnd}: objective {val}; |x|max={np.abs(x).max():.3e}, beta={beta:.3e}, "
                f"code sparsity={sparsity(b):.3f}"
            )
        trace.append(val)
    config = dict(r=r, alpha=float(alpha), beta=float(beta), q=q, rounds=rounds, seed=seed,
                  max_iters=max_iters, tol=tol, m=m, n=n, k=k, method=method_name(alpha, k))
    return TrainedModel(dictionary=d, codes=b, config=config, trace=trace, lam=lam,
                        istt_iterations=inner)


def encode(x, dictionary, alpha=1.0, beta=0.0, q=3, max_iters=200, tol=1e-6):
    """Codes for new data under a fixed dictionary (graph built over ``x``)."""
    x = check_tensor3(x, "x")
    d = check_tensor3(dictionary, "dictionary")
    lap, lap_norm = _graph(x, q, alpha)
    codes, _ = istt(CodingProblem(x, d, lap, alpha, beta, lap_norm=lap_norm),
                    max_iters=max_iters, tol=tol)
    return codes


def extract_features(model_or_codes):
    """``C[i, j] = ||codes[i, j, :]||_2``, an ``r x n`` nonnegative matrix."""
    codes = getattr(model_or_codes, "codes", model_or_codes)
    codes = check_tensor3(codes, "codes")
    # summing sorted squares keeps the result bit-identical under tube shifts
    return np.sqrt(np.sum(np.sort(codes * codes, axis=2), axis=2))


def _as_tensor(X):
    """``(n_samples, height, width)`` images to an ``(m, n, k)`` tensor."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise DimMismatch(f"expected (n_samples, height, width), got {X.shape}")
    return check_tensor3(X.transpose(1, 0, 2), "X")


class GTSC(TransformerMixin, BaseEstimator):
    """Graph-regularized tubal tensor sparse coding.

    ``fit`` learns a tensor dictionary from images given as an
    ``(n_samples, height, width)`` array; ``transform`` encodes images and
    returns tube-norm features of shape ``(n_samples, n_atoms)``.

    Parameters
    ----------
    n_atoms : int, default=45
    alpha : float, default=1.0
        Graph regularization weight; 0 gives plain tubal sparse coding.
    beta : float or None, default=None
        Sparsity weight. None picks ``0.15 * mean |D' * X|`` at fit time.
    n_neighbors : int, default=3
    n_rounds : int, default=30
    max_iter : int, default=200
        ISTT iterations per round.
    tol : float, default=1e-6
    vectorize : bool, default=False
        Flatten each image into one column (tube length 1), which reduces
        the model to classical sparse coding.
    random_state : int, default=0

    Attributes
    ----------
    dictionary_ : ndarray of shape (height, n_atoms, width)
    codes_ : ndarray of shape (n_atoms, n_samples, width)
    beta_ : float
    objective_trace_ : list of float
    model_ : TrainedModel
    """

    def __init__(self, n_atoms=45, alpha=1.0, beta=None, n_neighbors=3, n_rounds=30,
                 max_iter=200, tol=1e-6, vectorize=False, random_state=0):
        self.n_atoms = n_atoms
        self.alpha = alpha
        self.beta = beta
        self.n_neighbors = n_neighbors
        self.n_rounds = n_rounds
        self.max_iter = max_iter
        self.tol = tol
        self.vectorize = vectorize
        self.random_state = random_state

    def _tensor(self, X):
        x = _as_tensor(X)
        if self.vectorize:
            m, n, k = x.shape
            x = np.ascontiguousarray(x.transpose(0, 2, 1).reshape(m * k, n, 1))
        return x

    def fit(self, X, y=None):
        x = self._tensor(X)
        self.model_ = train_gtsc(x, r=self.n_atoms, alpha=self.alpha, beta=self.beta,
                                 q=self.n_neighbors, rounds=self.n_rounds,
                                 seed=self.random_state, max_iters=self.max_iter, tol=self.tol)
        self.dictionary_ = self.model_.dictionary
        self.codes_ = self.model_.codes
        self.beta_ = self.model_.config["beta"]
        self.objective_trace_ = list(self.model_.trace)
        self.n_samples_fit_ = x.shape[1]
        return self

    def encode(self, X):
        check_is_fitted(self, "dictionary_")
        x = self._tensor(X)
        if x.shape[0] != self.dictionary_.shape[0] or x.shape[2] != self.dictionary_.shape[2]:
            raise DimMismatch(f"images {x.shape} do not match dictionary {self.dictionary_.shape}")
        return encode(x, self.dictionary_, alpha=self.alpha, beta=self.beta_,
                      q=self.n_neighbors, max_iters=self.max_iter, tol=self.tol)

    def transform(self, X):
        return extract_features(self.encode(X)).T

    def fit_transform(self, X, y=None, **fit_params):
        return extract_features(self.fit(X).codes_).T


@dataclass
class ClusterReport:
    method: str
    labels: np.ndarray
    acc: float
    nmi: float
    seeds: list
    per_seed_acc: list
    per_seed_nmi: list

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "seed", "acc", "nmi"])
        for s, a, v in zip(self.seeds, self.per_seed_acc, self.per_seed_nmi):
            w.writerow([self.method, s, repr(float(a)), repr(float(v))])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def summary(self):
        acc = np.asarray(self.per_seed_acc)
        nm = np.asarray(self.per_seed_nmi)
        return (
            f"{'method':<12}{'runs':>6}{'ACC mean':>10}{'ACC std':>9}{'NMI mean':>10}{'NMI std':>9}\n"
            f"{self.method:<12}{len(self.seeds):>6}{100 * acc.mean():>10.2f}{100 * acc.std():>9.2f}"
            f"{100 * nm.mean():>10.2f}{100 * nm.std():>9.2f}"
        )


def _features_for(x, method, cfg):
    if method == "kmeans-raw":
        return x.transpose(1, 0, 2).reshape(x.shape[1], -1), None
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    est = GTSC(n_atoms=cfg.r, alpha=0.0 if method in ("sc", "tubsc") else cfg.alpha,
               beta=cfg.beta, n_neighbors=cfg.q, n_rounds=cfg.rounds, max_iter=cfg.max_iters,
               tol=cfg.tol, vectorize=method == "sc", random_state=cfg.seed)
    feats = est.fit_transform(x.transpose(1, 0, 2))
    return feats, est


def _score(feats, truth, n_clusters, seed, restarts):
    pred = kmeans(feats, n_clusters, seed=seed, restarts=restarts)
    return pred, accuracy(pred, truth), nmi(pred, truth)


def evaluate(x, truth, method="gtsc", config=None, n_runs=None, n_jobs=1, return_model=False):
    """Learn features with ``method`` once, then K-means over ``n_runs`` seeds.

    Seeds are ``config.seed, config.seed + 1, ...``. Runs may execute in
    parallel (``n_jobs``); results are gathered in seed order.
    """
    cfg = config or RunConfig()
    n_runs = cfg.n_runs if n_runs is None else n_runs
    x = check_tensor3(x, "x")
    truth = np.asarray(truth, dtype=np.int64)
    if truth.shape != (x.shape[1],):
        raise DimMismatch(f"{truth.shape[0]} labels for {x.shape[1]} images")
    n_clusters = np.unique(truth).size
    feats, est = _features_for(x, method, cfg)
    seeds = [cfg.seed + i for i in range(n_runs)]
    runs = Parallel(n_jobs=n_jobs)(
        delayed(_score)(feats, truth, n_clusters, s, cfg.restarts) for s in seeds
    )
    report = ClusterReport(
        method=method,
        labels=runs[0][0],
        acc=float(np.mean([r[1] for r in runs])),
        nmi=float(np.mean([r[2] for r in runs])),
        seeds=seeds,
        per_seed_acc=[r[1] for r in runs],
        per_seed_nmi=[r[2] for r in runs],
    )
    if return_model:
        return report, (est.model_ if est is not None else None)
    return report
