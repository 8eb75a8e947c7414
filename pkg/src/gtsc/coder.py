"""Graph-regularized tensor sparse coding with a fixed dictionary.

The code subproblem

    min_B  1/2 ||X - D * B||_F^2 + alpha Tr(B_ L B_^T) + beta ||B||_1

is solved by ISTT: proximal gradient steps in tensor space with FISTA
extrapolation. Gradients are formed slice by slice in the Fourier domain.
"""

import csv
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._config import get_config
from .exceptions import DimMismatch, NonFiniteObjective
from .graph import GraphLaplacian, laplacian_quadratic, spectral_norm
from .tensor import _half_weights, _irdft3, _rdft3, check_tensor3, l1

__all__ = [
    "CodingProblem",
    "SolverTrace",
    "objective",
    "grad_smooth",
    "lipschitz",
    "soft_threshold",
    "istt",
    "sparsity",
]


def _as_laplacian(lap, n):
    if lap is None:
        return GraphLaplacian(L=np.zeros((n, n)), degree=np.zeros(n))
    if not isinstance(lap, GraphLaplacian):
        L = np.asarray(lap, dtype=np.float64)
        lap = GraphLaplacian(L=L, degree=np.diag(L).copy())
    if lap.L.shape != (n, n):
        raise DimMismatch(f"Laplacian {lap.L.shape} does not match n={n}")
    return lap


@dataclass(frozen=True)
class CodingProblem:
    """Data ``x`` (m x n x k), dictionary ``d`` (m x r x k) and regularizers.

    ``lap`` may be None (no graph term) or a :class:`GraphLaplacian`.
    ``lap_norm`` caches ``||L||_2``; it is computed on demand when omitted.
    """

    x: np.ndarray
    d: np.ndarray
    lap: GraphLaplacian = None
    alpha: float = 0.0
    beta: float = 0.0
    lap_norm: float = None

    def __post_init__(self):
        x = check_tensor3(self.x, "x")
        d = check_tensor3(self.d, "d")
        if x.shape[0] != d.shape[0] or x.shape[2] != d.shape[2]:
            raise DimMismatch(f"data {x.shape} and dictionary {d.shape} disagree")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "lap", _as_laplacian(self.lap, x.shape[1]))
        if self.lap_norm is None:
            object.__setattr__(self, "lap_norm", spectral_norm(self.lap))

    @property
    def code_shape(self):
        return (self.d.shape[1], self.x.shape[1], self.x.shape[2])

    @cached_property
    def _dhat(self):
        return _rdft3(self.d)

    @cached_property
    def _gram(self):
        dh = self._dhat
        return np.conj(dh.transpose(0, 2, 1)) @ dh

    @cached_property
    def _dx(self):
        dh = self._dhat
        return np.conj(dh.transpose(0, 2, 1)) @ _rdft3(self.x)

    def check_codes(self, b):
        b = check_tensor3(b, "b")
        if b.shape != self.code_shape:
            raise DimMismatch(f"codes {b.shape} do not match expected {self.code_shape}")
        return b

    def reconstruct(self, b):
        return _irdft3(self._dhat @ _rdft3(b), self.x.shape[2])


@dataclass
class SolverTrace:
    iteration: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    sparsity: list = field(default_factory=list)
    lipschitz: list = field(default_factory=list)
    ms: list = field(default_factory=list)

    def record(self, it, obj, sp, lip, ms):
        self.iteration.append(it)
        self.objective.append(obj)
        self.sparsity.append(sp)
        self.lipschitz.append(lip)
        self.ms.append(ms)

    def __len__(self):
        return len(self.iteration)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "objective", "sparsity", "lipschitz", "ms"])
            for row in zip(self.iteration, self.objective, self.sparsity, self.lipschitz, self.ms):
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), f"{row[4]:.3f}"])


def sparsity(b):
    """Fraction of entries below the zero-code threshold in magnitude."""
    return float(np.mean(np.abs(b) < get_config().zero_code))


def objective(p, b):
    """Full objective: reconstruction + alpha * graph term + beta * l1."""
    b = p.check_codes(b)
    resid = p.x - p.reconstruct(b)
    val = 0.5 * float(np.sum(resid * resid)) + p.beta * l1(b)
    if p.alpha:
        val += p.alpha * laplacian_quadratic(b, p.lap)
    return val


def _smooth_value(p, b):
    resid = p.x - p.reconstruct(b)
    val = 0.5 * float(np.sum(resid * resid))
    if p.alpha:
        val += p.alpha * laplacian_quadratic(b, p.lap)
    return val


def grad_smooth(p, b):
    """Gradient of the smooth part, ``D'*D*B - D'*X + 2 alpha B*L``.

    Per spectral slice: ``Dh^H (Dh Bh - Xh) + 2 alpha Bh L``.
    """
    b = p.check_codes(b)
    bh = _rdft3(b)
    g = p._gram @ bh - p._dx
    if p.alpha:
        g = g + (2.0 * p.alpha) * (bh @ p.lap.L)
    return _irdft3(g, b.shape[2])


def lipschitz(d, lap=None, alpha=0.0, lap_norm=None):
    """Step-size constant ``sum_l ||Dh_l^H Dh_l||_F + 2 alpha ||L||_2``.

    The Frobenius norms are unsquared; this sum bounds the spectral norm of
    the data Hessian.
    """
    d = check_tensor3(d, "d")
    dh = _rdft3(d)
    gram = np.conj(dh.transpose(0, 2, 1)) @ dh
    norms = np.sqrt(np.sum(np.abs(gram) ** 2, axis=(1, 2)))
    lip = float(np.dot(_half_weights(d.shape[2]), norms))
    if alpha:
        if lap_norm is None:
            lap_norm = spectral_norm(lap)
        lip += 2.0 * alpha * lap_norm
    return lip


def soft_threshold(v, tau):
    """Elementwise ``sign(v) * max(|v| - tau, 0)``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def istt(p, init=None, max_iters=200, tol=1e-6, lip=None, backtracking=False, eta=1.1,
         callback=None):
    """Solve the code subproblem of ``p`` by ISTT.

    Parameters
    ----------
    p : CodingProblem
    init : ndarray of shape (r, n, k), optional
        Warm start; zeros when omitted.
    max_iters : int
    tol : float
        Stop once the relative objective decrease falls below ``tol``.
    lip : float, optional
        Override the step constant (default :func:`lipschitz`).
    backtracking : bool
        Multiply the step constant by ``eta`` until the quadratic upper bound
        holds, for use when ``lip`` is not a valid bound.
    callback : callable, optional
        Called as ``callback(iteration, codes)`` after every iteration.

    Returns
    -------
    codes : ndarray of shape (r, n, k)
    trace : SolverTrace
        Row 0 describes ``init``.

    Notes
    -----
    A step that would increase the objective is rejected and the momentum
    restarts from the best iterate, so the returned objective never exceeds
    the objective at ``init``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    b_acc = np.zeros(p.code_shape) if init is None else p.check_codes(init).copy()
    if lip is None:
        lip = lipschitz(p.d, p.lap, p.alpha, lap_norm=p.lap_norm)
    lip = float(lip)
    trace = SolverTrace()
    start = time.perf_counter()

    def full(b, smooth=None):
        s = _smooth_value(p, b) if smooth is None else smooth
        val = s + p.beta * l1(b)
        if not math.isfinite(val):
            raise NonFiniteObjective(f"objective became {val}; check data scaling and beta")
        return val

    f_acc = full(b_acc)
    trace.record(0, f_acc, sparsity(b_acc), lip, 0.0)
    if lip == 0.0:
        # zero dictionary and no graph term: the prox step alone is optimal
        b = soft_threshold(b_acc, np.inf) if p.beta > 0 else b_acc
        return b, trace

    c = b_acc
    t = 1.0
    for it in range(1, max_iters + 1):
        g = grad_smooth(p, c)
        while True:
            z = soft_threshold(c - g / lip, p.beta / lip)
            fz_smooth = _smooth_value(p, z)
            if not backtracking:
                break
            step = z - c
            bound = _smooth_value(p, c) + float(np.sum(g * step)) + 0.5 * lip * float(np.sum(step * step))
            if fz_smooth <= bound * (1 + 1e-12) + 1e-300:
                break
            lip *= eta
        fz = full(z, fz_smooth)
        if fz <= f_acc:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            c = z + ((t - 1.0) / t_next) * (z - b_acc)
            rel = (f_acc - fz) / max(abs(f_acc), 1e-300)
            b_acc, f_acc, t = z, fz, t_next
            restarted = False
        else:
            restarted = c is b_acc
            c, t, rel = b_acc, 1.0, math.inf
        trace.record(it, f_acc, sparsity(b_acc), lip, 1000.0 * (time.perf_counter() - start))
        if callback is not None:
            callback(it, b_acc)
        if rel < tol or restarted:
            break
    return b_acc, trace
