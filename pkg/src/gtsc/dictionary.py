"""Norm-constrained tensor dictionary update through its Lagrange dual.

With codes fixed, the dictionary subproblem separates over Fourier slices
except for the atom norm constraints ``sum_l ||Dh_l[:, j]||^2 <= k``. One dual
variable per atom couples all slices; Newton ascent on the concave dual gives
the multipliers, and each spectral slice of the dictionary follows in closed
form as ``Dh_l = (Xh_l Bh_l^H)(Bh_l Bh_l^H + diag(lam))^{-1}``.

Spectral arguments are ``(k, m, n)`` complex stacks as returned by
:func:`gtsc.tensor.dft3`. Passing ``weights`` lets callers hand over only the
non-redundant half of a conjugate-symmetric spectrum, with each slice weighted
by its multiplicity.
"""

import warnings

import numpy as np

from ._config import get_config
from .exceptions import DegenerateCodesWarning, DimMismatch, SingularSystem
from .tensor import _half_weights, _irdft3, _rdft3, check_tensor3

__all__ = [
    "init_dictionary",
    "atom_norms",
    "dict_from_dual",
    "dual_value_and_derivatives",
    "newton_dual",
    "learn_dictionary",
    "DictionaryResult",
]


def init_dictionary(m, r, k, random_state=None):
    """Gaussian dictionary with every lateral slice scaled to unit norm."""
    rng = np.random.default_rng(random_state)
    d = rng.standard_normal((m, r, k))
    return d / np.sqrt(np.sum(d * d, axis=(0, 2), keepdims=True))


def atom_norms(d):
    """Squared Frobenius norm of each lateral slice (atom)."""
    d = check_tensor3(d, "d")
    return np.sum(d * d, axis=(0, 2))


def _normalize_lam(lam, r):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim == 0:
        lam = np.full(r, float(lam))
    if lam.shape != (r,):
        raise DimMismatch(f"need {r} dual variables, got shape {lam.shape}")
    if np.any(lam < 0):
        raise ValueError("dual variables must be nonnegative")
    return lam


def _slice_terms(xhat, bhat, lam):
    """Per slice: M = Xh Bh^H, A = Bh Bh^H + diag(lam), A^{-1}, Dh = M A^{-1}."""
    xhat = np.asarray(xhat, dtype=np.complex128)
    bhat = np.asarray(bhat, dtype=np.complex128)
    if xhat.ndim != 3 or bhat.ndim != 3 or xhat.shape[0] != bhat.shape[0] or xhat.shape[2] != bhat.shape[2]:
        raise DimMismatch(f"spectra {xhat.shape} and {bhat.shape} disagree")
    lam = _normalize_lam(lam, bhat.shape[1])
    bh_h = np.conj(bhat.transpose(0, 2, 1))
    M = xhat @ bh_h
    A = bhat @ bh_h + np.diag(lam)
    cond = np.linalg.cond(A)
    limit = get_config().singular_cond
    if not np.all(np.isfinite(cond)) or np.any(cond > limit):
        raise SingularSystem(f"per-slice system condition {np.max(cond):.3e} exceeds {limit:.0e}")
    Ainv = np.linalg.inv(A)
    Ainv = 0.5 * (Ainv + np.conj(Ainv.transpose(0, 2, 1)))
    return M, Ainv, M @ Ainv


def dict_from_dual(xhat, bhat, lam):
    """Closed-form spectral dictionary for fixed dual variables ``lam``."""
    return _slice_terms(xhat, bhat, lam)[2]


def dual_value_and_derivatives(xhat, bhat, lam, weights=None):
    """Dual function value, gradient and Hessian at ``lam``.

    value = -sum_l w_l Tr(Dh_l^H Xh_l Bh_l^H) - k sum_j lam_j
    grad_j = sum_l w_l ||Dh_l[:, j]||^2 - k
    hess_ij = -2 sum_l w_l Re[(A_l^{-1})_ji (Dh_l^H Dh_l)_ij]

    where ``k = sum(weights)`` (the number of slices when ``weights`` is None).
    The constant ``sum_l ||Xh_l||^2`` is omitted from the value.
    """
    M, Ainv, D = _slice_terms(xhat, bhat, lam)
    w = np.ones(D.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    k = float(w.sum())
    lam = _normalize_lam(lam, D.shape[2])
    tr = np.real(np.einsum("lij,lij->l", np.conj(D), M))
    value = -float(np.dot(w, tr)) - k * float(lam.sum())
    col = np.sum(np.abs(D) ** 2, axis=1)
    grad = w @ col - k
    P = np.conj(D.transpose(0, 2, 1)) @ D
    hess = -2.0 * np.einsum("l,lij->ij", w, np.real(Ainv.transpose(0, 2, 1) * P))
    return value, grad, 0.5 * (hess + hess.T)


def _projected_grad(lam, grad, lower):
    pg = grad.copy()
    at_bound = lam <= lower
    pg[at_bound] = np.maximum(grad[at_bound], 0.0)
    return pg


def newton_dual(xhat, bhat, lam0, max_iters=50, tol=1e-7, weights=None, return_info=False):
    """Maximize the dual by projected Newton ascent with backtracking.

    Variables sitting at the lower bound with a negative gradient are held
    fixed; Newton steps are taken on the rest, step lengths are halved (at
    most 30 times) until the dual value does not decrease, and the iterate
    is projected onto ``lam >= 0``. If a system turns singular the solve
    restarts with all multipliers floored at ``lambda_floor``.

    Returns the multipliers, and with ``return_info`` also a dict holding the
    dual value history, the iteration count and the lower bound in force.
    """
    lam0 = _normalize_lam(lam0, np.asarray(bhat).shape[1])
    floor = get_config().lambda_floor
    try:
        return _newton(xhat, bhat, lam0, 0.0, max_iters, tol, weights, return_info)
    except SingularSystem:
        return _newton(xhat, bhat, np.maximum(lam0, floor), floor, max_iters, tol, weights,
                       return_info)


def _newton(xhat, bhat, lam, lower, max_iters, tol, weights, return_info):
    value, grad, hess = dual_value_and_derivatives(xhat, bhat, lam, weights)
    history = [value]
    steps = 0
    while steps < max_iters:
        pg = _projected_grad(lam, grad, lower)
        if np.max(np.abs(pg), initial=0.0) < tol:
            break
        free = (lam > lower) | (grad > 0)
        step = np.zeros_like(lam)
        Hf = -hess[np.ix_(free, free)]
        shift = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(Hf)), initial=0.0)))
        try:
            step[free] = np.linalg.solve(Hf + shift * np.eye(Hf.shape[0]), grad[free])
        except np.linalg.LinAlgError:
            step[free] = grad[free]
        t = 1.0
        for _ in range(31):
            cand = np.maximum(lam + t * step, lower)
            cv, cg, ch = dual_value_and_derivatives(xhat, bhat, cand, weights)
            if cv >= value:
                break
            t *= 0.5
        else:
            break
        steps += 1
        if np.array_equal(cand, lam):
            break
        lam, value, grad, hess = cand, cv, cg, ch
        history.append(value)
    if return_info:
        return lam, {"values": history, "iterations": steps, "lower": lower}
    return lam


class DictionaryResult:
    """Outcome of :func:`learn_dictionary`."""

    __slots__ = ("dictionary", "lam", "newton_iterations", "degenerate")

    def __init__(self, dictionary, lam, newton_iterations, degenerate):
        self.dictionary = dictionary
        self.lam = lam
        self.newton_iterations = newton_iterations
        self.degenerate = degenerate


def _reconstruction_error(x, d, b):
    k = x.shape[2]
    resid = x - _irdft3(_rdft3(d) @ _rdft3(b), k)
    return 0.5 * float(np.sum(resid * resid))


def learn_dictionary(x, b, lam_init=1.0, previous=None, max_iters=50, tol=1e-7,
                     return_result=False):
    """Update the dictionary for data ``x`` (m x n x k) and codes ``b`` (r x n x k).

    Atoms whose code rows are entirely zero do not affect the reconstruction;
    they keep their ``previous`` value (or become zero). If the new dictionary
    would reconstruct worse than ``previous``, ``previous`` is returned.
    Every returned atom satisfies ``||d[:, j, :]||_F^2 <= 1``.
    """
    x = check_tensor3(x, "x")
    b = check_tensor3(b, "b")
    if x.shape[1] != b.shape[1] or x.shape[2] != b.shape[2]:
        raise DimMismatch(f"data {x.shape} and codes {b.shape} disagree")
    m, n, k = x.shape
    r = b.shape[0]
    lam = _normalize_lam(lam_init, r).copy()
    if previous is not None:
        previous = check_tensor3(previous, "previous")
        if previous.shape != (m, r, k):
            raise DimMismatch(f"previous dictionary {previous.shape} != {(m, r, k)}")
    d = np.zeros((m, r, k)) if previous is None else previous.copy()

    active = np.any(np.abs(b) > get_config().zero_code, axis=(1, 2))
    if not np.any(active):
        warnings.warn("all codes are zero; dictionary left unchanged", DegenerateCodesWarning)
        res = DictionaryResult(d, lam, 0, True)
        return res if return_result else d

    floor = get_config().lambda_floor
    xhat = _rdft3(x)
    bhat = _rdft3(b[active])
    w = _half_weights(k)
    lam_a, info = newton_dual(xhat, bhat, np.maximum(lam[active], floor), max_iters, tol,
                              weights=w, return_info=True)
    dh = dict_from_dual(xhat, bhat, lam_a)
    d_act = _irdft3(dh, k)
    # guard against Newton tolerance leaving an atom marginally too long
    norms = np.sqrt(np.sum(d_act * d_act, axis=(0, 2)))
    d_act /= np.maximum(norms, 1.0)[None, :, None]
    d[:, active, :] = d_act
    lam[active] = lam_a
    lam[~active] = 0.0

    if previous is not None and _reconstruction_error(x, d, b) > _reconstruction_error(x, previous, b):
        d = previous.copy()
    res = DictionaryResult(d, lam, info["iterations"], False)
    return res if return_result else d
