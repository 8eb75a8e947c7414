"""Third-order tensors and the t-product.

Tensors are plain float64 ndarrays of shape ``(m, n, k)``: ``x[:, :, l]`` is
frontal slice ``l``, ``x[:, j, :]`` is lateral slice ``j`` (one ``m x k``
image) and ``x[i, j, :]`` is a tube.

Spectra (:func:`dft3`) are complex arrays of shape ``(k, m, n)`` so that each
spectral slice is contiguous; every hot loop works slice by slice there.
"""

import struct

import numpy as np

from ._config import get_config
from .exceptions import (
    BadMagic,
    DimCorruption,
    DimMismatch,
    NonFiniteData,
    NonHermitianSpectrum,
    SizeGuard,
)

__all__ = [
    "check_tensor3",
    "dft3",
    "idft3",
    "tprod",
    "ttranspose",
    "circulant_expand",
    "unfold",
    "fold",
    "tube_shift",
    "identity_tensor",
    "fro",
    "l1",
    "save_tt3d",
    "load_tt3d",
]

TT3D_MAGIC = b"TT3D0001"
_HEADER = struct.Struct("<8sQQQ")


def check_tensor3(x, name="x", allow_complex=False):
    """Validate and convert ``x`` to a finite 3-D float64 array."""
    arr = np.asarray(x)
    if arr.ndim != 3:
        raise DimMismatch(f"{name} must be 3-D, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimMismatch(f"{name} has an empty dimension: {arr.shape}")
    if np.iscomplexobj(arr) and not allow_complex:
        raise DimMismatch(f"{name} must be real")
    arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteData(f"{name} contains NaN or Inf")
    return arr


def dft3(x):
    """Unnormalized DFT along the third dimension.

    Returns a complex ``(k, m, n)`` array whose entry ``[l, i, j]`` is
    ``sum_t x[i, j, t] * exp(-2j*pi*l*t/k)``.
    """
    x = check_tensor3(x)
    return np.ascontiguousarray(np.moveaxis(np.fft.fft(x, axis=2), 2, 0))


def idft3(s):
    """Inverse of :func:`dft3`; returns the real ``(m, n, k)`` tensor.

    Raises NonHermitianSpectrum when ``s`` is not conjugate symmetric, i.e.
    when no real tensor has this spectrum.
    """
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 3:
        raise DimMismatch(f"spectrum must be 3-D (k, m, n), got {s.shape}")
    cfg = get_config()
    k = s.shape[0]
    scale = max(1.0, float(np.max(np.abs(s), initial=0.0)))
    mirror = np.conj(s[(-np.arange(k)) % k])
    asym = float(np.max(np.abs(s - mirror), initial=0.0))
    if asym > cfg.hermitian_tol * scale:
        raise NonHermitianSpectrum(
            f"conjugate symmetry violated by {asym:.3e} (relative to {scale:.3e})"
        )
    x = np.fft.ifft(s, axis=0)
    if float(np.max(np.abs(x.imag), initial=0.0)) > cfg.imag_tol * scale:
        raise NonHermitianSpectrum("inverse DFT left a non-negligible imaginary part")
    return np.ascontiguousarray(np.moveaxis(x.real, 0, 2))


def _rdft3(x):
    # half spectrum, (k//2 + 1, m, n); the rest follows by conjugation
    return np.moveaxis(np.fft.rfft(x, axis=2), 2, 0)


def _irdft3(s, k):
    return np.ascontiguousarray(np.moveaxis(np.fft.irfft(s, n=k, axis=0), 0, 2))


def _half_weights(k):
    """Multiplicity of each half-spectrum slice in the full spectrum."""
    w = np.full(k // 2 + 1, 2.0)
    w[0] = 1.0
    if k % 2 == 0:
        w[-1] = 1.0
    return w


def tprod(a, b):
    """t-product of ``a`` (m x r x k) and ``b`` (r x n x k).

    Computed as k independent complex matrix products in the Fourier domain.
    Only the first ``k//2 + 1`` slices are formed; the rest are conjugates.
    """
    a = check_tensor3(a, "a")
    b = check_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimMismatch(f"cannot t-multiply {a.shape} by {b.shape}")
    k = a.shape[2]
    return _irdft3(_rdft3(a) @ _rdft3(b), k)


def ttranspose(x):
    """Tensor transpose: slice 1 transposed, slices 2..k transposed and reversed."""
    x = check_tensor3(x)
    k = x.shape[2]
    return np.ascontiguousarray(x.transpose(1, 0, 2)[:, :, (-np.arange(k)) % k])


def unfold(x):
    """Stack frontal slices vertically into an ``(m*k, n)`` matrix."""
    x = check_tensor3(x)
    m, n, k = x.shape
    return x.transpose(2, 0, 1).reshape(k * m, n)


def fold(mat, k):
    """Inverse of :func:`unfold`."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] % k:
        raise DimMismatch(f"cannot fold {mat.shape} into {k} slices")
    m = mat.shape[0] // k
    return np.ascontiguousarray(mat.reshape(k, m, mat.shape[1]).transpose(1, 2, 0))


def circulant_expand(x, budget=None):
    """Block-circulant ``(m*k, r*k)`` matrix of ``x``; block (p, q) is slice (p - q) mod k.

    Test oracle only. Raises SizeGuard above ``budget`` entries.
    """
    x = check_tensor3(x)
    m, r, k = x.shape
    if budget is None:
        budget = get_config().oracle_budget
    if m * k * r * k > budget:
        raise SizeGuard(f"circulant expansion needs {m * k * r * k} entries > {budget}")
    out = np.empty((m * k, r * k))
    for p in range(k):
        for q in range(k):
            out[p * m:(p + 1) * m, q * r:(q + 1) * r] = x[:, :, (p - q) % k]
    return out


def tube_shift(x, s):
    """Circularly shift every tube of ``x`` by ``s`` positions."""
    return np.roll(check_tensor3(x), s, axis=2)


def identity_tensor(r, k):
    """The t-product identity: first frontal slice ``I_r``, the rest zero."""
    e = np.zeros((r, r, k))
    e[:, :, 0] = np.eye(r)
    return e


def fro(x):
    """Frobenius norm (square root of the sum of squared entries)."""
    return float(np.linalg.norm(np.ravel(x)))


def l1(x):
    return float(np.abs(x).sum())


def save_tt3d(path, x):
    """Write ``x`` in TT3D format: magic, three uint64 dims, float64 payload.

    The payload is frontal-slice-major and row-major within each slice, all
    little-endian.
    """
    x = check_tensor3(x)
    m, n, k = x.shape
    payload = np.ascontiguousarray(x.transpose(2, 0, 1), dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TT3D_MAGIC, m, n, k))
        fh.write(payload)


def load_tt3d(path):
    """Read a TT3D file written by :func:`save_tt3d`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(TT3D_MAGIC) or raw[: len(TT3D_MAGIC)] != TT3D_MAGIC:
        raise BadMagic(f"{path}: not a TT3D file")
    if len(raw) < _HEADER.size:
        raise DimCorruption(f"{path}: truncated header")
    _, m, n, k = _HEADER.unpack_from(raw)
    if min(m, n, k) < 1:
        raise DimCorruption(f"{path}: zero dimension in ({m}, {n}, {k})")
    expected = _HEADER.size + 8 * m * n * k
    if len(raw) != expected:
        raise DimCorruption(f"{path}: {len(raw)} bytes, dims ({m}, {n}, {k}) need {expected}")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return np.ascontiguousarray(flat.reshape(k, m, n).transpose(1, 2, 0), dtype=np.float64)
