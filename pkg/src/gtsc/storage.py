"""Model directories: TT3D tensors plus a JSON metadata sidecar.

Layout of a model directory::

    dictionary.tt3d   m x r x k
    codes.tt3d        r x n x k
    model.json        config, method, dual variables, objective trace
    trace.csv         round,objective
"""

import json
import os
import tempfile

import numpy as np

from ._config import get_config
from .exceptions import ConstraintViolation, MissingData
from .pipeline import TrainedModel
from .tensor import load_tt3d, save_tt3d

__all__ = ["save_model", "load_model", "atomic_write_text", "write_round_trace"]

FORMAT_VERSION = 1


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_tt3d(path, x):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    os.close(fd)
    try:
        save_tt3d(tmp, x)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_round_trace(path, trace):
    lines = ["round,objective"] + [f"{i},{v!r}" for i, v in enumerate(trace)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_model(path, model, extra=None):
    os.makedirs(path, exist_ok=True)
    _atomic_tt3d(os.path.join(path, "dictionary.tt3d"), model.dictionary)
    _atomic_tt3d(os.path.join(path, "codes.tt3d"), model.codes)
    meta = {
        "format": FORMAT_VERSION,
        "config": model.config,
        "lambda": None if model.lam is None else [float(v) for v in model.lam],
        "trace": [float(v) for v in model.trace],
        "istt_iterations": [int(v) for v in model.istt_iterations],
        "pixel_scaling": "[0,1]",
    }
    if extra:
        meta.update(extra)
    atomic_write_text(os.path.join(path, "model.json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    write_round_trace(os.path.join(path, "trace.csv"), model.trace)


def load_model(path):
    """Read a model directory; verifies TT3D headers and atom norms."""
    meta_path = os.path.join(path, "model.json")
    if not os.path.exists(meta_path):
        raise MissingData(f"{path}: no model.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    d = load_tt3d(os.path.join(path, "dictionary.tt3d"))
    b = load_tt3d(os.path.join(path, "codes.tt3d"))
    norms = np.sum(d * d, axis=(0, 2))
    limit = 1.0 + get_config().constraint_tol
    if np.any(norms > limit):
        j = int(np.argmax(norms))
        raise ConstraintViolation(f"atom {j} has squared norm {norms[j]:.12g} > 1")
    lam = None if meta.get("lambda") is None else np.array(meta["lambda"])
    return TrainedModel(dictionary=d, codes=b, config=meta["config"], trace=meta["trace"], lam=lam,
                        istt_iterations=meta.get("istt_iterations", []))
