"""Global numeric tolerances, in the style of ``sklearn.get_config``."""

from contextlib import contextmanager
from dataclasses import dataclass, fields, replace

__all__ = ["NumericConfig", "get_config", "set_config", "config_context"]


@dataclass(frozen=True)
class NumericConfig:
    # spectral domain
    hermitian_tol: float = 1e-8
    imag_tol: float = 1e-10
    # test-only circulant oracle
    oracle_budget: int = 10**8
    # graph Laplacian spectral norm
    power_tol: float = 1e-8
    power_max_iter: int = 1000
    # dictionary update
    singular_cond: float = 1e12
    lambda_floor: float = 1e-6
    constraint_tol: float = 1e-8
    # codes
    zero_code: float = 1e-12


_global = NumericConfig()


def get_config():
    """Return the active :class:`NumericConfig`."""
    return _global


def set_config(**overrides):
    """Override tolerances globally. Unknown keys raise ``TypeError``."""
    global _global
    known = {f.name for f in fields(NumericConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise TypeError(f"unknown config keys: {sorted(unknown)}")
    _global = replace(_global, **overrides)
    return _global


@contextmanager
def config_context(**overrides):
    """Temporarily override tolerances inside a ``with`` block."""
    global _global
    saved = _global
    set_config(**overrides)
    try:
        yield _global
    finally:
        _global = saved
