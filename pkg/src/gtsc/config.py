"""Run configuration and the flat ``key = value`` config file format."""

from dataclasses import asdict, dataclass

__all__ = ["RunConfig", "read_config_file", "write_config_file"]


@dataclass
class RunConfig:
    r: int = 45
    alpha: float = 1.0
    beta: float = None  # None selects the data-driven default
    q: int = 3
    rounds: int = 30
    max_iters: int = 200
    tol: float = 1e-6
    seed: int = 0
    n_runs: int = 10
    restarts: int = 10
    oracle_budget: int = 10**8

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.rounds < 1 or self.max_iters < 1 or self.n_runs < 1 or self.restarts < 1:
            raise ValueError("rounds, max_iters, n_runs and restarts must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")

    def to_dict(self):
        return asdict(self)

    def updated(self, **changes):
        """Copy with non-None ``changes`` applied."""
        vals = self.to_dict()
        vals.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**vals)


_CASTS = {"r": int, "q": int, "rounds": int, "max_iters": int, "seed": int, "n_runs": int,
          "restarts": int, "oracle_budget": int, "alpha": float, "beta": float, "tol": float}


def read_config_file(path):
    """Parse ``key = value`` lines (``#`` comments allowed) into a dict."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CASTS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = None if val.lower() in ("none", "auto", "") else _CASTS[key](val)
    return out


def write_config_file(path, cfg):
    with open(path, "w") as fh:
        for key, val in cfg.to_dict().items():
            fh.write(f"{key} = {'auto' if val is None else val}\n")
