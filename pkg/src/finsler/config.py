"""Run configuration: a TOML file validated into :class:`RunConfig`.

Example::

    dim = 3
    rng_seed = 42
    trials = 100
    seed_basis = [[1, 0, 0], [1, 1, 0], [0, 1, 1]]

    [metric]
    kind = "ratio3"
    A = "1"

    [tolerances]
    ortho_tol = 1e-8
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import os
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .norms import euclidean, parse_metric, pseudo, ratio3, spacetime4

SEED_ENV = "FINSLER_SEED"

_METRIC_KEYS = {
    "expr": {"expr"},
    "euclidean": set(),
    "pseudo": {"p", "q"},
    "ratio3": {"A"},
    "spacetime4": {"c", "A"},
}
_TOP_KEYS = {"dim", "metric", "seed_basis", "seed_plus", "point", "direction", "rng_seed", "tolerances", "trials"}


@dataclass(frozen=True)
class Tolerances:
    class_tol: float = 1e-9
    ortho_tol: float = 1e-8
    singular_tol: float = 1e-10
    rank_tol: float = 1e-7


@dataclass(frozen=True)
class RunConfig:
    dim: int
    metric: dict
    rng_seed: int = 0
    trials: int = 100
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed_basis: Optional[list] = None
    seed_plus: Optional[list] = None
    point: Optional[list] = None
    direction: Optional[list] = None

    def as_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def _matrix(name, value, dim, rows=None):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a numeric matrix") from exc
    if M.ndim != 2 or M.shape[1] != dim or (rows is not None and M.shape[0] != rows):
        raise ConfigError(f"{name} has shape {M.shape}, expected ({rows or 'k'}, {dim})")
    if not np.all(np.isfinite(M)):
        raise ConfigError(f"{name} has non-finite entries")
    return M.tolist()


def _vector(name, value, dim):
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a numeric vector") from exc
    if v.shape != (dim,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} must be a finite vector of length {dim}")
    return v.tolist()


def validate(raw: dict, env=None) -> RunConfig:
    env = os.environ if env is None else env
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    dim = raw.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or not 1 <= dim <= 9:
        raise ConfigError("dim must be an integer in [1, 9]")

    metric = raw.get("metric")
    if not isinstance(metric, dict) or "kind" not in metric:
        raise ConfigError("a [metric] table with a 'kind' key is required")
    kind = metric["kind"]
    if kind not in _METRIC_KEYS:
        raise ConfigError(f"unknown metric kind {kind!r}; expected one of {sorted(_METRIC_KEYS)}")
    extra = set(metric) - {"kind"} - _METRIC_KEYS[kind]
    if extra:
        raise ConfigError(f"unexpected parameters for metric {kind!r}: {sorted(extra)}")

    seed = raw.get("rng_seed", 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV], 0)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    if not isinstance(seed, int) or isinstance(seed, bool) or not -(2**63) <= seed < 2**64:
        raise ConfigError("rng_seed must be a 64-bit integer")

    trials = raw.get("trials", 100)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 0:
        raise ConfigError("trials must be a non-negative integer")

    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError("[tolerances] must be a table")
    bad = set(tol_raw) - set(Tolerances.__dataclass_fields__)
    if bad:
        raise ConfigError(f"unknown tolerances: {sorted(bad)}")
    try:
        tol = Tolerances(**{k: float(v) for k, v in tol_raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError("tolerances must be numbers") from exc
    if any(not (t > 0) for t in asdict(tol).values()):
        raise ConfigError("tolerances must be positive")

    seed_basis = raw.get("seed_basis")
    if seed_basis is not None:
        seed_basis = _matrix("seed_basis", seed_basis, dim, rows=dim)
        if np.linalg.cond(np.array(seed_basis)) > 1e12:
            raise ConfigError("seed_basis is not invertible")
    seed_plus = raw.get("seed_plus")
    if seed_plus is not None:
        seed_plus = _matrix("seed_plus", seed_plus, dim) if len(seed_plus) else []
    point = raw.get("point")
    if point is not None:
        point = _vector("point", point, dim)
    direction = raw.get("direction")
    if direction is not None:
        direction = _vector("direction", direction, 3)

    return RunConfig(
        dim=dim,
        metric=dict(metric),
        rng_seed=seed,
        trials=trials,
        tolerances=tol,
        seed_basis=seed_basis,
        seed_plus=seed_plus,
        point=point,
        direction=direction,
    )


def load_config(path, env=None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return validate(raw, env)


def _param(metric, key, default):
    value = metric.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"metric parameter {key} must be a number or a 'p/q' string")
    return value


def build_norm(cfg: RunConfig):
    """The :class:`~finsler.norms.FinslerNorm` described by ``cfg.metric``."""
    m = cfg.metric
    kind = m["kind"]
    seed = cfg.rng_seed
    try:
        if kind == "expr":
            text = m.get("expr")
            if not isinstance(text, str):
                raise ConfigError("metric kind 'expr' needs an 'expr' string")
            return parse_metric(text, cfg.dim, seed)
        if kind == "euclidean":
            return euclidean(cfg.dim, seed)
        if kind == "pseudo":
            p, q = m.get("p"), m.get("q", None)
            if p is None and q is None:
                raise ConfigError("metric kind 'pseudo' needs p (and optionally q)")
            p = cfg.dim - q if p is None else p
            q = cfg.dim - p if q is None else q
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in (p, q)) or p + q != cfg.dim:
                raise ConfigError(f"pseudo needs integers p + q = dim = {cfg.dim}")
            return pseudo(p, q, seed)
        if kind == "ratio3":
            if cfg.dim != 3:
                raise ConfigError("ratio3 requires dim = 3")
            return ratio3(_param(m, "A", 1), seed)
        if cfg.dim != 4:
            raise ConfigError("spacetime4 requires dim = 4")
        return spacetime4(_param(m, "c", 1), _param(m, "A", 1), seed)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError) or hasattr(exc, "witness"):
            raise
        raise ConfigError(f"invalid metric parameters: {exc}") from exc
