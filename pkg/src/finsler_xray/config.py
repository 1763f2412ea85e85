"""Run configuration for the command-line interface.

A config is a JSON object::

    {
      "norm": {"family": "RadialRiemannian", "R": 0.3, "c": 1.0},
      "grids": {"n_r": 256, "n_theta": 64, "k_max": 16},
      "tolerances": {"ode": 1e-10, "quadrature": 1e-9, "lambda": null},
      "seed": 0,
      "output": "out",
      "field": {"terms": [{"k": 0, "profile": {"poly": [...]}, "phase": "cos"}]},
      "trace": {"r0": [0.5]},
      "sinogram": "sinogram.csv",
      "elastic": {...},
      "linearize": {...}
    }

``"norm"`` may also be a path to a JSON file holding the norm object.
Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .norms import FinslerNorm, norm_from_json

__all__ = ["RunConfig", "load_config"]


@dataclass
class RunConfig:
    raw: dict
    base: Path
    norm_data: dict | None
    n_r: int | None
    n_theta: int | None
    k_max: int | None
    ode_tol: float = 1e-10
    quad_tol: float = 1e-9
    lam: float | None = None
    seed: int = 0
    output: Path = field(default_factory=lambda: Path("out"))

    def norm(self) -> FinslerNorm:
        if self.norm_data is None:
            raise ConfigError("config has no 'norm'")
        return norm_from_json(self.norm_data)

    def section(self, name: str) -> dict:
        sec = self.raw.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"config needs a '{name}' object")
        return sec

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    def require_grids(self) -> tuple:
        if self.n_r is None or self.k_max is None:
            raise ConfigError("config needs grids.n_r and grids.k_max")
        n_theta = self.n_theta if self.n_theta is not None else 2 * self.k_max + 2
        return self.n_r, self.k_max, n_theta


def _positive(name: str, value, allow_none: bool = False):
    if value is None and allow_none:
        return None
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {v}")
    return v


def _int(name: str, value, minimum: int):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}")
    return value


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw.update(overrides or {})
    base = path.parent
    norm_data = raw.get("norm")
    if isinstance(norm_data, str):
        try:
            norm_data = json.loads((base / norm_data).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load norm file {norm_data}: {exc}") from exc
    if norm_data is not None:
        R = norm_data.get("R") if isinstance(norm_data, dict) else None
        if R is not None and not 0.0 < float(R) < 1.0:
            raise ConfigError(f"R must lie in (0, 1), got {R}")
    grids = raw.get("grids", {}) or {}
    tols = raw.get("tolerances", {}) or {}
    if not isinstance(grids, dict) or not isinstance(tols, dict):
        raise ConfigError("'grids' and 'tolerances' must be objects")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return RunConfig(
        raw=raw,
        base=base,
        norm_data=norm_data,
        n_r=_int("grids.n_r", grids.get("n_r"), 4),
        n_theta=_int("grids.n_theta", grids.get("n_theta"), 2),
        k_max=_int("grids.k_max", grids.get("k_max"), 0),
        ode_tol=_positive("tolerances.ode", tols.get("ode", 1e-10)),
        quad_tol=_positive("tolerances.quadrature", tols.get("quadrature", 1e-9)),
        lam=_positive("tolerances.lambda", tols.get("lambda"), allow_none=True),
        seed=seed,
        output=Path(raw.get("output", "out")),
    )
