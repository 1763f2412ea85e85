"""Radial profiles r -> value used for speeds, conformal factors and fields.

Profiles are evaluated on floats or numpy arrays and expose their first two
derivatives, which the analytic norm families need for spray coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError

__all__ = [
    "RadialProfile",
    "Polynomial",
    "Tabulated",
    "FunctionProfile",
    "as_profile",
    "profile_from_json",
]


class RadialProfile:
    """Interface of a smooth radial function."""

    def __call__(self, r):
        raise NotImplementedError

    def derivative(self, r, order: int = 1):
        raise NotImplementedError

    def scaled(self, factor: float) -> "RadialProfile":
        return FunctionProfile(
            lambda r: factor * self(r),
            lambda r, order=1: factor * self.derivative(r, order),
        )

    def to_json(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


@dataclass(frozen=True, eq=False)
class Polynomial(RadialProfile):
    """c(r) = sum_n coeffs[n] r**n (ascending powers)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            object.__setattr__(self, "coeffs", (0.0,))
        d1 = tuple(n * c for n, c in enumerate(self.coeffs))[1:] or (0.0,)
        d2 = tuple(n * c for n, c in enumerate(d1))[1:] or (0.0,)
        object.__setattr__(self, "_derivs", (self.coeffs, d1, d2))

    @staticmethod
    def _horner(cs, r):
        acc = 0.0 * r
        for c in reversed(cs):
            acc = acc * r + c
        return acc

    def __call__(self, r):
        return self._horner(self.coeffs, r)

    def derivative(self, r, order: int = 1):
        if order < 3:
            return self._horner(self._derivs[order], r)
        p = np.polynomial.Polynomial(self.coeffs).deriv(order)
        return p(r)

    def to_json(self) -> dict:
        return {"poly": list(self.coeffs)}


@dataclass(frozen=True, eq=False)
class Tabulated(RadialProfile):
    """Cubic-spline interpolation of (r, value) pairs."""

    r: np.ndarray
    values: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ConfigError("tabulated profile needs matching 1-D arrays of length >= 2")
        order = np.argsort(r)
        r, v = r[order], v[order]
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        bc = "not-a-knot" if r.size >= 4 else "natural"
        object.__setattr__(self, "_spline", CubicSpline(r, v, bc_type=bc, extrapolate=True))

    def __call__(self, r):
        out = self._spline(r)
        return float(out) if np.ndim(r) == 0 else out

    def derivative(self, r, order: int = 1):
        out = self._spline(r, order)
        return float(out) if np.ndim(r) == 0 else out

    def to_json(self) -> dict:
        return {"table": [[float(a), float(b)] for a, b in zip(self.r, self.values)]}


@dataclass(frozen=True, eq=False)
class FunctionProfile(RadialProfile):
    """Wrap a Python callable; derivatives fall back to central differences."""

    fun: Callable
    dfun: Callable | None = None

    def __call__(self, r):
        return self.fun(r)

    def derivative(self, r, order: int = 1):
        if self.dfun is not None:
            return self.dfun(r, order)
        h = 1e-4 if order == 1 else 1e-3
        if order == 1:
            return (8 * (self.fun(r + h) - self.fun(r - h))
                    - (self.fun(r + 2 * h) - self.fun(r - 2 * h))) / (12 * h)
        if order == 2:
            return (-self.fun(r + 2 * h) + 16 * self.fun(r + h) - 30 * self.fun(r)
                    + 16 * self.fun(r - h) - self.fun(r - 2 * h)) / (12 * h * h)
        raise ValueError("only first and second derivatives are available")


def as_profile(obj) -> RadialProfile:
    """Coerce a number, coefficient list, callable or JSON dict to a profile."""
    if isinstance(obj, RadialProfile):
        return obj
    if isinstance(obj, (int, float)):
        return Polynomial((float(obj),))
    if isinstance(obj, dict):
        return profile_from_json(obj)
    if callable(obj):
        return FunctionProfile(obj)
    if isinstance(obj, Sequence) or isinstance(obj, np.ndarray):
        return Polynomial(tuple(obj))
    raise ConfigError(f"cannot interpret {obj!r} as a radial profile")


def profile_from_json(obj) -> RadialProfile:
    if isinstance(obj, (int, float, list)):
        return as_profile(obj)
    if not isinstance(obj, dict):
        raise ConfigError(f"profile must be an object, got {type(obj).__name__}")
    if "poly" in obj:
        return Polynomial(tuple(obj["poly"]))
    if "table" in obj:
        table = np.asarray(obj["table"], dtype=float)
        if table.ndim != 2 or table.shape[1] != 2:
            raise ConfigError("profile table must be a list of [r, value] pairs")
        return Tabulated(table[:, 0], table[:, 1])
    raise ConfigError("profile object needs a 'poly' or 'table' key")
