"""Boundary distances, sphere-bundle transforms and the first-variation identity.

For a conformal family ``F_s = (1 + s f) F_0`` with radial ``f`` the
boundary distance between two boundary points joined by a tangential
geodesic satisfies ``d/ds d_{F_s}|_{s=0} = I f(gamma_0)``.  Distances here are
lengths of tangential geodesics found by shooting on the boundary angle,
so they are critical values of the length, not certified global minima.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BoundaryNonVanishing, HerglotzViolated, NoBracket
from .geodesics import GeodesicRecord, integrate_along, shoot_boundary_geodesic
from .herglotz import check_herglotz
from .norms import ConformalNorm, FinslerNorm
from .profiles import RadialProfile, as_profile

__all__ = [
    "SphereBundleFunction",
    "boundary_distance",
    "sphere_bundle_transform",
    "flow_derivative",
    "check_potential_vanishing",
    "comparison_length",
    "conformal_family",
    "LinearizationRow",
    "verify_conformal_linearization",
]

LIN_TOL = 1e-12


@dataclass(frozen=True)
class SphereBundleFunction:
    """h(r, theta, rho, phi) on unit fibers; ``kind`` is informational."""

    fun: Callable
    kind: str = "general"

    def __call__(self, r, theta, rho, phi):
        return self.fun(r, theta, rho, phi)

    @classmethod
    def scalar(cls, f: Callable) -> "SphereBundleFunction":
        """Fiber-independent h(x, y) = f(r, theta)."""
        return cls(lambda r, th, rho, phi: f(r, th) * np.ones_like(rho), "general")

    @classmethod
    def quadratic(cls, h_ij: Callable) -> "SphereBundleFunction":
        """h = h_ij y^i y^j with ``h_ij(r) -> (h_rr, h_rt, h_tt)`` in polar components."""
        def fun(r, th, rho, phi):
            a, b, c = h_ij(r)
            return a * rho * rho + 2 * b * rho * phi + c * phi * phi
        return cls(fun, "quadratic-2-tensor")


def boundary_distance(norm: FinslerNorm, delta_theta: float, **kw) -> float:
    """Length 2T of the tangential geodesic joining boundary points delta_theta apart."""
    return shoot_boundary_geodesic(norm, delta_theta, **kw).length


def sphere_bundle_transform(norm: FinslerNorm, h: Callable, record: GeodesicRecord) -> float:
    """int h(gamma(t), gamma'(t)) dt over the whole geodesic."""
    return float(integrate_along(record, lambda s: np.asarray(h(s[0], s[1], s[2], s[3]), dtype=float)
                                 * np.ones(s.shape[1])))


def flow_derivative(norm: FinslerNorm, u: Callable, step: float = 1e-3) -> Callable:
    """Xu: derivative of u along the geodesic vector field.

    Central differences of ``u(z + eps X(z))`` at eps = +-step and +-step/2,
    combined by Richardson extrapolation.
    """
    def xu(r, th, rho, phi):
        a1, a2 = norm.geodesic_acceleration(r, rho, phi)
        z = np.array([r, th, rho, phi])
        X = np.array([rho, phi, a1, a2])
        scale = step / np.maximum(1.0, np.linalg.norm(X, axis=0))

        def d(hh):
            zp, zm = z + hh * X, z - hh * X
            return (u(*zp) - u(*zm)) / (2 * hh)

        return (4 * d(0.5 * scale) - d(scale)) / 3
    return xu


def check_potential_vanishing(norm: FinslerNorm, u: Callable, records: Sequence[GeodesicRecord],
                              tol: float = 1e-10, n_boundary: int = 64, seed: int = 0) -> float:
    """max over records of |I_SM(Xu)| for u vanishing on the boundary fibers."""
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, n_boundary)
    beta = rng.uniform(0, 2 * np.pi, n_boundary)
    rho, phi = np.cos(beta), np.sin(beta)
    F = np.sqrt(norm.f2(np.ones(n_boundary), rho, phi))
    ub = np.asarray(u(np.ones(n_boundary), th, rho / F, phi / F), dtype=float)
    if np.max(np.abs(ub)) > tol:
        raise BoundaryNonVanishing(f"|u| reaches {np.max(np.abs(ub)):.3g} on boundary fibers")
    xu = flow_derivative(norm, u)
    worst = 0.0
    for rec in records:
        worst = max(worst, abs(sphere_bundle_transform(norm, xu, rec)))
    return worst


def comparison_length(norm: FinslerNorm, delta_theta: float, r0: float, **kw) -> float:
    """F-length of the tangential geodesic from r0 with its angle rescaled to span delta_theta.

    The curve joins the same boundary points as the geodesic solving the
    shooting problem, so its length exceeds the critical one by O(dr0^2).
    """
    from .geodesics import trace_tangential
    rec = trace_tangential(norm, r0, **kw)
    scale = delta_theta / (2.0 * rec.omega_exit)
    return float(integrate_along(rec, lambda s: np.sqrt(norm.f2(s[0], s[2], scale * s[3]))))


def conformal_family(norm: FinslerNorm, f, s: float) -> ConformalNorm:
    """F_s = (1 + s f(r)) F_0."""
    f = as_profile(f)
    return ConformalNorm(norm, _affine(f, s))


class _affine(RadialProfile):
    def __init__(self, f: RadialProfile, s: float):
        self.f, self.s = f, float(s)

    def __call__(self, r):
        return 1.0 + self.s * self.f(r)

    def derivative(self, r, order: int = 1):
        return self.s * self.f.derivative(r, order)


@dataclass
class LinearizationRow:
    delta_theta: float
    lhs: float
    rhs: float
    rel_err: float
    lhs_richardson: float
    r0: float

    def to_json(self) -> dict:
        return {"delta_theta": self.delta_theta, "lhs": self.lhs, "rhs": self.rhs, "rel_err": self.rel_err,
                "lhs_richardson": self.lhs_richardson, "r0": self.r0}


def _shoot_near(norm, delta_theta, r0_guess, **kw):
    """Shoot with a bracket around a nearby solution, widening as needed."""
    width = 1e-3
    R = norm.R
    while width < 1.0:
        lo, hi = max(R, r0_guess - width), min(1.0 - 1e-9, r0_guess + width)
        try:
            return shoot_boundary_geodesic(norm, delta_theta, bracket=(lo, hi), **kw)
        except NoBracket:
            width *= 8
    return shoot_boundary_geodesic(norm, delta_theta, **kw)


def verify_conformal_linearization(norm: FinslerNorm, f, delta_thetas: Sequence[float],
                                   step: float = 1e-4, rtol: float = LIN_TOL,
                                   check: bool = True) -> list:
    """Compare the central s-difference of boundary distances with I f along gamma_0."""
    f = as_profile(f)
    kw = {"rtol": rtol, "atol": rtol}
    if check:
        for s in (-step, step):
            rep = check_herglotz(conformal_family(norm, f, s))
            if not rep.passed:
                raise HerglotzViolated(f"F_s fails the Herglotz condition at s={s}")
    rows = []
    for dth in delta_thetas:
        g0 = shoot_boundary_geodesic(norm, dth, **kw)
        rhs = float(integrate_along(g0, lambda st: f(st[0])))

        def dist(s):
            if s == 0:
                return g0.length
            return _shoot_near(conformal_family(norm, f, s), dth, g0.r0, **kw).length

        def central(h):
            return (dist(h) - dist(-h)) / (2 * h)

        lhs = central(step)
        lhs2 = central(0.5 * step)
        rich = (4 * lhs2 - lhs) / 3
        denom = abs(rhs) if rhs != 0 else 1.0
        rows.append(LinearizationRow(float(dth), float(lhs), rhs, abs(lhs - rhs) / denom, float(rich),
                                     g0.r0))
    return rows
