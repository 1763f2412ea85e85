"""Herglotz condition, turning-point acceleration and convex foliation checks.

The Herglotz condition asks that ``d/dr F^2(r, 0, phi) > 0`` for every
tangential direction ``phi != 0``.  Because ``d/dr F^2`` is 2-homogeneous in
the fiber it suffices to test ``phi = +-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HerglotzViolated, NotReversible, OutOfDomain
from .norms import FinslerNorm, eval_norm

__all__ = [
    "HerglotzReport",
    "TurningAcceleration",
    "FoliationReport",
    "herglotz_grid",
    "check_herglotz",
    "turning_acceleration",
    "check_foliation",
]


def herglotz_grid(R: float, n_r: int) -> np.ndarray:
    """Radii in (R, 1], log-clustered toward the inner boundary."""
    return R + (1.0 - R) * np.logspace(-4.0, 0.0, n_r)


@dataclass
class HerglotzReport:
    min_margin: float
    argmin: tuple
    passed: bool
    n_r: int
    n_phi: int

    def to_json(self) -> dict:
        return {"pass": bool(self.passed), "min_margin": float(self.min_margin),
                "argmin": {"r": float(self.argmin[0]), "phi": float(self.argmin[1])},
                "grid": {"n_r": self.n_r, "n_phi": self.n_phi}}


@dataclass(frozen=True)
class TurningAcceleration:
    r0: float
    a: float
    phi: float

    @property
    def diagonal_kernel(self) -> float:
        """Limit of sqrt(r - r0) / rdot as r -> r0, i.e. 1/sqrt(2a)."""
        return 1.0 / np.sqrt(2.0 * self.a)


@dataclass
class FoliationReport:
    radii: np.ndarray
    second_derivative: np.ndarray
    passed: bool
    max_value: float
    argmax: float
    herglotz: HerglotzReport | None = field(default=None)

    def to_json(self) -> dict:
        return {"pass": bool(self.passed), "max_second_derivative": float(self.max_value),
                "argmax": {"r": float(self.argmax)}, "grid": {"n_r": int(self.radii.size)}}


def _phi_samples(n_phi: int) -> np.ndarray:
    half = np.arange(1, n_phi // 2 + 1, dtype=float)
    vals = np.concatenate([half, -half])
    if n_phi % 2:
        vals = np.append(vals, float(n_phi // 2 + 1))
    return vals


def check_herglotz(norm: FinslerNorm, n_r: int = 200, n_phi: int = 2) -> HerglotzReport:
    """Evaluate d/dr F^2(r, 0, phi) on a tensor grid and report its minimum."""
    if n_r < 2 or n_phi < 2:
        raise ValueError("n_r and n_phi must be at least 2")
    r = herglotz_grid(norm.R, n_r)
    phi = _phi_samples(n_phi)
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    dr = np.asarray(norm.jet(rr.ravel(), np.zeros(rr.size), pp.ravel()).dr).reshape(rr.shape)
    k = np.unravel_index(int(np.argmin(dr)), dr.shape)
    margin = float(dr[k])
    return HerglotzReport(margin, (float(rr[k]), float(pp[k])), margin > 0, n_r, n_phi)


def _accel_at(norm: FinslerNorm, r0: float, phi: float) -> float:
    j = norm.jet(r0, 0.0, phi)
    det = j.h_rr * j.h_pp - j.h_rp * j.h_rp
    # 1/2 g^{11} d_r F^2 with g = H/2, so g^{11} = 2 H_pp / det
    return float(j.h_pp / det * j.dr)


def turning_acceleration(norm: FinslerNorm, r0: float, rtol: float = 1e-9) -> TurningAcceleration:
    """r''(0) of the unit-speed geodesic launched tangentially at radius r0."""
    if not norm.R - 1e-12 <= r0 <= 1.0 + 1e-12:
        raise OutOfDomain(f"turning radius {r0} outside [{norm.R}, 1]")
    phi_p = 1.0 / eval_norm(norm, r0, 0.0, 1.0)
    phi_m = -1.0 / eval_norm(norm, r0, 0.0, -1.0)
    a_p = _accel_at(norm, r0, phi_p)
    a_m = _accel_at(norm, r0, phi_m)
    if abs(a_p - a_m) > rtol * max(abs(a_p), abs(a_m)):
        raise NotReversible(f"turning acceleration differs between directions: {a_p} vs {a_m}")
    if not a_p > 0:
        raise HerglotzViolated(f"turning acceleration {a_p} is not positive at r0={r0}")
    return TurningAcceleration(float(r0), a_p, phi_p)


def check_foliation(norm: FinslerNorm, n_r: int = 200, raise_on_fail: bool = False) -> FoliationReport:
    """Second derivative of psi(x) = 1 - |x|^2 along tangential geodesics at t = 0.

    At the lowest point the Cartesian velocity is ``r0 theta' e_theta`` and
    the radial acceleration is ``r'' - r0 theta'^2``, so
    ``d^2/dt^2 psi = -2 (|gamma'|^2 + gamma . gamma'') = -2 r0 r''(0)``.
    """
    herg = check_herglotz(norm, n_r=max(n_r, 2))
    r0 = herglotz_grid(norm.R, n_r)
    vals = np.empty_like(r0)
    for i, r in enumerate(r0):
        theta_dot = 1.0 / eval_norm(norm, r, 0.0, 1.0)
        rddot = _accel_at(norm, r, theta_dot)
        speed2 = (r * theta_dot) ** 2
        radial_acc = rddot - r * theta_dot ** 2
        vals[i] = -2.0 * (speed2 + r * radial_acc)
    k = int(np.argmax(vals))
    report = FoliationReport(r0, vals, bool(np.all(vals < 0)), float(vals[k]), float(r0[k]), herg)
    if raise_on_fail and not report.passed:
        raise HerglotzViolated(f"foliation fails at r={r0[k]:.6g} (d2psi={vals[k]:.3g})")
    return report
