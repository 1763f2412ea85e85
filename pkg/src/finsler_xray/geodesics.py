"""Geodesic integration and tangential geodesic records.

Geodesics solve the first-order system ``(r', theta', rho', phi') =
(rho, phi, -2 G^1, -2 G^2)`` with an embedded 8(5,3) Runge-Kutta method.
A tangential geodesic is launched from its lowest point ``r0`` with unit
speed; only the rising branch is integrated, the descending one follows by
reversibility and mirror symmetry.

Along the rising branch the natural smooth variable is ``u = sqrt(r - r0)``
(``t`` is an analytic function of ``u`` near the turning point), so the
branch functions are stored as Chebyshev series in ``u``:

* ``t(u)`` with ``K = sqrt(r - r0) / rdot = t'(u) / 2``,
* ``omega(u) = theta - theta0``.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    HerglotzViolated,
    NoBracket,
    NonMonotone,
    OutOfDomain,
    SteppedBelowDomain,
    Trapped,
)
from .herglotz import TurningAcceleration, turning_acceleration
from .norms import FinslerNorm

__all__ = [
    "GeodesicState",
    "Trajectory",
    "GeodesicRecord",
    "integrate_geodesic",
    "trace_tangential",
    "trace_many",
    "shoot_boundary_geodesic",
    "integrate_along",
    "DEFAULT_TMAX",
]

DEFAULT_TMAX = 200.0
DEFAULT_TOL = 1e-10
DIAGONAL_THRESHOLD = 1e-6


@dataclass(frozen=True)
class GeodesicState:
    t: float
    r: float
    theta: float
    rdot: float
    thetadot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.rdot, self.thetadot])


@dataclass
class Trajectory:
    """Output of :func:`integrate_geodesic`.

    ``status`` is ``"exit"`` (reached r = 1) or ``"below"`` (left the
    annulus through r = R).
    """

    t: np.ndarray
    y: np.ndarray
    sol: Callable
    status: str
    t_end: float
    norm: FinslerNorm = field(repr=False)

    def state(self, t) -> np.ndarray:
        return self.sol(t)

    def unit_speed_defect(self) -> float:
        r, _, rd, td = self.y
        return float(np.max(np.abs(np.sqrt(self.norm.f2(r, rd, td)) - 1.0)))

    def angular_momentum(self) -> np.ndarray:
        r, _, rd, td = self.y
        return np.asarray(self.norm.angular_momentum(r, rd, td))


def _rhs(norm: FinslerNorm, r0: float = 0.0):
    """RHS in the shifted radius ``r - r0`` (keeps precision near the turning point)."""
    acc = norm.geodesic_acceleration

    def f(t, y):
        r = r0 + y[0]
        a1, a2 = acc(r, y[2], y[3])
        return [y[2], y[3], a1, a2]

    return f


def integrate_geodesic(norm: FinslerNorm, initial: GeodesicState, t_max: float = DEFAULT_TMAX,
                       rtol: float = DEFAULT_TOL, atol: float = DEFAULT_TOL,
                       direction: float = 1.0) -> Trajectory:
    """Integrate from ``initial`` until r = 1, r = R or ``t_max``.

    ``direction = -1`` integrates backward in time.
    """
    if initial.rdot == 0 and initial.thetadot == 0:
        raise ValueError("initial velocity must be nonzero")
    if not norm.R - 1e-12 <= initial.r <= 1.0:
        raise OutOfDomain(f"initial radius {initial.r} outside [{norm.R}, 1]")
    R = norm.R

    def exit_ev(t, y):
        return y[0] - 1.0
    exit_ev.terminal = True
    exit_ev.direction = direction

    def below_ev(t, y):
        return y[0] - R + 1e-12
    below_ev.terminal = True
    below_ev.direction = -direction

    t0 = initial.t
    sol = solve_ivp(_rhs(norm), (t0, t0 + direction * t_max), initial.as_array(), method="DOP853",
                    rtol=rtol, atol=atol, events=(exit_ev, below_ev), dense_output=True)
    if sol.status == -1:
        raise Trapped(f"integration failed: {sol.message}")
    if len(sol.t_events[0]):
        status, t_end = "exit", float(sol.t_events[0][0])
    elif len(sol.t_events[1]):
        status, t_end = "below", float(sol.t_events[1][0])
        warnings.warn(f"geodesic left the annulus through r = R at t = {t_end:.6g}", SteppedBelowDomain,
                      stacklevel=2)
    else:
        raise Trapped(f"no boundary exit before t_max = {t_max}")
    return Trajectory(sol.t, sol.y, sol.sol, status, t_end, norm)


def _invert_monotone(sol, target, t_lo, t_hi, t_tab, u_tab, iters: int = 60):
    """Solve ``dr(t) = target`` for t on a monotone branch (vectorized Newton with bisection)."""
    target = np.asarray(target, dtype=float)
    lo = np.full_like(target, t_lo)
    hi = np.full_like(target, t_hi)
    t = np.interp(np.sqrt(target), u_tab, t_tab)
    for _ in range(iters):
        y = sol(t)
        g = y[0] - target
        lo = np.where(g < 0, t, lo)
        hi = np.where(g >= 0, t, hi)
        step = np.where(y[2] > 0, g / np.where(y[2] > 0, y[2], 1.0), 0.0)
        t_new = t - step
        bad = (t_new <= lo) | (t_new >= hi) | (y[2] <= 0)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        if np.all(np.abs(t_new - t) <= 4e-16 * np.maximum(1.0, np.abs(t))):
            t = t_new
            break
        t = t_new
    return t


def _fit_cheb(fun, domain, deg0: int = 32, deg_max: int = 512, tol: float = 1e-13):
    """Adaptive Chebyshev interpolant: double the degree until the tail is negligible."""
    deg = deg0
    while True:
        cheb = Chebyshev.interpolate(fun, deg, domain=domain)
        c = np.abs(cheb.coef)
        scale = max(c.max(), 1e-300)
        if c[-4:].max() <= tol * scale or deg >= deg_max:
            return cheb
        deg *= 2


@dataclass
class GeodesicRecord:
    """Rising branch of a tangential geodesic with lowest point (r0, theta0).

    ``samples`` has columns ``(r, t, omega, rdot)`` on a grid clustered
    like ``sqrt(r - r0)`` near the turning point.
    """

    r0: float
    theta0: float
    T: float
    accel: TurningAcceleration
    t_of_u: Chebyshev
    omega_of_u: Chebyshev
    sol: Callable = field(repr=False)
    samples: np.ndarray = field(repr=False)
    descending: Callable | None = field(default=None, repr=False)
    T_descending: float | None = None
    norm: FinslerNorm | None = field(default=None, repr=False)

    @cached_property
    def dt_du(self) -> Chebyshev:
        return self.t_of_u.deriv()

    @property
    def U(self) -> float:
        return math.sqrt(1.0 - self.r0)

    @property
    def omega_exit(self) -> float:
        return float(self.omega_of_u(self.U))

    @property
    def length(self) -> float:
        return 2.0 * self.T

    @property
    def exit_points(self) -> tuple:
        w = self.omega_exit
        return ((1.0, self.theta0 - w), (1.0, self.theta0 + w))

    def rotated(self, theta0: float) -> "GeodesicRecord":
        """Same geodesic rotated so that its lowest point is at ``theta0``."""
        return replace(self, theta0=float(theta0))

    def at_offset(self, u):
        """Branch data at ``u = sqrt(r - r0)``: (t, omega, K, rdot)."""
        u = np.asarray(u, dtype=float)
        dt = self.dt_du(u)
        K = 0.5 * dt
        rdot = np.where(dt > 0, 2.0 * u / np.where(dt > 0, dt, 1.0), 0.0)
        near = u * u < DIAGONAL_THRESHOLD
        if np.any(near):
            a = self.accel.a
            K = np.where(near, self.accel.diagonal_kernel, K)
            rdot = np.where(near, np.sqrt(2.0 * a) * u, rdot)
        return self.t_of_u(u), self.omega_of_u(u), K, rdot

    def at_radius(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r0 - 1e-14) or np.any(r > 1.0 + 1e-14):
            raise OutOfDomain(f"radius outside [{self.r0}, 1]")
        return self.at_offset(np.sqrt(np.clip(r - self.r0, 0.0, None)))

    def kernel(self, r):
        return self.at_radius(r)[2]

    def state(self, t) -> np.ndarray:
        """Polar state (r, theta, rdot, thetadot) at time t in [-T, T] (lowest point at t = 0)."""
        t = np.asarray(t, dtype=float)
        if self.descending is not None and np.ndim(t) == 0 and t < 0:
            y = self.descending(t)
            return np.array([y[0] + self.r0, self.theta0 + y[1], y[2], y[3]])
        y = self.sol(np.abs(t))
        sign = np.sign(t) + (t == 0)
        return np.array([y[0] + self.r0, self.theta0 + sign * y[1], sign * y[2], y[3]])

    def to_csv(self, path) -> None:
        header = json.dumps({"r0": self.r0, "theta0": self.theta0, "T": self.T}, sort_keys=True)
        np.savetxt(path, self.samples, delimiter=",", fmt="%.17g",
                   header=header + "\nr,t,omega,rdot", comments="# ")


def trace_tangential(norm: FinslerNorm, r0: float, theta0: float = 0.0, t_max: float = DEFAULT_TMAX,
                     rtol: float = DEFAULT_TOL, atol: float = DEFAULT_TOL, n_samples: int = 129,
                     both_branches: bool = False) -> GeodesicRecord:
    """Launch the unit-speed geodesic tangent to the circle r = r0 and record its rising branch."""
    R = norm.R
    if not (R - 1e-12 <= r0 < 1.0):
        raise OutOfDomain(f"turning radius {r0} must lie in [{R}, 1)")
    accel = turning_acceleration(norm, r0)
    thetadot = accel.phi
    U2 = 1.0 - r0

    def exit_ev(t, y):
        return y[0] - U2
    exit_ev.terminal = True
    exit_ev.direction = 1

    def turn_ev(t, y):
        return y[2]
    turn_ev.terminal = True
    turn_ev.direction = -1

    y_init = [0.0, 0.0, 0.0, thetadot]
    sol = solve_ivp(_rhs(norm, r0), (0.0, t_max), y_init, method="DOP853", rtol=rtol, atol=atol,
                    events=(exit_ev, turn_ev), dense_output=True)
    if sol.status == -1:
        raise Trapped(f"integration failed at r0={r0}: {sol.message}")
    if len(sol.t_events[1]) and (not len(sol.t_events[0]) or sol.t_events[1][0] < sol.t_events[0][0]):
        raise HerglotzViolated(f"second turning point on the geodesic from r0={r0}")
    if not len(sol.t_events[0]):
        raise Trapped(f"no boundary exit before t_max = {t_max} (r0={r0})")
    T = float(sol.t_events[0][0])
    dense = sol.sol
    u_tab = np.sqrt(np.clip(sol.y[0], 0.0, None))
    t_tab = sol.t

    def t_of_u(u):
        return _invert_monotone(dense, np.asarray(u) ** 2, 0.0, T, t_tab, u_tab)

    U = math.sqrt(U2)
    # coefficients below the integration tolerance are noise
    ctol = max(1e-13, 10.0 * rtol)
    t_cheb = _fit_cheb(t_of_u, [0.0, U], tol=ctol)
    w_cheb = _fit_cheb(lambda u: dense(t_cheb(u))[1], [0.0, U], tol=ctol)

    descending = T_back = None
    if both_branches:
        def exit_back(t, y):
            return y[0] - U2
        exit_back.terminal = True
        exit_back.direction = 1
        back = solve_ivp(_rhs(norm, r0), (0.0, -t_max), y_init, method="DOP853", rtol=rtol, atol=atol,
                         events=(exit_back,), dense_output=True)
        if not len(back.t_events[0]):
            raise Trapped(f"descending branch from r0={r0} did not exit")
        descending = back.sol
        T_back = float(-back.t_events[0][0])

    # sample table on a grid uniform in u (spacing ~ sqrt(r - r0) near r0)
    u = U * (1.0 - np.cos(np.linspace(0.0, np.pi / 2, n_samples)))
    rec = GeodesicRecord(float(r0), float(theta0), T, accel, t_cheb, w_cheb, dense,
                         np.empty((0, 4)), descending, T_back, norm)
    t_s, w_s, _, rd_s = rec.at_offset(u)
    rec.samples = np.column_stack([r0 + u * u, t_s, w_s, rd_s])
    return rec


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FINSLER_XRAY_THREADS", "1")))
    except ValueError:
        return 1


def trace_many(norm: FinslerNorm, radii: Sequence[float], **kw) -> list:
    """Trace tangential geodesics for many turning radii (optionally threaded)."""
    radii = [float(r) for r in radii]
    n = _threads()
    if n == 1:
        return [trace_tangential(norm, r, **kw) for r in radii]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(lambda r: trace_tangential(norm, r, **kw), radii))


def shoot_boundary_geodesic(norm: FinslerNorm, delta_theta: float, bracket: tuple | None = None,
                            n_scan: int = 12, **kw) -> GeodesicRecord:
    """Tangential geodesic whose endpoints on r = 1 are ``delta_theta`` apart.

    Solves ``2 omega(r0, 1) = delta_theta`` for r0.  When ``omega(., 1)`` is
    not monotone the smallest solution is returned with a warning.
    """
    if delta_theta <= 0:
        raise NoBracket("boundary angle separation must be positive")
    cache: dict = {}

    def spread(r0):
        if r0 not in cache:
            cache[r0] = trace_tangential(norm, r0, **kw)
        return 2.0 * cache[r0].omega_exit - delta_theta

    R = norm.R
    top = 1.0 - 1e-6
    if bracket is None:
        grid = np.linspace(R, top, n_scan)
        vals = np.array([spread(float(r)) for r in grid])
        d = np.diff(vals)
        if np.any(d > 0) and np.any(d < 0):
            warnings.warn("boundary spread is not monotone in the turning radius; "
                          "returning the smallest solution", NonMonotone, stacklevel=2)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
        if not idx.size:
            raise NoBracket(f"separation {delta_theta} outside the achievable range "
                            f"(0, {vals.max() + delta_theta:.6g}]")
        a, b = float(grid[idx[0]]), float(grid[idx[0] + 1])
    else:
        a, b = bracket
        if spread(a) * spread(b) > 0:
            raise NoBracket(f"no sign change on the bracket {bracket}")
    if spread(a) == 0:
        return cache[a]
    if spread(b) == 0:
        return cache[b]
    r0 = brentq(spread, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    spread(r0)
    return cache[r0]


def _breakpoints(sol, T: float) -> np.ndarray:
    ts = np.abs(np.asarray(getattr(sol, "ts", [0.0, T]), dtype=float))
    ts = np.unique(np.clip(ts, 0.0, T))
    if ts[0] > 0:
        ts = np.insert(ts, 0, 0.0)
    if ts[-1] < T:
        ts = np.append(ts, T)
    return ts


def _gauss_segments(a, b, m):
    g, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * g
    return t, half[:, None] * w


def integrate_along(record: GeodesicRecord, integrand: Callable, m: int = 8, tol: float = 1e-11,
                    max_depth: int = 12, branches: Sequence[str] = ("rising", "falling")) -> np.ndarray:
    """Integrate ``integrand(state)`` over the full geodesic in arclength.

    ``state`` is an array (4, N) of polar (r, theta, rdot, thetadot) at N
    nodes; ``integrand`` returns shape (N,) or (N, P).  Each accepted
    integrator step of each branch gets an m-point Gauss rule, checked
    against 2m points; segments that disagree are bisected.  ``branches``
    selects the rising (t > 0) and/or falling (t < 0) half.
    """
    r0, th0 = record.r0, record.theta0

    def rising(t):
        y = record.sol(t)
        return np.array([r0 + y[0], th0 + y[1], y[2], y[3]])

    if record.descending is not None:
        def falling(t):
            y = record.descending(-t)
            return np.array([r0 + y[0], th0 + y[1], y[2], y[3]])
        ts_fall = _breakpoints(record.descending, record.T_descending)
    else:
        def falling(t):
            y = record.sol(t)
            return np.array([r0 + y[0], th0 - y[1], -y[2], y[3]])
        ts_fall = _breakpoints(record.sol, record.T)

    total = 0.0
    parts = {"rising": (rising, _breakpoints(record.sol, record.T)), "falling": (falling, ts_fall)}
    for name in branches:
        branch, ts = parts[name]
        a, b = ts[:-1], ts[1:]
        for depth in range(max_depth + 1):
            est = []
            for mm in (m, 2 * m):
                t, w = _gauss_segments(a, b, mm)
                f = np.asarray(integrand(branch(t.ravel())))
                est.append(np.einsum("sj,sj...->s...", w, f.reshape(t.shape + f.shape[1:])))
            coarse, fine = est
            err = np.abs(fine - coarse).reshape(len(a), -1).max(axis=1)
            scale = max(float(np.max(np.abs(fine.sum(axis=0)))), 1e-300)
            bad = err > tol * scale / len(a)
            if depth == max_depth:
                bad[:] = False
            total = total + fine[~bad].sum(axis=0)
            if not np.any(bad):
                break
            mid = 0.5 * (a[bad] + b[bad])
            a, b = np.concatenate([a[bad], mid]), np.concatenate([mid, b[bad]])
    return total
