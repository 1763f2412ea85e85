"""Spherically symmetric Finsler norms on the annulus R <= r <= 1.

Points of the tangent bundle are written in polar coordinates as
``(r, theta, rho, phi)`` where ``rho = dr(y)`` and ``phi = dtheta(y)``.
Spherical symmetry means nothing depends on ``theta``, so every function
here takes the fiber point ``(r, rho, phi)``.

Derivatives of ``F**2`` are bundled in a :class:`Jet`.  Norm families with a
closed form provide an analytic jet; all others use batched central
differences with one Richardson level, switching to one-sided stencils in
``r`` near ``r = R`` and ``r = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigError,
    DifferentiationFailure,
    NonPositiveSpeed,
    NotPositiveDefinite,
    OptimizationNoConverge,
    OutOfDomain,
)
from .profiles import RadialProfile, as_profile, profile_from_json

__all__ = [
    "FiberPoint",
    "Jet",
    "MetricTensor2",
    "SprayCoefficients",
    "FinslerNorm",
    "AnisotropicSpeed",
    "RadialRiemannian",
    "TabulatedFiber",
    "ConformalNorm",
    "eval_norm",
    "metric_tensor",
    "spray_coefficients",
    "co_norm",
    "legendre_norm_from_conorm",
    "fiber_sup",
    "check_axioms",
    "AxiomReport",
    "AxiomCheck",
    "norm_from_json",
    "register_family",
]

EPS = np.finfo(float).eps
# eps**(1/6) balances O(h^4) truncation of Richardson-extrapolated second
# differences against eps/h^2 rounding.
FD_STEP = EPS ** (1.0 / 6.0)
ZERO_FIBER = 1e-8
DOMAIN_SLACK = 1e-12


class FiberPoint(NamedTuple):
    r: float
    rho: float
    phi: float


class Jet(NamedTuple):
    """F^2 and its derivatives at a fiber point.

    ``dr`` is d/dr F^2, ``g_*`` the fiber gradient, ``h_*`` the fiber
    Hessian and ``m_*`` the mixed derivatives d^2 F^2 / dr dy.
    """

    f2: float
    dr: float
    g_rho: float
    g_phi: float
    h_rr: float
    h_rp: float
    h_pp: float
    m_rho: float
    m_phi: float


class MetricTensor2(NamedTuple):
    g11: float
    g12: float
    g22: float
    det: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def inverse(self) -> np.ndarray:
        return np.array([[self.g22, -self.g12], [-self.g12, self.g11]]) / self.det


class SprayCoefficients(NamedTuple):
    G1: float
    G2: float


# ---------------------------------------------------------------------------
# norm families
# ---------------------------------------------------------------------------

_FAMILIES: dict[str, Callable[[dict], "FinslerNorm"]] = {}


def register_family(name: str):
    def deco(loader):
        _FAMILIES[name] = loader
        return loader
    return deco


class FinslerNorm:
    """Base class: subclasses implement :meth:`f2` (vectorized, no checks)."""

    family = "abstract"
    R: float

    def f2(self, r, rho, phi):
        raise NotImplementedError

    def __call__(self, r, rho, phi):
        return np.sqrt(self.f2(r, rho, phi))

    @property
    def has_analytic(self) -> bool:
        return False

    def analytic_jet(self, r, rho, phi) -> Jet:
        raise NotImplementedError

    def jet(self, r, rho, phi, analytic: bool | None = None) -> Jet:
        if analytic is None:
            analytic = self.has_analytic
        if analytic:
            return self.analytic_jet(r, rho, phi)
        return fd_jet(self, r, rho, phi)

    def check_speed(self, r, rho, phi) -> None:
        """Hook for families that can report a non-positive speed."""

    def geodesic_acceleration(self, r, rho, phi, analytic: bool | None = None):
        """Return (r'', theta'') = -2 G at the fiber point."""
        j = self.jet(r, rho, phi, analytic)
        det = j.h_rr * j.h_pp - j.h_rp * j.h_rp
        b1 = rho * j.m_rho - j.dr
        b2 = rho * j.m_phi
        a1 = -(j.h_pp * b1 - j.h_rp * b2) / det
        a2 = -(-j.h_rp * b1 + j.h_rr * b2) / det
        return a1, a2

    def angular_momentum(self, r, rho, phi):
        """L = 1/2 d/dphi F^2, conserved along geodesics."""
        return 0.5 * self.jet(r, rho, phi).g_phi

    def to_json(self) -> dict:
        raise TypeError(f"{type(self).__name__} cannot be serialized")


def _harmonic_trig(cos2, sin2, m_max):
    """cos(2 m beta), sin(2 m beta) for m = 0..m_max by recurrence."""
    cs = [1.0 + 0.0 * cos2]
    ss = [0.0 * cos2]
    for _ in range(m_max):
        c, s = cs[-1], ss[-1]
        cs.append(c * cos2 - s * sin2)
        ss.append(s * cos2 + c * sin2)
    return cs, ss


def _polar_jet(r, phi, u, v, e, p, pb, pbb, pr, prb) -> Jet:
    """Jet of F^2 = e p(r, beta), e = u^2 + v^2, (u, v) = (rho, r phi) = sqrt(e) (cos beta, sin beta).

    ``pb``, ``pbb``, ``pr``, ``prb`` are the partials of p in beta and r.
    """
    ie = 1.0 / e
    fu = 2 * u * p - v * pb
    fv = 2 * v * p + u * pb
    fuu = 2 * p - 2 * u * v * pb * ie + v * v * pbb * ie
    fvv = 2 * p + 2 * u * v * pb * ie + u * u * pbb * ie
    fuv = pb * (u * u - v * v) * ie - u * v * pbb * ie
    fur = 2 * u * pr - v * prb
    fvr = 2 * v * pr + u * prb
    return Jet(
        f2=e * p,
        dr=e * pr + phi * fv,
        g_rho=fu,
        g_phi=r * fv,
        h_rr=fuu,
        h_rp=r * fuv,
        h_pp=r * r * fvv,
        m_rho=fur + phi * fuv,
        m_phi=fv + r * (fvr + phi * fvv),
    )


@dataclass(frozen=True, eq=False)
class AnisotropicSpeed(FinslerNorm):
    """F^2 = (rho^2 + r^2 phi^2) / c^2 with a reversible anisotropic speed.

    The speed is either a sum of even fiber harmonics
    ``c = sum_m harmonics[m](r) cos(2 m beta)`` with ``beta`` the angle of
    ``(rho, r phi)``, which has a closed-form jet, or an arbitrary vectorized
    callable ``speed(r, rho, phi)`` that must be 0-homogeneous in the fiber.
    """

    R: float
    harmonics: tuple = ()
    speed: Callable | None = None
    family = "AnisotropicSpeed"

    def __post_init__(self):
        if not 0.0 < self.R < 1.0:
            raise ConfigError(f"inner radius must lie in (0, 1), got {self.R}")
        if self.speed is None and not self.harmonics:
            raise ConfigError("give either harmonics or a speed callable")
        object.__setattr__(self, "harmonics", tuple(as_profile(h) for h in self.harmonics))

    @property
    def has_analytic(self) -> bool:
        return self.speed is None

    def c(self, r, rho, phi):
        if self.speed is not None:
            return self.speed(r, rho, phi)
        u, v = rho, r * phi
        e = u * u + v * v
        e = np.where(e == 0, 1.0, e) if np.ndim(e) else (e or 1.0)
        cs, _ = _harmonic_trig((u * u - v * v) / e, 2 * u * v / e, len(self.harmonics) - 1)
        return sum(h(r) * cm for h, cm in zip(self.harmonics, cs))

    def f2(self, r, rho, phi):
        c = self.c(r, rho, phi)
        return (rho * rho + (r * phi) ** 2) / (c * c)

    def check_speed(self, r, rho, phi):
        if np.any(np.asarray(self.c(r, rho, phi)) <= 0):
            raise NonPositiveSpeed(f"speed is not positive at r={r}")

    def analytic_jet(self, r, rho, phi) -> Jet:
        u, v = rho, r * phi
        e = u * u + v * v
        m_max = len(self.harmonics) - 1
        cos2, sin2 = (u * u - v * v) / e, 2 * u * v / e
        cs, ss = _harmonic_trig(cos2, sin2, m_max)
        c = cb = cbb = cr = crb = 0.0
        for m, (h, cm, sm) in enumerate(zip(self.harmonics, cs, ss)):
            hv = h(r)
            hd = h.derivative(r)
            c = c + hv * cm
            cr = cr + hd * cm
            if m:
                cb = cb - 2 * m * hv * sm
                cbb = cbb - 4 * m * m * hv * cm
                crb = crb - 2 * m * hd * sm
        ic = 1.0 / c
        ic3 = ic * ic * ic
        ic4 = ic3 * ic
        p = ic * ic
        pb = -2 * cb * ic3
        pbb = -2 * cbb * ic3 + 6 * cb * cb * ic4
        pr = -2 * cr * ic3
        prb = -2 * crb * ic3 + 6 * cr * cb * ic4
        return _polar_jet(r, phi, u, v, e, p, pb, pbb, pr, prb)

    def to_json(self) -> dict:
        if self.speed is not None:
            return super().to_json()
        return {"family": self.family, "R": self.R,
                "harmonics": [h.to_json() for h in self.harmonics]}


class RadialRiemannian(AnisotropicSpeed):
    """g = (dr^2 + r^2 dtheta^2) / c(r)^2."""

    family = "RadialRiemannian"

    def __init__(self, R: float, c=1.0):
        super().__init__(R=R, harmonics=(as_profile(c),))

    @property
    def profile(self) -> RadialProfile:
        return self.harmonics[0]

    def to_json(self) -> dict:
        return {"family": self.family, "R": self.R, "c": self.profile.to_json()}


@dataclass(frozen=True, eq=False)
class TabulatedFiber(FinslerNorm):
    """F sampled on the unit circle of the orthonormal frame ``(rho, r phi)``.

    ``values[i, j]`` is F at radius ``r[i]`` and fiber angle
    ``2 pi j / n_angles``.  F is extended by homogeneity, so axiom (iii)
    holds exactly; interpolation is cubic in r and periodic cubic in angle.
    The jet uses the spline derivatives, which stay exact across knots where
    finite differences would straddle a jump in the third derivative.
    """

    R: float
    r: np.ndarray
    values: np.ndarray
    family = "TabulatedFiber"
    _radial: CubicSpline = field(init=False, repr=False)
    _angular: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != r.size or vals.shape[1] < 4:
            raise ConfigError("values must have shape (len(r), n_angles >= 4)")
        if np.any(vals <= 0):
            raise ConfigError("tabulated F must be positive on the unit circle")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", vals)
        n = vals.shape[1]
        ang = np.linspace(0.0, 2 * np.pi, n + 1)
        eye = np.vstack([np.eye(n), np.eye(n)[:1]])
        object.__setattr__(self, "_angular", CubicSpline(ang, eye, bc_type="periodic"))
        object.__setattr__(self, "_radial", CubicSpline(r, vals, axis=0))

    @classmethod
    def from_norm(cls, norm: FinslerNorm, n_r: int = 33, n_angles: int = 64):
        r = np.linspace(norm.R, 1.0, n_r)
        beta = 2 * np.pi * np.arange(n_angles) / n_angles
        rr, bb = np.meshgrid(r, beta, indexing="ij")
        vals = norm(rr, np.cos(bb), np.sin(bb) / rr)
        return cls(R=norm.R, r=r, values=vals)

    def _unit(self, r, u, v, nu: int = 0):
        """F on the unit circle at angle atan2(v, u) and its derivatives (d_r^a d_beta^b for a + b <= 2)."""
        beta = np.mod(np.arctan2(v, u), 2 * np.pi).ravel()
        r = r.ravel()
        if not nu:
            return np.einsum("ij,ij->i", self._radial(r), self._angular(beta))
        rad = [self._radial(r, k) for k in (0, 1)]
        ang = [self._angular(beta, k) for k in (0, 1, 2)]
        G = lambda a, b: np.einsum("ij,ij->i", rad[a], ang[b])
        return G(0, 0), G(0, 1), G(0, 2), G(1, 0), G(1, 1)

    def f2(self, r, rho, phi):
        r_a, rho_a, phi_a = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, rho, phi)))
        u, v = rho_a, r_a * phi_a
        unit = self._unit(r_a, u, v).reshape(r_a.shape)
        out = (u * u + v * v) * unit * unit
        return float(out) if out.ndim == 0 else out

    @property
    def has_analytic(self) -> bool:
        return True

    def analytic_jet(self, r, rho, phi) -> Jet:
        r_a, rho_a, phi_a = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, rho, phi)))
        shape = r_a.shape
        u, v = rho_a.ravel(), (r_a * phi_a).ravel()
        G, Gb, Gbb, Gr, Grb = self._unit(r_a, u, v, nu=2)
        jet = _polar_jet(r_a.ravel(), phi_a.ravel(), u, v, u * u + v * v, G * G, 2 * G * Gb,
                         2 * (Gb * Gb + G * Gbb), 2 * G * Gr, 2 * (Gr * Gb + G * Grb))
        if not shape:
            return Jet(*(float(x[0]) for x in jet))
        return Jet(*(x.reshape(shape) for x in jet))

    def to_json(self) -> dict:
        return {"family": self.family, "R": self.R, "r": self.r.tolist(),
                "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class ConformalNorm(FinslerNorm):
    """F_s(r, y) = w(r) F_0(r, y) for a positive radial factor w."""

    base: FinslerNorm
    factor: RadialProfile
    family = "Conformal"

    def __post_init__(self):
        object.__setattr__(self, "factor", as_profile(self.factor))

    @property
    def R(self):
        return self.base.R

    @property
    def has_analytic(self) -> bool:
        return self.base.has_analytic

    def f2(self, r, rho, phi):
        w = self.factor(r)
        return w * w * self.base.f2(r, rho, phi)

    def analytic_jet(self, r, rho, phi) -> Jet:
        b = self.base.analytic_jet(r, rho, phi)
        w = self.factor(r)
        ww = w * w
        dw = 2 * w * self.factor.derivative(r)
        return Jet(
            f2=ww * b.f2,
            dr=dw * b.f2 + ww * b.dr,
            g_rho=ww * b.g_rho,
            g_phi=ww * b.g_phi,
            h_rr=ww * b.h_rr,
            h_rp=ww * b.h_rp,
            h_pp=ww * b.h_pp,
            m_rho=dw * b.g_rho + ww * b.m_rho,
            m_phi=dw * b.g_phi + ww * b.m_phi,
        )

    def check_speed(self, r, rho, phi):
        self.base.check_speed(r, rho, phi)
        if np.any(np.asarray(self.factor(r)) <= 0):
            raise NonPositiveSpeed(f"conformal factor is not positive at r={r}")

    def to_json(self) -> dict:
        return {"family": self.family, "base": self.base.to_json(),
                "factor": self.factor.to_json()}


# ---------------------------------------------------------------------------
# finite-difference jet
# ---------------------------------------------------------------------------

_C5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_F5 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_OFF_C = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_OFF_F = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
# fiber stencil: center, rho +-1,+-2, phi +-1,+-2, corners at 1 and 2
_FIB = np.array(
    [[0, 0],
     [-2, 0], [-1, 0], [1, 0], [2, 0],
     [0, -2], [0, -1], [0, 1], [0, 2],
     [1, 1], [1, -1], [-1, 1], [-1, -1],
     [2, 2], [2, -2], [-2, 2], [-2, -2]], dtype=float)


def _radial_stencil(norm: FinslerNorm, r):
    """Offsets (N, 5) and weights (N, 5) of a 4th-order d/dr stencil."""
    R = norm.R
    hr = FD_STEP
    if 1.0 - R < 4 * hr:
        raise DifferentiationFailure(f"annulus width {1 - R:.3g} is below the stencil width {4 * hr:.3g}")
    r = np.asarray(r, dtype=float)
    lo = r < R + 2 * hr
    hi = r > 1.0 - 2 * hr
    off = np.where(lo[..., None], _OFF_F, np.where(hi[..., None], -_OFF_F, _OFF_C)) * hr
    w = np.where(lo[..., None], _F5, np.where(hi[..., None], -_F5, _C5)) / hr
    return off, w


def fd_jet(norm: FinslerNorm, r, rho, phi) -> Jet:
    """Jet of F^2 by batched central differences (vectorized over points)."""
    scalar = np.ndim(r) == 0 and np.ndim(rho) == 0 and np.ndim(phi) == 0
    r, rho, phi = np.broadcast_arrays(*(np.atleast_1d(np.asarray(x, dtype=float)) for x in (r, rho, phi)))
    scale = np.hypot(rho, phi)
    if np.any(scale < ZERO_FIBER * np.maximum(1.0, np.abs(r))):
        raise NotPositiveDefinite("fiber derivatives requested on the zero section")
    h = (scale * FD_STEP)[..., None]
    # fiber stencil at r
    fr = np.broadcast_to(r[..., None], r.shape + (len(_FIB),))
    frho = rho[..., None] + _FIB[:, 0] * h
    fphi = phi[..., None] + _FIB[:, 1] * h
    # gradient stencils at the radial offsets
    roff, rw = _radial_stencil(norm, r)
    g_off = np.array([[0, 0], [-2, 0], [-1, 0], [1, 0], [2, 0], [0, -2], [0, -1], [0, 1], [0, 2]], float)
    shape = r.shape + (5, 9)
    gr = np.broadcast_to((r[..., None] + roff)[..., None], shape)
    grho = np.broadcast_to(rho[..., None, None] + g_off[:, 0] * h[..., None], shape)
    gphi = np.broadcast_to(phi[..., None, None] + g_off[:, 1] * h[..., None], shape)

    n_f = fr.shape[-1]
    all_r = np.concatenate([fr.reshape(r.shape + (-1,)), gr.reshape(r.shape + (-1,))], axis=-1)
    all_rho = np.concatenate([frho.reshape(r.shape + (-1,)), grho.reshape(r.shape + (-1,))], axis=-1)
    all_phi = np.concatenate([fphi.reshape(r.shape + (-1,)), gphi.reshape(r.shape + (-1,))], axis=-1)
    vals = np.asarray(norm.f2(all_r, all_rho, all_phi), dtype=float)
    fv = vals[..., :n_f]
    gv = vals[..., n_f:].reshape(r.shape + (5, 9))

    hh = h[..., 0]
    d1 = lambda m2, m1, p1, p2: (m2 - 8 * m1 + 8 * p1 - p2) / (12 * hh)
    d2 = lambda m2, m1, c0, p1, p2: (-m2 + 16 * m1 - 30 * c0 + 16 * p1 - p2) / (12 * hh * hh)
    c0 = fv[..., 0]
    g_rho = d1(fv[..., 1], fv[..., 2], fv[..., 3], fv[..., 4])
    g_phi = d1(fv[..., 5], fv[..., 6], fv[..., 7], fv[..., 8])
    h_rr = d2(fv[..., 1], fv[..., 2], c0, fv[..., 3], fv[..., 4])
    h_pp = d2(fv[..., 5], fv[..., 6], c0, fv[..., 7], fv[..., 8])
    x1 = (fv[..., 9] - fv[..., 10] - fv[..., 11] + fv[..., 12]) / (4 * hh * hh)
    x2 = (fv[..., 13] - fv[..., 14] - fv[..., 15] + fv[..., 16]) / (16 * hh * hh)
    h_rp = (4 * x1 - x2) / 3

    f_at = gv[..., 0]
    grad_rho_at = (gv[..., 1] - 8 * gv[..., 2] + 8 * gv[..., 3] - gv[..., 4]) / (12 * hh[..., None])
    grad_phi_at = (gv[..., 5] - 8 * gv[..., 6] + 8 * gv[..., 7] - gv[..., 8]) / (12 * hh[..., None])
    dr = np.sum(rw * f_at, axis=-1)
    m_rho = np.sum(rw * grad_rho_at, axis=-1)
    m_phi = np.sum(rw * grad_phi_at, axis=-1)
    out = Jet(c0, dr, g_rho, g_phi, h_rr, h_rp, h_pp, m_rho, m_phi)
    if scalar:
        out = Jet(*(float(x[0]) for x in out))
    return out


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _check_domain(norm: FinslerNorm, r) -> None:
    r = np.asarray(r)
    if np.any(r < norm.R - DOMAIN_SLACK) or np.any(r > 1.0 + DOMAIN_SLACK):
        raise OutOfDomain(f"radius outside [{norm.R}, 1]: {r}")


def eval_norm(norm: FinslerNorm, r, rho, phi):
    """F(r, rho, phi) with domain and speed checks."""
    _check_domain(norm, r)
    rho_a, phi_a = np.asarray(rho, dtype=float), np.asarray(phi, dtype=float)
    nonzero = (rho_a != 0) | (phi_a != 0)
    if np.all(~nonzero):
        return 0.0 if np.ndim(rho_a) == 0 and np.ndim(r) == 0 else np.zeros(np.broadcast(r, rho_a, phi_a).shape)
    norm.check_speed(r, np.where(nonzero, rho_a, 1.0), phi_a)
    out = np.where(nonzero, norm(r, np.where(nonzero, rho_a, 1.0), phi_a), 0.0)
    return float(out) if out.ndim == 0 else out


def _guard_fiber(r, rho, phi):
    if math.hypot(rho, phi) < ZERO_FIBER * max(1.0, abs(r)):
        raise NotPositiveDefinite("metric tensor is undefined on the zero section")


def metric_tensor(norm: FinslerNorm, r, rho, phi, analytic: bool | None = None,
                  tol: float = 1e-12) -> MetricTensor2:
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j at a single fiber point."""
    _check_domain(norm, r)
    _guard_fiber(r, rho, phi)
    j = norm.jet(float(r), float(rho), float(phi), analytic)
    g11, g12, g22 = 0.5 * j.h_rr, 0.5 * j.h_rp, 0.5 * j.h_pp
    det = g11 * g22 - g12 * g12
    scale = max(abs(g11), abs(g22), 1e-300)
    if not (g11 > 0 and det > tol * scale * scale):
        raise NotPositiveDefinite(f"g = [[{g11}, {g12}], [{g12}, {g22}]] at r={r}, y=({rho}, {phi})")
    return MetricTensor2(g11, g12, g22, det)


def spray_coefficients(norm: FinslerNorm, r, rho, phi, analytic: bool | None = None) -> SprayCoefficients:
    """G^i = 1/4 g^{il} (y^k d_k d_{y^l} F^2 - d_l F^2)."""
    g = metric_tensor(norm, r, rho, phi, analytic)
    j = norm.jet(float(r), float(rho), float(phi), analytic)
    b = np.array([rho * j.m_rho - j.dr, rho * j.m_phi])
    G = 0.25 * g.inverse() @ b
    return SprayCoefficients(float(G[0]), float(G[1]))


def fiber_sup(ratio: Callable, n_scan: int = 64, xatol: float = 1e-10):
    """Maximize a 2 pi periodic function of the fiber angle.

    A coarse scan brackets the global maximum; bounded Brent refines it.
    Returns ``(max_value, argmax_angle)``.
    """
    alpha = 2 * np.pi * np.arange(n_scan) / n_scan
    vals = np.asarray(ratio(alpha), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise OptimizationNoConverge("non-finite values during the fiber scan")
    k = int(np.argmax(vals))
    step = 2 * np.pi / n_scan
    res = minimize_scalar(lambda a: -float(ratio(np.array([a]))[0]),
                          bounds=(alpha[k] - step, alpha[k] + step), method="bounded",
                          options={"xatol": xatol, "maxiter": 200})
    if not res.success:
        raise OptimizationNoConverge(res.message)
    best = -res.fun
    if best < vals[k]:
        return float(vals[k]), float(alpha[k])
    return float(best), float(res.x)


def co_norm(norm: FinslerNorm, r, p_r, p_theta, n_scan: int = 64) -> float:
    """F*(x, w) = sup_{F(x, y) = 1} w(y) for the covector w = p_r dr + p_theta dtheta."""
    _check_domain(norm, r)
    if p_r == 0 and p_theta == 0:
        return 0.0

    def ratio(a):
        ca, sa = np.cos(a), np.sin(a)
        return (p_r * ca + p_theta * sa / r) / norm(r, ca, sa / r)

    return fiber_sup(ratio, n_scan)[0]


def legendre_norm_from_conorm(conorm: Callable, r, rho, phi, n_scan: int = 64) -> float:
    """F(x, y) = sup_w w(y) / F*(x, w) for a fiberwise convex co-norm.

    ``conorm(r, p_r, p_theta)`` must accept arrays of covectors.
    """
    if rho == 0 and phi == 0:
        return 0.0

    def ratio(a):
        ca, sa = np.cos(a), np.sin(a)
        return (ca * rho + sa * r * phi) / conorm(r, ca, r * sa)

    return fiber_sup(ratio, n_scan)[0]


# ---------------------------------------------------------------------------
# axiom diagnostics
# ---------------------------------------------------------------------------

@dataclass
class AxiomCheck:
    name: str
    passed: bool
    worst: float
    tolerance: float
    where: tuple = ()
    required: bool = True

    def to_json(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "worst": float(self.worst),
                "tolerance": float(self.tolerance), "required": self.required,
                "where": [float(x) for x in self.where]}


@dataclass
class AxiomReport:
    checks: list
    sample_count: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"pass": self.passed, "samples": self.sample_count,
                "checks": [c.to_json() for c in self.checks]}


def check_axioms(norm: FinslerNorm, sample_count: int = 200, seed: int = 0,
                 tol: float = 1e-9, definiteness_tol: float = 1e-8) -> AxiomReport:
    """Randomized check of homogeneity, reversibility, positivity and convexity.

    Also reports (not required) the mirror symmetry F(r, rho, -phi) = F(r, rho, phi)
    that makes tangential geodesics symmetric about their lowest point.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    r = rng.uniform(norm.R, 1.0, sample_count)
    beta = rng.uniform(0, 2 * np.pi, sample_count)
    mag = np.exp(rng.uniform(np.log(0.1), np.log(10.0), sample_count))
    rho = mag * np.cos(beta)
    phi = mag * np.sin(beta) / r
    F = np.asarray(norm(r, rho, phi), dtype=float)

    checks = []

    def worst_of(err, name, tol_, required=True):
        k = int(np.argmax(err))
        checks.append(AxiomCheck(name, bool(err[k] <= tol_), float(err[k]), tol_,
                                 (r[k], rho[k], phi[k]), required))

    pos = F / mag
    k = int(np.argmin(pos))
    checks.append(AxiomCheck("positivity", bool(np.all(pos > 0) and np.all(np.isfinite(pos))),
                             float(pos[k]), 0.0, (r[k], rho[k], phi[k])))
    hom = np.zeros(sample_count)
    for lam in (0.5, 2.0, 10.0):
        Fl = np.asarray(norm(r, lam * rho, lam * phi), dtype=float)
        hom = np.maximum(hom, np.abs(Fl - lam * F) / (lam * F))
    worst_of(hom, "homogeneity", tol)
    Fm = np.asarray(norm(r, -rho, -phi), dtype=float)
    worst_of(np.abs(Fm - F) / F, "reversibility", tol)
    Fmir = np.asarray(norm(r, rho, -phi), dtype=float)
    worst_of(np.abs(Fmir - F) / F, "mirror_symmetry", tol, required=False)

    j = norm.jet(r, rho, phi)
    h_rr, h_rp, h_pp = (np.asarray(x) for x in (j.h_rr, j.h_rp, j.h_pp))
    # eigenvalues of the Hessian in the orthonormal frame (rho, r phi)
    a, b, c = h_rr, h_rp / r, h_pp / (r * r)
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    lo = (mean - rad) / np.maximum(mean + rad, 1e-300)
    k = int(np.argmin(lo))
    checks.append(AxiomCheck("convexity", bool(lo[k] > definiteness_tol), float(lo[k]),
                             definiteness_tol, (r[k], rho[k], phi[k])))
    euler = np.abs(0.5 * (h_rr * rho ** 2 + 2 * h_rp * rho * phi + h_pp * phi ** 2) - F ** 2) / F ** 2
    worst_of(euler, "euler_relation", max(tol, 1e-6), required=False)
    return AxiomReport(checks, sample_count)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def norm_from_json(obj: dict) -> FinslerNorm:
    """Build a norm from ``{"family": ..., "R": ..., family parameters}``."""
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError("norm description must be an object with a 'family' key")
    fam = obj["family"]
    if fam not in _FAMILIES:
        if fam == "ElasticDerived":
            from . import elastic  # noqa: F401  registers the family
        else:
            raise ConfigError(f"unknown norm family {fam!r}")
    try:
        return _FAMILIES[fam](obj)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for family {fam}: {exc}") from exc


def _radius(obj) -> float:
    R = float(obj["R"])
    if not 0.0 < R < 1.0:
        raise ConfigError(f"inner radius must lie in (0, 1), got {R}")
    return R


@register_family("RadialRiemannian")
def _load_radial(obj):
    return RadialRiemannian(_radius(obj), profile_from_json(obj.get("c", 1.0)))


@register_family("AnisotropicSpeed")
def _load_aniso(obj):
    return AnisotropicSpeed(_radius(obj), harmonics=tuple(profile_from_json(h) for h in obj["harmonics"]))


@register_family("TabulatedFiber")
def _load_tab(obj):
    return TabulatedFiber(_radius(obj), np.asarray(obj["r"], float), np.asarray(obj["values"], float))


@register_family("Conformal")
def _load_conformal(obj):
    return ConformalNorm(norm_from_json(obj["base"]), profile_from_json(obj["factor"]))
