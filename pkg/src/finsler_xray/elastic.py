"""qP-wave Finsler norms from stiffness tensors.

The Christoffel matrix ``Gamma_il(p) = a_ijkl p_j p_k`` of the
density-normalized stiffness ``a = c / rho`` has a largest eigenvalue
``lambda_1``; ``sqrt(lambda_1)`` is a co-Finsler norm and its fiberwise
Legendre transform is the qP norm.

On the equatorial slice the covector ``p_r dr + p_theta dtheta`` has
components ``(p_r, p_theta / r, 0)`` in the orthonormal frame
``(e_r, e_theta, e_z)``, in which the stiffness profile is given.

The jet of ``F^2`` is obtained by duality rather than by differencing the
Legendre transform: with ``H = F^2 / 2`` and ``H* = F*^2 / 2``,
``d_y H = p``, ``Hess_y H = (Hess_p H*)^-1``, ``d_r H = -d_r H*`` and
``d_r d_y H = -(Hess_p H*)^-1 d_r d_p H*``, where ``p`` solves
``d_p H*(p) = y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DegenerateEigen, NotPositiveDefinite, NotReversible
from .norms import FinslerNorm, Jet, fd_jet, register_family
from .profiles import FunctionProfile, as_profile

__all__ = [
    "StiffnessTensor",
    "StiffnessProfile",
    "QpNormSlice",
    "ElasticDerived",
    "christoffel",
    "qp_conorm",
    "build_slice_norm",
    "conformal_family",
    "conformal_scaling",
    "voigt_to_tensor",
    "tensor_to_voigt",
]

_VOIGT = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (1, 2): 3, (2, 1): 3, (0, 2): 4, (2, 0): 4, (0, 1): 5, (1, 0): 5}
GAP_TOL = 1e-8


def voigt_to_tensor(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.shape != (6, 6):
        raise ConfigError(f"Voigt matrix must be 6x6, got {C.shape}")
    c = np.empty((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    c[i, j, k, l] = C[_VOIGT[i, j], _VOIGT[k, l]]
    return c


def tensor_to_voigt(c: np.ndarray) -> np.ndarray:
    C = np.empty((6, 6))
    for (i, j), a in _VOIGT.items():
        for (k, l), b in _VOIGT.items():
            C[a, b] = c[i, j, k, l]
    return C


def _symmetrize(c: np.ndarray) -> np.ndarray:
    """Average over the minor and major index symmetries."""
    perms = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
             (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]
    return sum(np.transpose(c, p) for p in perms) / len(perms)


@dataclass(frozen=True, eq=False)
class StiffnessTensor:
    """c_ijkl in the local orthonormal frame (e_r, e_theta, e_z) and density rho."""

    c: np.ndarray
    rho: float = 1.0
    asymmetry: float = field(default=0.0, init=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.shape != (3, 3, 3, 3):
            raise ConfigError(f"stiffness must have shape (3, 3, 3, 3), got {c.shape}")
        if not self.rho > 0:
            raise ConfigError("density must be positive")
        sym = _symmetrize(c)
        object.__setattr__(self, "asymmetry", float(np.linalg.norm(c - sym)))
        object.__setattr__(self, "c", sym)

    @property
    def a(self) -> np.ndarray:
        return self.c / self.rho

    @classmethod
    def from_voigt(cls, C, rho: float = 1.0) -> "StiffnessTensor":
        return cls(voigt_to_tensor(C), rho)

    @classmethod
    def isotropic(cls, lam: float, mu: float, rho: float = 1.0) -> "StiffnessTensor":
        d = np.eye(3)
        c = (lam * np.einsum("ij,kl->ijkl", d, d)
             + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)))
        return cls(c, rho)

    @classmethod
    def transversely_isotropic(cls, C11: float, C13: float, C33: float, C44: float, C66: float,
                               rho: float = 1.0, axis: int = 0) -> "StiffnessTensor":
        """Hexagonal symmetry with its symmetry axis along frame direction ``axis``."""
        C12 = C11 - 2 * C66
        V = np.array([
            [C11, C12, C13, 0, 0, 0],
            [C12, C11, C13, 0, 0, 0],
            [C13, C13, C33, 0, 0, 0],
            [0, 0, 0, C44, 0, 0],
            [0, 0, 0, 0, C44, 0],
            [0, 0, 0, 0, 0, C66],
        ], dtype=float)
        c = voigt_to_tensor(V)
        # move the symmetry axis from z to the requested direction
        perm = {2: [0, 1, 2], 0: [1, 2, 0], 1: [2, 0, 1]}[axis]
        P = np.eye(3)[perm]
        c = np.einsum("ai,bj,ck,dl,ijkl->abcd", P.T, P.T, P.T, P.T, c)
        return cls(c, rho)

    def to_json(self, r: float | None = None) -> dict:
        out = {"voigt": tensor_to_voigt(self.c).tolist(), "rho": self.rho}
        if r is not None:
            out["r"] = r
        return out


def christoffel(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Gamma_il = a_ijkl p_j p_k (batched over leading axes of a and p)."""
    return np.einsum("...ijkl,...j,...k->...il", a, p, p)


def _top_two(gamma: np.ndarray):
    w = np.linalg.eigvalsh(gamma)
    return w[..., -1], w[..., -2], w[..., 0], np.trace(gamma, axis1=-2, axis2=-1)


def qp_conorm(stiffness: StiffnessTensor, p, gap_tol: float = GAP_TOL) -> np.ndarray:
    """sqrt of the largest Christoffel eigenvalue."""
    p = np.asarray(p, dtype=float)
    l1, l2, l3, tr = _top_two(christoffel(stiffness.a, p))
    if np.any(l1 - l2 < gap_tol * tr):
        raise DegenerateEigen("largest Christoffel eigenvalue is not simple")
    if np.any(l3 <= 0):
        raise NotPositiveDefinite("Christoffel matrix is not positive definite")
    out = np.sqrt(l1)
    return float(out) if out.ndim == 0 else out


class StiffnessProfile:
    """Radius -> density-normalized stiffness a(r), cubic in r between nodes.

    Either nodes ``(r_i, StiffnessTensor_i)`` or a callable ``fun(r) ->
    StiffnessTensor``; ``factor`` multiplies the whole tensor (conformal
    families).
    """

    def __init__(self, nodes: Sequence | None = None, fun: Callable | None = None, factor=None):
        if (nodes is None) == (fun is None):
            raise ConfigError("give either stiffness nodes or a function")
        self.fun = fun
        self.nodes = None
        self.factor = None if factor is None else as_profile(factor)
        if nodes is not None:
            nodes = sorted(nodes, key=lambda n: n[0])
            self.nodes = nodes
            r = np.array([n[0] for n in nodes], dtype=float)
            a = np.stack([n[1].a for n in nodes])
            if r.size == 1:
                self._const = a[0]
                self._spline = None
            else:
                bc = "not-a-knot" if r.size >= 4 else "natural"
                self._spline = CubicSpline(r, a.reshape(r.size, -1), axis=0, bc_type=bc)

    def a(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        if self.fun is not None:
            uniq, inv = np.unique(flat, return_inverse=True)
            vals = np.stack([self.fun(float(x)).a for x in uniq])[inv]
        elif self._spline is None:
            vals = np.broadcast_to(self._const, flat.shape + (3, 3, 3, 3))
        else:
            vals = self._spline(flat).reshape(flat.shape + (3, 3, 3, 3))
        if self.factor is not None:
            vals = vals * np.asarray(self.factor(flat), dtype=float).reshape(-1, 1, 1, 1, 1)
        return vals.reshape(r.shape + (3, 3, 3, 3))

    def scaled(self, factor) -> "StiffnessProfile":
        factor = as_profile(factor)
        if self.factor is not None:
            old, new = self.factor, factor
            factor = FunctionProfile(lambda r: old(r) * new(r))
        out = StiffnessProfile.__new__(StiffnessProfile)
        out.__dict__.update(self.__dict__)
        out.factor = factor
        return out

    def to_json(self) -> list:
        if self.nodes is None or self.factor is not None:
            raise TypeError("only node-based, unscaled profiles serialize to JSON")
        return [t.to_json(float(r)) for r, t in self.nodes]

    @classmethod
    def from_json(cls, items: Sequence[dict]) -> "StiffnessProfile":
        if not items:
            raise ConfigError("stiffness profile needs at least one node")
        return cls(nodes=[(float(it["r"]), StiffnessTensor.from_voigt(it["voigt"], float(it.get("rho", 1.0))))
                          for it in items])


@dataclass(eq=False)
class _ConormSquared:
    """F*^2(r, p_r, p_theta) = lambda_1 on the slice, shaped like a norm for fd_jet."""

    profile: StiffnessProfile
    R: float
    gap_tol: float = GAP_TOL

    def f2(self, r, p_r, p_theta):
        r, p_r, p_theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, p_r, p_theta)))
        phat = np.stack([p_r, p_theta / r, np.zeros_like(r)], axis=-1)
        l1, l2, l3, tr = _top_two(christoffel(self.profile.a(r), phat))
        if np.any(l1 - l2 < self.gap_tol * tr):
            raise DegenerateEigen("largest Christoffel eigenvalue is not simple on the slice")
        return l1


@dataclass(frozen=True, eq=False)
class QpNormSlice:
    profile: StiffnessProfile
    R: float

    def conorm(self, r, p_r, p_theta):
        return np.sqrt(_ConormSquared(self.profile, self.R).f2(r, p_r, p_theta))


@dataclass(frozen=True, eq=False)
class ElasticDerived(FinslerNorm):
    """Legendre transform of the qP co-norm of a stiffness profile."""

    R: float
    profile: StiffnessProfile
    n_scan: int = 16
    newton_iters: int = 30
    family = "ElasticDerived"

    @property
    def conorm_squared(self) -> _ConormSquared:
        return _ConormSquared(self.profile, self.R)

    @property
    def has_analytic(self) -> bool:
        return True

    def conorm(self, r, p_r, p_theta):
        return np.sqrt(self.conorm_squared.f2(r, p_r, p_theta))

    def legendre_point(self, r, rho, phi):
        """Covector p with d_p (F*^2 / 2) = y, and the F*^2 jet there."""
        r, rho, phi = np.broadcast_arrays(*(np.atleast_1d(np.asarray(x, dtype=float)) for x in (r, rho, phi)))
        cs = self.conorm_squared
        # coarse start: best unit covector direction, scaled to the supporting one
        alpha = 2 * np.pi * np.arange(self.n_scan) / self.n_scan
        ca, sa = np.cos(alpha), np.sin(alpha)
        pr, pt = ca[None, :] + 0 * r[:, None], r[:, None] * sa[None, :]
        fs = np.sqrt(cs.f2(np.broadcast_to(r[:, None], pr.shape), pr, pt))
        ratio = (pr * rho[:, None] + pt * phi[:, None]) / fs
        k = np.argmax(ratio, axis=1)
        idx = np.arange(r.size)
        F0 = ratio[idx, k]
        p = np.stack([pr[idx, k], pt[idx, k]]) * (F0 / fs[idx, k])
        # Newton on Phi(p) = F*^2(p)/2 - p.y, strictly convex
        for _ in range(self.newton_iters):
            j = fd_jet(cs, r, p[0], p[1])
            g1, g2 = 0.5 * j.g_rho - rho, 0.5 * j.g_phi - phi
            h11, h12, h22 = 0.5 * j.h_rr, 0.5 * j.h_rp, 0.5 * j.h_pp
            det = h11 * h22 - h12 * h12
            d1 = (h22 * g1 - h12 * g2) / det
            d2 = (-h12 * g1 + h11 * g2) / det
            p = p - np.stack([d1, d2])
            step = np.hypot(d1, d2 / r)
            if np.all(step <= 1e-13 * np.hypot(p[0], p[1] / r)):
                break
        j = fd_jet(cs, r, p[0], p[1])
        return p, j

    def f2(self, r, rho, phi):
        shape = np.broadcast(r, rho, phi).shape
        r_, rho_, phi_ = (np.broadcast_to(np.asarray(x, float), shape).ravel() for x in (r, rho, phi))
        out = np.zeros(r_.shape)
        nz = (rho_ != 0) | (phi_ != 0)
        if np.any(nz):
            p, j = self.legendre_point(r_[nz], rho_[nz], phi_[nz])
            # at the Legendre point F^2 = 2 (p.y - H*(p)) = p.y
            out[nz] = 2.0 * (p[0] * rho_[nz] + p[1] * phi_[nz]) - j.f2
        out = out.reshape(shape)
        return float(out) if out.ndim == 0 else out

    def analytic_jet(self, r, rho, phi) -> Jet:
        scalar = np.ndim(r) == 0 and np.ndim(rho) == 0 and np.ndim(phi) == 0
        p, j = self.legendre_point(r, rho, phi)
        rho_a, phi_a = np.broadcast_arrays(np.atleast_1d(rho).astype(float), np.atleast_1d(phi).astype(float))
        # Hess_y F^2 = 4 (Hess_p F*^2)^-1
        det = j.h_rr * j.h_pp - j.h_rp * j.h_rp
        i11, i12, i22 = j.h_pp / det, -j.h_rp / det, j.h_rr / det
        m_rho = -2.0 * (i11 * j.m_rho + i12 * j.m_phi)
        m_phi = -2.0 * (i12 * j.m_rho + i22 * j.m_phi)
        out = Jet(
            f2=2.0 * (p[0] * rho_a + p[1] * phi_a) - j.f2,
            dr=-j.dr,
            g_rho=2.0 * p[0],
            g_phi=2.0 * p[1],
            h_rr=4.0 * i11,
            h_rp=4.0 * i12,
            h_pp=4.0 * i22,
            m_rho=m_rho,
            m_phi=m_phi,
        )
        if scalar:
            out = Jet(*(float(x[0]) for x in out))
        return out

    def to_json(self) -> dict:
        return {"family": self.family, "R": self.R, "profile": self.profile.to_json()}


def build_slice_norm(profile: StiffnessProfile, R: float, n_r: int = 17, n_dirs: int = 256,
                     gap_tol: float = GAP_TOL) -> ElasticDerived:
    """Induced qP norm on the slice, after checking the eigenvalue gap and reversibility."""
    if not 0.0 < R < 1.0:
        raise ConfigError(f"inner radius must lie in (0, 1), got {R}")
    r = np.linspace(R, 1.0, n_r)
    alpha = 2 * np.pi * np.arange(n_dirs) / n_dirs
    rr, aa = np.meshgrid(r, alpha, indexing="ij")
    cs = _ConormSquared(profile, R, gap_tol)
    phat = np.stack([np.cos(aa), np.sin(aa), np.zeros_like(aa)], axis=-1)
    gam = christoffel(profile.a(rr), phat)
    l1, l2, l3, tr = _top_two(gam)
    gap = (l1 - l2) / tr
    if np.any(gap < gap_tol):
        k = np.unravel_index(int(np.argmin(gap)), gap.shape)
        raise DegenerateEigen(f"eigenvalue gap {gap[k]:.3g} at r={rr[k]:.6g}, angle={aa[k]:.6g}")
    if np.any(l3 <= 0):
        raise NotPositiveDefinite("Christoffel matrix not positive definite on the slice")
    plus = cs.f2(rr, np.cos(aa), rr * np.sin(aa))
    minus = cs.f2(rr, -np.cos(aa), -rr * np.sin(aa))
    rev = np.abs(plus - minus) / plus
    if np.any(rev > 1e-12):
        k = np.unravel_index(int(np.argmax(rev)), rev.shape)
        raise NotReversible(f"co-norm not reversible: worst at r={rr[k]:.6g}, angle={aa[k]:.6g}")
    return ElasticDerived(R, profile)


def conformal_family(profile: StiffnessProfile, f_s, s: float | None = None) -> StiffnessProfile:
    """Scaled profile c^s = f_s(r) c.  ``f_s`` is a profile, or a callable (s, r) when s is given."""
    if s is not None and callable(f_s) and not hasattr(f_s, "derivative"):
        fun = f_s
        factor = as_profile(lambda r: fun(s, r))
    else:
        factor = as_profile(f_s)
    return profile.scaled(factor)


def conformal_scaling(profile: StiffnessProfile, f_s, R: float, r, rho, phi) -> dict:
    """Ratio F_s / F of the induced norms of ``f_s c`` and ``c`` at the given fibers.

    Returns the ratio together with its maximal deviations from ``sqrt(f_s)``
    and from ``1 / sqrt(f_s)``.  Scaling the stiffness by ``f_s`` scales the
    co-norm by ``sqrt(f_s)``, and the fiberwise Legendre transform inverts
    that factor.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(as_profile(f_s)(r), dtype=float)
    if np.any(f <= 0):
        raise ConfigError("conformal factor must be positive")
    base = build_slice_norm(profile, R)
    scaled = build_slice_norm(conformal_family(profile, f_s), R)
    ratio = scaled(r, rho, phi) / base(r, rho, phi)
    return {
        "ratio": ratio,
        "dev_sqrt": float(np.max(np.abs(ratio - np.sqrt(f)))),
        "dev_inverse_sqrt": float(np.max(np.abs(ratio - 1.0 / np.sqrt(f)))),
    }


@register_family("ElasticDerived")
def _load_elastic(obj):
    R = float(obj["R"])
    return build_slice_norm(StiffnessProfile.from_json(obj["profile"]), R)
