"""Angular Fourier decomposition, forward ray transforms and reconstruction.

A function on the annulus is stored by its angular Fourier modes
``f(r, theta) = sum_k a_k(r) exp(i k theta)``.  Tangential geodesics are
indexed by their lowest point ``(r0, theta0)``; by spherical symmetry all
geodesics with the same ``r0`` are rotations of one trace, and the mode-k
component of the data is ``2 exp(i k theta0) A_k a_k(r0)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .abel import AbelKernel, abel_rows, build_kernel, discretize_modes, invert
from .errors import AliasWarning, GridMismatch
from .geodesics import GeodesicRecord, integrate_along, trace_tangential
from .norms import FinslerNorm
from .profiles import as_profile, profile_from_json

__all__ = [
    "AnnulusFunction",
    "Sinogram",
    "decompose",
    "forward_direct",
    "forward_direct_sinogram",
    "forward_abel",
    "forward_abel_ray",
    "reconstruct",
    "relative_l2_error",
    "Pipeline",
]


@dataclass
class AnnulusFunction:
    """Modes ``coeffs[k + k_max]`` sampled on the radial grid ``r``.

    ``exact`` optionally maps k to a callable profile used for pointwise
    evaluation (synthetic inputs); otherwise modes are cubic splines of the
    samples.
    """

    r: np.ndarray
    coeffs: np.ndarray
    real_valued: bool = True
    exact: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != self.r.size or self.coeffs.shape[0] % 2 == 0:
            raise GridMismatch("coeffs must have shape (2 k_max + 1, len(r))")
        self._splines: dict = {}

    @property
    def k_max(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def mode(self, k: int) -> np.ndarray:
        return self.coeffs[k + self.k_max]

    def mode_values(self, k: int, r) -> np.ndarray:
        if abs(k) > self.k_max:
            return np.zeros(np.shape(r), dtype=complex)
        if self.exact is not None and k in self.exact:
            return np.asarray(self.exact[k](r), dtype=complex)
        if k not in self._splines:
            self._splines[k] = CubicSpline(self.r, self.mode(k))
        return self._splines[k](r)

    def mode_matrix(self, r) -> np.ndarray:
        """a_k(r) for all modes, shape (len(r), 2 k_max + 1)."""
        r = np.asarray(r, dtype=float)
        return np.stack([self.mode_values(int(k), r) for k in self.modes], axis=-1)

    def __call__(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        a = self.mode_matrix(r.ravel())
        val = np.sum(a * np.exp(1j * np.outer(theta.ravel(), self.modes)), axis=1).reshape(r.shape)
        return val.real if self.real_valued else val

    def synthesize(self, n_theta: int) -> tuple:
        """Values on the tensor grid (r, theta_j = 2 pi j / n_theta)."""
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
        vals = self.coeffs.T @ np.exp(1j * np.outer(self.modes, theta))
        return theta, (vals.real if self.real_valued else vals)

    def rotated(self, dtheta: float) -> "AnnulusFunction":
        """f(r, theta - dtheta)."""
        phase = np.exp(-1j * self.modes * dtheta)[:, None]
        exact = None
        if self.exact is not None:
            exact = {k: (lambda r, g=g, p=np.exp(-1j * k * dtheta): p * np.asarray(g(r))) for k, g in self.exact.items()}
        return AnnulusFunction(self.r, self.coeffs * phase, self.real_valued, exact)

    def l2_norm(self) -> float:
        """L^2 norm with the area measure r dr dtheta (Parseval over modes)."""
        dens = np.sum(np.abs(self.coeffs) ** 2, axis=0) * self.r
        return float(np.sqrt(2 * np.pi * np.trapezoid(dens, self.r)))

    def __sub__(self, other: "AnnulusFunction") -> "AnnulusFunction":
        if other.r.shape != self.r.shape or np.any(other.r != self.r):
            raise GridMismatch("functions live on different radial grids")
        k = max(self.k_max, other.k_max)
        out = np.zeros((2 * k + 1, self.r.size), dtype=complex)
        out[k - self.k_max: k + self.k_max + 1] += self.coeffs
        out[k - other.k_max: k + other.k_max + 1] -= other.coeffs
        return AnnulusFunction(self.r, out, self.real_valued and other.real_valued)

    @classmethod
    def zero(cls, r, k_max: int = 0) -> "AnnulusFunction":
        r = np.asarray(r, float)
        return cls(r, np.zeros((2 * k_max + 1, r.size)), True, {})

    @classmethod
    def from_terms(cls, r, terms: Sequence[dict], k_max: int | None = None) -> "AnnulusFunction":
        """Real function ``sum profile(r) cos(k theta)`` or ``sin(k theta)`` per term.

        Each term is ``{"k": int, "profile": profile, "phase": "cos" | "sin"}``.
        """
        r = np.asarray(r, dtype=float)
        ks = [abs(int(t["k"])) for t in terms]
        km = max(ks + [0]) if k_max is None else int(k_max)
        if any(k > km for k in ks):
            raise GridMismatch("term mode exceeds k_max")
        parts: dict = {}
        for t in terms:
            k = abs(int(t["k"]))
            prof = profile_from_json(t["profile"]) if isinstance(t["profile"], (dict, list)) else as_profile(t["profile"])
            phase = t.get("phase", "cos")
            if phase not in ("cos", "sin"):
                raise ValueError(f"phase must be 'cos' or 'sin', got {phase!r}")
            if k == 0:
                if phase == "cos":
                    parts.setdefault(0, []).append((1.0, prof))
                continue
            c = 0.5 if phase == "cos" else -0.5j
            parts.setdefault(k, []).append((c, prof))
            parts.setdefault(-k, []).append((np.conj(c), prof))
        exact = {k: (lambda x, lst=lst: sum(c * np.asarray(p(x), dtype=complex) for c, p in lst))
                 for k, lst in parts.items()}
        coeffs = np.zeros((2 * km + 1, r.size), dtype=complex)
        for k, g in exact.items():
            coeffs[k + km] = g(r)
        return cls(r, coeffs, True, exact)

    def to_csv(self, path, n_theta: int = 64) -> None:
        theta, vals = self.synthesize(n_theta)
        rr, tt = np.meshgrid(self.r, theta, indexing="ij")
        np.savetxt(path, np.column_stack([rr.ravel(), tt.ravel(), np.real(vals).ravel()]),
                   delimiter=",", fmt="%.17g", header="r,theta,value", comments="")


def relative_l2_error(estimate: AnnulusFunction, truth: AnnulusFunction) -> float:
    ref = truth.l2_norm()
    return (estimate - truth).l2_norm() / (ref if ref > 0 else 1.0)


def decompose(values: np.ndarray, r: np.ndarray, k_max: int | None = None,
              real_valued: bool = True) -> AnnulusFunction:
    """Angular DFT of samples on a (r, uniform theta) tensor grid."""
    values = np.asarray(values)
    n_theta = values.shape[1]
    if k_max is None:
        k_max = (n_theta - 2) // 2
    if n_theta < 2 * k_max + 2:
        raise GridMismatch(f"need at least {2 * k_max + 2} angles for k_max = {k_max}")
    spectrum = np.fft.fft(values, axis=1) / n_theta
    ks = np.arange(-k_max, k_max + 1)
    coeffs = spectrum[:, ks % n_theta].T
    total = np.sum(np.abs(spectrum) ** 2)
    top = np.sum(np.abs(coeffs[[0, -1]]) ** 2) if k_max > 0 else 0.0
    if total > 0 and top > 0.01 * total:
        warnings.warn(f"mode |k| = {k_max} carries {top / total:.1%} of the energy", AliasWarning, stacklevel=2)
    return AnnulusFunction(r, coeffs, real_valued)


@dataclass
class Sinogram:
    """Ray-transform data indexed by lowest points; ``values[i, j]`` at (r0[i], theta0[j])."""

    r0: np.ndarray
    theta0: np.ndarray
    values: np.ndarray

    def modes(self, k_max: int) -> np.ndarray:
        """d_k(r0) for k = -k_max..k_max, shape (2 k_max + 1, len(r0))."""
        n = self.theta0.size
        if n < 2 * k_max + 2:
            raise GridMismatch(f"need at least {2 * k_max + 2} angles for k_max = {k_max}")
        spectrum = np.fft.fft(self.values, axis=1) / n
        ks = np.arange(-k_max, k_max + 1)
        # correct for a grid that does not start at theta = 0
        return spectrum[:, ks % n].T * np.exp(-1j * ks * self.theta0[0])[:, None]

    def to_csv(self, path) -> None:
        rr, tt = np.meshgrid(self.r0, self.theta0, indexing="ij")
        np.savetxt(path, np.column_stack([rr.ravel(), tt.ravel(), np.real(self.values).ravel()]),
                   delimiter=",", fmt="%.17g", header="r0,theta0,value", comments="")

    @classmethod
    def from_csv(cls, path) -> "Sinogram":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        r0 = np.unique(data[:, 0])
        th = np.unique(data[:, 1])
        if r0.size * th.size != data.shape[0]:
            raise GridMismatch("sinogram CSV is not a tensor grid")
        order = np.lexsort((data[:, 1], data[:, 0]))
        return cls(r0, th, data[order, 2].reshape(r0.size, th.size))


def _along_values(f, theta0: np.ndarray):
    """Integrand factory: values of f along the curve for every theta0 shift."""
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if isinstance(f, AnnulusFunction):
        phase = np.exp(1j * np.outer(f.modes, theta0))

        def integrand(state):
            a = f.mode_matrix(state[0]) * np.exp(1j * np.outer(state[1], f.modes))
            out = a @ phase
            return out.real if f.real_valued else out
    else:
        def integrand(state):
            return f(state[0][:, None], state[1][:, None] + theta0[None, :])
    return integrand


def forward_direct(norm: FinslerNorm, f, r0: float, theta0, record: GeodesicRecord | None = None,
                   **trace_kw) -> np.ndarray:
    """Integral of f over the tangential geodesic(s) with lowest point (r0, theta0).

    ``f`` is an :class:`AnnulusFunction` or a vectorized callable f(r, theta).
    ``theta0`` may be an array; all rotations share one trace.
    """
    if record is None:
        record = trace_tangential(norm, r0, 0.0, **trace_kw)
    base = record.rotated(0.0)
    out = integrate_along(base, _along_values(f, theta0))
    return out if np.ndim(theta0) else out[0]


def forward_direct_sinogram(kernel: AbelKernel, f, theta0: np.ndarray) -> Sinogram:
    """Direct path integrals for every grid r0 (reusing the kernel's traces)."""
    vals = np.zeros((kernel.grid.size, theta0.size))
    for i, rec in enumerate(kernel.records):
        if rec is not None:
            vals[i] = forward_direct(kernel.norm, f, rec.r0, theta0, record=rec)
    return Sinogram(kernel.grid, np.asarray(theta0, float), vals)


def _check_grid(f: AnnulusFunction, grid: np.ndarray):
    if f.r.shape != grid.shape or np.max(np.abs(f.r - grid)) > 1e-14:
        raise GridMismatch("function and operators are sampled on different radial grids")


def forward_abel(operators: dict, f: AnnulusFunction, theta0: np.ndarray) -> Sinogram:
    """If(r0, theta0) = sum_k 2 exp(i k theta0) (A_k a_k)(r0) on the operator grid."""
    grid = operators[0].grid
    _check_grid(f, grid)
    if f.k_max > max(operators):
        raise GridMismatch(f"operators only up to k={max(operators)}, function has k_max={f.k_max}")
    d = np.stack([2.0 * operators[abs(int(k))].apply(f.mode(int(k))) for k in f.modes])
    vals = d.T @ np.exp(1j * np.outer(f.modes, theta0))
    return Sinogram(grid, np.asarray(theta0, float), vals.real if f.real_valued else vals)


def forward_abel_ray(record: GeodesicRecord, f: AnnulusFunction, theta0) -> np.ndarray:
    """Abel-reduced data at an arbitrary lowest point (off-grid rows)."""
    ks = f.modes
    rows = abel_rows(record, f.r, np.abs(ks))
    d = np.array([2.0 * rows[j] @ f.mode(int(k)) for j, k in enumerate(ks)])
    vals = np.exp(1j * np.outer(np.atleast_1d(theta0), ks)) @ d
    vals = vals.real if f.real_valued else vals
    return vals if np.ndim(theta0) else vals[0]


def reconstruct(operators: dict, sinogram: Sinogram, k_max: int | None = None, lam: float | None = None,
                noise: float | None = None, real_valued: bool = True) -> AnnulusFunction:
    """Fourier analysis in theta0, per-mode Abel inversion of d_k / 2, resynthesis.

    ``noise`` is the expected norm (over the radial grid) of the error in
    each mode's data d_k / 2; it selects lam by the discrepancy principle.
    For white noise of total norm delta on an n_theta grid this is
    ``delta / (2 n_theta)``.
    """
    grid = operators[0].grid
    if sinogram.r0.shape != grid.shape or np.max(np.abs(sinogram.r0 - grid)) > 1e-12:
        raise GridMismatch("sinogram radii do not match the operator grid")
    if k_max is None:
        k_max = min(max(operators), (sinogram.theta0.size - 2) // 2)
    d = sinogram.modes(k_max)
    coeffs = np.zeros_like(d)
    for idx, k in enumerate(range(-k_max, k_max + 1)):
        if real_valued and k < 0:
            continue
        res = invert(operators[abs(k)], 0.5 * d[idx], lam=lam, noise=noise)
        coeffs[idx] = res.values
        if real_valued and k > 0:
            coeffs[k_max - k] = np.conj(res.values)
    if real_valued:
        coeffs[k_max] = coeffs[k_max].real
    return AnnulusFunction(grid, coeffs, real_valued)


class Pipeline:
    """Traces and Abel operators on a uniform radial grid, built once and reused."""

    def __init__(self, norm: FinslerNorm, n_r: int = 256, k_max: int = 16, n_theta: int | None = None,
                 quad_tol: float = 1e-9, **trace_kw):
        self.norm = norm
        self.k_max = int(k_max)
        self.n_theta = int(n_theta) if n_theta is not None else 2 * self.k_max + 2
        if self.n_theta < 2 * self.k_max + 2:
            raise GridMismatch(f"n_theta must be at least {2 * self.k_max + 2}")
        self.grid = np.linspace(norm.R, 1.0, int(n_r))
        self.theta0 = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.kernel = build_kernel(norm, self.grid, **trace_kw)
        self.operators = discretize_modes(self.kernel, self.k_max, tol=quad_tol)

    def function(self, terms: Sequence[dict]) -> AnnulusFunction:
        return AnnulusFunction.from_terms(self.grid, terms, self.k_max)

    def forward_direct(self, f) -> Sinogram:
        return forward_direct_sinogram(self.kernel, f, self.theta0)

    def forward_abel(self, f: AnnulusFunction) -> Sinogram:
        return forward_abel(self.operators, f, self.theta0)

    def reconstruct(self, sinogram: Sinogram, lam: float | None = None, noise: float | None = None):
        return reconstruct(self.operators, sinogram, self.k_max, lam=lam, noise=noise)

    def roundtrip(self, f: AnnulusFunction, lam: float | None = None) -> dict:
        sino = self.forward_direct(f)
        rec = self.reconstruct(sino, lam=lam)
        return {"sinogram": sino, "reconstruction": rec, "rel_l2": relative_l2_error(rec, f)}
