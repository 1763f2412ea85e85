"""Generalized Abel transforms with geodesic kernels.

For a tangential geodesic with lowest point ``x`` the Fourier mode ``k`` of
the ray transform reduces to

    A_k h(x) = int_x^1 (y - x)^(-1/2) K(x, y) cos(k omega(x, y)) h(y) dy,

with ``K = sqrt(y - x) / rdot``.  Substituting ``y = x + u^2`` turns the
integrand into ``2 K cos(k omega) h = t'(u) cos(k omega) h``, which is smooth,
so rows are assembled by Gauss-Legendre product integration against a local
cubic interpolant of ``h``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateTrace, GridMismatch, QuadratureNoConverge, SolveFailure
from .geodesics import GeodesicRecord, trace_many
from .herglotz import TurningAcceleration
from .norms import FinslerNorm

__all__ = [
    "KernelRow",
    "AbelKernel",
    "AbelOperator",
    "InversionResult",
    "kernel_from_trace",
    "build_kernel",
    "forward_general",
    "abel_rows",
    "discretize",
    "discretize_modes",
    "invert",
    "second_difference",
]

ROW_TOL = 1e-9


@dataclass
class KernelRow:
    r0: float
    r: np.ndarray
    K: np.ndarray
    omega: np.ndarray
    diagonal: float

    def mode(self, k: int) -> np.ndarray:
        """Samples of K cos(k omega)."""
        return self.K * np.cos(k * self.omega)


def kernel_from_trace(record: GeodesicRecord, accel: TurningAcceleration | None = None,
                      threshold: float = 1e-6) -> KernelRow:
    """K = sqrt(r - r0) / rdot on the record's sample radii, with the diagonal limit near r0."""
    accel = accel or record.accel
    r, _, w, rdot = record.samples.T
    gap = r - record.r0
    off = gap >= threshold
    if np.any(rdot[off] <= 0):
        raise DegenerateTrace(f"rdot vanishes off the diagonal for r0={record.r0}")
    K = np.empty_like(r)
    K[off] = np.sqrt(gap[off]) / rdot[off]
    K[~off] = accel.diagonal_kernel
    return KernelRow(record.r0, r.copy(), K, w.copy(), accel.diagonal_kernel)


@dataclass
class AbelKernel:
    """Kernel data on a radial grid: one tangential trace per grid radius below 1."""

    grid: np.ndarray
    records: list
    norm: FinslerNorm | None = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 4 or np.any(np.diff(self.grid) <= 0):
            raise GridMismatch("grid must be increasing with at least 4 points")
        if len(self.records) != self.grid.size:
            raise GridMismatch("need one record (or None at r = 1) per grid radius")
        for x, rec in zip(self.grid, self.records):
            if rec is None:
                if x < 1.0:
                    raise GridMismatch(f"missing trace at grid radius {x}")
            elif abs(rec.r0 - x) > 1e-12:
                raise GridMismatch(f"trace at r0={rec.r0} does not match grid radius {x}")
        self._cache: dict = {}

    def row(self, i: int) -> KernelRow | None:
        rec = self.records[i]
        return None if rec is None else kernel_from_trace(rec)


def build_kernel(norm: FinslerNorm, grid: Sequence[float], **trace_kw) -> AbelKernel:
    grid = np.asarray(grid, dtype=float)
    if abs(grid[-1] - 1.0) > 1e-14:
        raise GridMismatch("the radial grid must end at r = 1")
    recs = trace_many(norm, grid[:-1], **trace_kw)
    return AbelKernel(grid, recs + [None], norm)


def forward_general(kernel: Callable, alpha: float, h: Callable, x: float, n: int = 16,
                    n_max: int = 1024, tol: float = 1e-12) -> float:
    """int_x^1 (y - x)^(-alpha) kernel(x, y) h(y) dy via u = (y - x)^(1 - alpha).

    The transformed integrand ``kernel h / (1 - alpha)`` is integrated with
    Gauss-Legendre at n and 2n nodes; n doubles until they agree.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if x >= 1.0:
        return 0.0
    beta = 1.0 - alpha
    U = (1.0 - x) ** beta

    def rule(m):
        g, w = np.polynomial.legendre.leggauss(m)
        u = 0.5 * U * (g + 1.0)
        y = x + u ** (1.0 / beta)
        vals = np.asarray(kernel(x, y), dtype=float) * np.asarray(h(y), dtype=float)
        return 0.5 * U * float(np.dot(w, np.broadcast_to(vals, u.shape))) / beta

    prev = rule(n)
    while n < n_max:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureNoConverge(f"Abel integral at x={x} did not converge with {n} nodes")


def _lagrange(nodes: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lagrange basis on per-row stencil nodes evaluated at y."""
    p = nodes.shape[1]
    out = np.ones(nodes.shape)
    for a in range(p):
        for b in range(p):
            if a != b:
                out[:, a] *= (y - nodes[:, b]) / (nodes[:, a] - nodes[:, b])
    return out


def _row_nodes(record: GeodesicRecord, grid: np.ndarray, m: int, k_max: int, i_low: int | None = None):
    """Gauss nodes of the product-integration rule for the row at x = record.r0.

    Returns (stencil columns, basis values, base weights, omega) per node.
    """
    x = record.r0
    n = grid.size
    c = int(np.searchsorted(grid, x, side="right") - 1)
    c = min(max(c, 0), n - 2)
    lo = c if i_low is None else i_low
    # the last rows see fewer than 4 samples at or above x: lower the order
    p = min(4, n - lo)
    ya = np.maximum(grid[c:-1], x)
    yb = grid[c + 1:]
    keep = yb > ya
    ya, yb = ya[keep], yb[keep]
    cells = np.arange(c, n - 1)[keep]
    ua = np.sqrt(ya - x)
    ub = np.sqrt(yb - x)
    dw = np.abs(record.omega_of_u(ub) - record.omega_of_u(ua))
    n_sub = np.maximum(1, np.ceil(k_max * dw / (np.pi / 4))).astype(int)
    # split panels so that k omega varies by at most pi/4 on each
    sub_cells = np.repeat(cells, n_sub)
    starts = np.concatenate([np.linspace(a, b, s + 1)[:-1] for a, b, s in zip(ua, ub, n_sub)])
    ends = np.concatenate([np.linspace(a, b, s + 1)[1:] for a, b, s in zip(ua, ub, n_sub)])
    g, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (ends - starts)
    u = (0.5 * (ends + starts))[:, None] + half[:, None] * g
    wt = half[:, None] * w
    cell = np.repeat(sub_cells, m)
    u = u.ravel()
    wt = wt.ravel()
    y = x + u * u
    s = np.clip(cell - 1, lo, n - p)
    cols = s[:, None] + np.arange(p)
    basis = _lagrange(grid[cols], y)
    base = wt * record.dt_du(u)
    return cols, basis, base, record.omega_of_u(u)


def _assemble(nodes, n: int, ks: np.ndarray) -> np.ndarray:
    cols, basis, base, omega = nodes
    rows = np.zeros((ks.size, n))
    trig = np.cos(np.outer(ks, omega)) * base
    for a in range(cols.shape[1]):
        for j, kw in enumerate(trig):
            rows[j] += np.bincount(cols[:, a], kw * basis[:, a], minlength=n)
    return rows


def abel_rows(record: GeodesicRecord, grid: np.ndarray, ks: Sequence[int], m: int = 6,
              tol: float = ROW_TOL, i_low: int | None = None, max_level: int = 4) -> np.ndarray:
    """Rows (len(ks), n) of A_k at x = record.r0 acting on grid samples of h.

    Each row is integrated with m and 2m Gauss nodes per panel; m doubles
    until the two agree to ``tol`` relative to the row size.
    """
    ks = np.abs(np.asarray(ks, dtype=int))
    k_max = int(ks.max()) if ks.size else 0
    n = grid.size
    prev = _assemble(_row_nodes(record, grid, m, k_max, i_low), n, ks)
    for _ in range(max_level):
        m *= 2
        cur = _assemble(_row_nodes(record, grid, m, k_max, i_low), n, ks)
        scale = max(np.abs(cur).sum(axis=1).max(), 1e-300)
        if np.abs(cur - prev).sum(axis=1).max() <= tol * scale:
            return cur
        prev = cur
    raise QuadratureNoConverge(f"Abel row at x={record.r0} did not converge (m={m})")


@dataclass
class AbelOperator:
    """Matrix M with (M h)_i ~ A_k h(x_i); M[i, j] = 0 for x_j < x_i."""

    k: int
    grid: np.ndarray
    matrix: np.ndarray
    alpha: float = 0.5

    def apply(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h)
        if h.shape[0] != self.grid.size:
            raise GridMismatch(f"expected {self.grid.size} samples, got {h.shape[0]}")
        return self.matrix @ h

    def sidecar(self) -> dict:
        return {"k": self.k, "alpha": self.alpha, "grid": self.grid.tolist()}

    def to_csv(self, path) -> None:
        np.savetxt(path, self.matrix, delimiter=",", fmt="%.17g")
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.sidecar(), fh, sort_keys=True)


def discretize_modes(kernel: AbelKernel, k_max: int, m: int = 6, tol: float = ROW_TOL) -> dict:
    """AbelOperators for k = 0..k_max (A_{-k} = A_k since the kernel is even in k)."""
    grid = kernel.grid
    n = grid.size
    ks = np.arange(k_max + 1)
    mats = np.zeros((k_max + 1, n, n))
    for i, rec in enumerate(kernel.records):
        if rec is None:
            continue
        mats[:, i, :] = abel_rows(rec, grid, ks, m=m, tol=tol, i_low=i)
    return {int(k): AbelOperator(int(k), grid, mats[k]) for k in ks}


def discretize(kernel: AbelKernel, k: int, m: int = 6) -> AbelOperator:
    """Product-integration matrix of A_k on the kernel grid."""
    key = (abs(int(k)), m)
    if key not in kernel._cache:
        grid = kernel.grid
        mat = np.zeros((grid.size, grid.size))
        for i, rec in enumerate(kernel.records):
            if rec is not None:
                mat[i] = abel_rows(rec, grid, [k], m=m, i_low=i)[0]
        kernel._cache[key] = AbelOperator(int(k), grid, mat)
    return kernel._cache[key]


def second_difference(n: int) -> np.ndarray:
    D = np.zeros((n - 2, n))
    idx = np.arange(n - 2)
    D[idx, idx] = 1.0
    D[idx, idx + 1] = -2.0
    D[idx, idx + 2] = 1.0
    return D


@dataclass
class InversionResult:
    values: np.ndarray
    lam: float
    residual: float


def _tikhonov(M, D, d, lam):
    A = np.vstack([M, math.sqrt(lam) * D])
    rhs = np.concatenate([d, np.zeros((D.shape[0],) + d.shape[1:], dtype=d.dtype)])
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < A.shape[1]:
        raise SolveFailure(f"regularized system is rank deficient (rank {rank} < {A.shape[1]})")
    return sol


def invert(op: AbelOperator, data: np.ndarray, lam: float | None = None,
           noise: float | None = None, tau: float = 1.1) -> InversionResult:
    """Minimize |M a - data|^2 + lam |D a|^2 with D the second difference.

    ``lam`` defaults to ``1e-8 |M|_F^2``.  If ``noise`` (the expected norm
    of the data error) is given, lam follows the discrepancy principle
    ``|M a - data| = tau * noise``.
    """
    M = op.matrix
    d = np.asarray(data)
    if d.shape[0] != M.shape[0]:
        raise GridMismatch(f"data has {d.shape[0]} samples, operator grid has {M.shape[0]}")
    cplx = np.iscomplexobj(d)
    if cplx:
        d = np.column_stack([d.real, d.imag])
    D = second_difference(M.shape[1])
    scale = float(np.sum(M * M))
    if noise is not None and noise > 0:
        def gap(s):
            a = _tikhonov(M, D, d, scale * 10.0 ** s)
            return float(np.linalg.norm(M @ a - d)) - tau * noise
        lo, hi = -16.0, 4.0
        if gap(lo) > 0:
            lam = scale * 10.0 ** lo
        elif gap(hi) < 0:
            lam = scale * 10.0 ** hi
        else:
            lam = scale * 10.0 ** brentq(gap, lo, hi, xtol=1e-3)
    elif lam is None:
        lam = 1e-8 * scale
    if lam <= 0:
        raise ValueError("regularization parameter must be positive")
    a = _tikhonov(M, D, d, lam)
    res = float(np.linalg.norm(M @ a - d))
    if cplx:
        a = a[:, 0] + 1j * a[:, 1]
    return InversionResult(a, float(lam), res)
