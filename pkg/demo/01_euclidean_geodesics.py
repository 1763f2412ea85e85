"""Tangential geodesics of the flat annulus against their closed forms.

Lines tangent to the circle r = r0 have angular advance arccos(r0 / r),
radial speed sqrt(r^2 - r0^2) / r and half-length sqrt(1 - r0^2).

    python demo/01_euclidean_geodesics.py
"""
import numpy as np

from finsler_xray import RadialRiemannian, check_herglotz, integrate_along, trace_tangential

norm = RadialRiemannian(0.3)
print("Herglotz margin:", check_herglotz(norm).min_margin)

print(f"{'r0':>6} {'T':>12} {'T exact':>12} {'omega err':>10} {'K err':>10} {'I(1/r) err':>10}")
for r0 in (0.3, 0.5, 0.7, 0.9, 0.99):
    rec = trace_tangential(norm, r0)
    r = np.linspace(r0, 1.0, 101)
    _, om, K, _ = rec.at_radius(r)
    T = np.sqrt(1 - r0 ** 2)
    inv_r = integrate_along(rec, lambda s: 1.0 / s[0])
    print(f"{r0:6.2f} {rec.T:12.9f} {T:12.9f} "
          f"{np.max(np.abs(om - np.arccos(r0 / r))):10.1e} "
          f"{np.max(np.abs(K - r / np.sqrt(r + r0))):10.1e} "
          f"{abs(inv_r - 2 * np.arcsinh(T / r0)):10.1e}")
