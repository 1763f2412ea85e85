"""First variation of boundary distances under a conformal change.

For F_s = (1 + s f) F_0 the s-derivative of the distance between two
boundary points equals the ray transform of f along the connecting
geodesic of F_0.

    python demo/04_linearization.py
"""
import numpy as np

from finsler_xray import AnisotropicSpeed, verify_conformal_linearization
from finsler_xray.profiles import Polynomial

norm = AnisotropicSpeed(0.3, harmonics=[[1.0, 0.15], [0.0, -0.15]])
f = Polynomial((1.0, -1.0))

print(f"{'dtheta':>7} {'r0':>8} {'d/ds d':>14} {'I f':>14} {'rel err':>9}")
for row in verify_conformal_linearization(norm, f, np.linspace(0.3, 2.4, 6), step=1e-4):
    print(f"{row.delta_theta:7.3f} {row.r0:8.5f} {row.lhs:14.10f} {row.rhs:14.10f} {row.rel_err:9.1e}")

print("\ncentral-difference error under step halving (dtheta = 1.5):")
prev = None
for h in (0.1, 0.05, 0.025):
    row = verify_conformal_linearization(norm, f, [1.5], step=h)[0]
    err = abs(row.lhs - row.rhs)
    print(f"  step {h:6.3f}: error {err:.3e}" + (f"  ratio {prev / err:.2f}" if prev else ""))
    prev = err
