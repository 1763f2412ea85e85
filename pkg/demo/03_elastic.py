"""qP-wave norms from stiffness tensors.

An isotropic medium with P-wave speed 2 - r gives the Riemannian norm
|y| / (2 - r).  A transversely isotropic medium (symmetry axis radial) gives
a genuinely Finsler norm.  Scaling the stiffness by f multiplies the co-norm
by sqrt(f) and hence the norm by 1 / sqrt(f).

    python demo/03_elastic.py
"""
import numpy as np

from finsler_xray import RadialRiemannian, StiffnessProfile, StiffnessTensor, build_slice_norm
from finsler_xray import check_axioms, check_herglotz, co_norm
from finsler_xray.elastic import conformal_scaling

R = 0.3
rng = np.random.default_rng(1)
r = rng.uniform(R, 1, 200)
b = rng.uniform(0, 2 * np.pi, 200)
rho, phi = np.cos(b), np.sin(b) / r

iso = StiffnessProfile(fun=lambda x: StiffnessTensor.isotropic((2 - x) ** 2 - 0.5, 0.25))
F_iso = build_slice_norm(iso, R)
print("isotropic vs |y|/(2-r):", np.max(np.abs(F_iso(r, rho, phi) - RadialRiemannian(R, [2, -1])(r, rho, phi))))

ti = StiffnessTensor.transversely_isotropic(C11=3.0, C13=0.9, C33=2.2, C44=0.6, C66=0.8, axis=0)
prof = StiffnessProfile(nodes=[(R, ti)]).scaled(lambda x: (2 - x) ** 2)
F = build_slice_norm(prof, R)
print("TI axioms:", check_axioms(F).passed, " Herglotz:", check_herglotz(F, n_r=50).passed)
for beta in (0.0, np.pi / 4, np.pi / 2):
    print(f"  unit speed at r=0.5, beta={beta:.2f}: {1 / F(0.5, np.cos(beta), np.sin(beta) / 0.5):.6f}")
print("dual of F vs sqrt(lambda_1):", abs(co_norm(F, 0.6, 0.3, 0.4) - F.conorm(0.6, 0.3, 0.4)))

res = conformal_scaling(prof, lambda x: 1 + 0.21 * (1 - x), R, r, rho, phi)
print("F_s / F vs 1/sqrt(f_s):", res["dev_inverse_sqrt"], "   vs sqrt(f_s):", res["dev_sqrt"])
