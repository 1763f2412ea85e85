import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finsler_xray import (
    AnisotropicSpeed,
    RadialRiemannian,
    boundary_distance,
    check_potential_vanishing,
    shoot_boundary_geodesic,
    sphere_bundle_transform,
    trace_tangential,
    verify_conformal_linearization,
)
from finsler_xray.errors import BoundaryNonVanishing, HerglotzViolated
from finsler_xray.linearization import SphereBundleFunction, comparison_length, conformal_family
from finsler_xray.profiles import Polynomial

R = 0.3
EUC = RadialRiemannian(R)
ANISO = AnisotropicSpeed(R, harmonics=[[1.0, 0.15], [0.0, -0.15]])


@pytest.mark.parametrize("dth", [np.pi / 3, np.pi / 2, 2.0])
def test_euclidean_boundary_distance(dth):
    assert boundary_distance(EUC, dth) == pytest.approx(2 * np.sin(dth / 2), abs=1e-10)


def test_scalar_transform_is_length():
    rec = trace_tangential(ANISO, 0.5)
    h = SphereBundleFunction.scalar(lambda r, th: np.ones_like(r))
    assert sphere_bundle_transform(ANISO, h, rec) == pytest.approx(rec.length, abs=1e-11)


def test_quadratic_transform_halves_scalar():
    # h_ij = w g_ij / 2 for g = diag(1, r^2) and w = r: I_SM h = I w / 2
    rec = trace_tangential(EUC, 0.45)
    h = SphereBundleFunction.quadratic(lambda r: (0.5 * r, 0.0, 0.5 * r ** 3))
    w = SphereBundleFunction.scalar(lambda r, th: r)
    assert sphere_bundle_transform(EUC, h, rec) == pytest.approx(0.5 * sphere_bundle_transform(EUC, w, rec),
                                                                 abs=1e-11)
    assert h.kind == "quadratic-2-tensor"


COMPLIANT = [
    lambda r, th, rho, phi: (1 - r) * rho,
    lambda r, th, rho, phi: (1 - r * r) * np.cos(th) * phi,
    lambda r, th, rho, phi: np.sin(np.pi * (1 - r)) * rho * phi + (1 - r) ** 2,
]


@pytest.mark.parametrize("u", COMPLIANT)
def test_potentials_integrate_to_zero(u):
    recs = [trace_tangential(ANISO, r0, theta0=0.4) for r0 in (0.35, 0.6, 0.85)]
    assert check_potential_vanishing(ANISO, u, recs) < 1e-6


def test_non_vanishing_potential_rejected():
    with pytest.raises(BoundaryNonVanishing):
        check_potential_vanishing(ANISO, lambda r, th, rho, phi: rho, [])


def test_comparison_curve_is_longer():
    rec = shoot_boundary_geodesic(ANISO, np.pi / 2)
    excess = [comparison_length(ANISO, np.pi / 2, rec.r0 + d) - rec.length for d in (0.02, 0.01)]
    assert excess[0] > excess[1] > 0
    # quadratic in the offset
    assert excess[0] / excess[1] == pytest.approx(4.0, rel=0.05)


def test_conformal_family_values():
    F = conformal_family(EUC, Polynomial((1.0, -1.0)), 0.2)
    assert F(0.5, 1.0, 0.0) == pytest.approx(1.1, rel=1e-14)


def test_constant_factor_scales_length():
    rows = verify_conformal_linearization(EUC, 0.7, [np.pi / 2], step=1e-3)
    assert rows[0].lhs == pytest.approx(0.7 * np.sqrt(2), rel=1e-8)
    assert rows[0].rhs == pytest.approx(0.7 * np.sqrt(2), rel=1e-10)


def test_identity_for_radial_factor():
    rows = verify_conformal_linearization(ANISO, Polynomial((1.0, -1.0)), [1.0, 2.0], step=1e-3)
    for row in rows:
        assert row.rel_err < 1e-4
        assert abs(row.lhs_richardson - row.rhs) <= abs(row.lhs - row.rhs) + 1e-9


def test_herglotz_breaking_step_refused():
    with pytest.raises(HerglotzViolated):
        verify_conformal_linearization(EUC, Polynomial((0.0, -1.0)), [1.0], step=1.5)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.5, 2.5), st.floats(-0.5, 0.5))
def test_first_variation_property(dth, slope):
    f = Polynomial((1.0, slope))
    row = verify_conformal_linearization(EUC, f, [dth], step=1e-3, check=False)[0]
    assert row.rel_err < 1e-5
