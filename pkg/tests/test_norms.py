import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finsler_xray import (
    AnisotropicSpeed,
    ConformalNorm,
    RadialRiemannian,
    TabulatedFiber,
    check_axioms,
    co_norm,
    eval_norm,
    legendre_norm_from_conorm,
    metric_tensor,
    norm_from_json,
    spray_coefficients,
)
from finsler_xray.errors import (
    ConfigError,
    DifferentiationFailure,
    NotPositiveDefinite,
    OutOfDomain,
)
from finsler_xray.norms import fd_jet
from finsler_xray.profiles import Polynomial

R = 0.3
ANISO = AnisotropicSpeed(R, harmonics=[[1.0, 0.15], [0.0, -0.15]])

radius = st.floats(R, 1.0)
angle = st.floats(0.0, 2 * np.pi)
scale = st.floats(0.05, 20.0)


def polar(r, beta, mag=1.0):
    return mag * np.cos(beta), mag * np.sin(beta) / r


def test_euclidean_tangential_value():
    # unit tangential speed at r: |y| = r * phi
    assert eval_norm(RadialRiemannian(R), 0.8, 0.0, 1.0) == pytest.approx(0.8, abs=1e-15)


def test_constant_speed_scales_norm():
    F = RadialRiemannian(R, 2.0)
    assert F(0.5, 3.0, 4.0 / 0.5) == pytest.approx(2.5, abs=1e-15)


def test_metric_tensor_linear_speed():
    # g = diag(1, r^2) / c^2 with c = 2 - r at r = 0.5
    g = metric_tensor(RadialRiemannian(R, [2.0, -1.0]), 0.5, 0.3, 0.4)
    assert g.g11 == pytest.approx(1 / 2.25, rel=1e-9)
    assert g.g22 == pytest.approx(0.25 / 2.25, rel=1e-9)
    assert abs(g.g12) < 1e-12


def test_spray_matches_euclidean_christoffel():
    r, rho, phi = 0.6, 0.2, 1.3
    G = spray_coefficients(RadialRiemannian(R), r, rho, phi)
    assert G.G1 == pytest.approx(-0.5 * r * phi ** 2, rel=1e-9)
    assert G.G2 == pytest.approx(rho * phi / r, rel=1e-9)


@pytest.mark.parametrize("norm", [RadialRiemannian(R, [2.0, -1.0]), ANISO])
def test_analytic_jet_matches_finite_differences(norm):
    rng = np.random.default_rng(1)
    r = rng.uniform(R, 1.0, 40)
    rho, phi = polar(r, rng.uniform(0, 2 * np.pi, 40))
    a = norm.analytic_jet(r, rho, phi)
    f = fd_jet(norm, r, rho, phi)
    for name in a._fields:
        x, y = np.asarray(getattr(a, name)), np.asarray(getattr(f, name))
        assert np.max(np.abs(x - y)) < 1e-7 * max(1.0, np.max(np.abs(x))), name


def test_fd_jet_one_sided_at_boundary():
    norm = RadialRiemannian(R, [2.0, -1.0])
    for r in (R, 1.0):
        a, f = norm.analytic_jet(r, 0.3, 1.1), fd_jet(norm, r, 0.3, 1.1)
        assert f.dr == pytest.approx(a.dr, rel=1e-8)


def test_fd_jet_refuses_thin_annulus():
    with pytest.raises(DifferentiationFailure):
        fd_jet(RadialRiemannian(1.0 - 1e-4), 1.0 - 5e-5, 0.1, 1.0)


def test_zero_section_is_not_definite():
    with pytest.raises(NotPositiveDefinite):
        metric_tensor(ANISO, 0.5, 0.0, 0.0)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        eval_norm(ANISO, 0.1, 1.0, 0.0)


def test_co_norm_of_constant_speed():
    # dual of |y| / c is c |p|
    assert co_norm(RadialRiemannian(R, 2.0), 0.7, 1.0, 0.0) == pytest.approx(2.0, rel=1e-9)


def test_legendre_round_trip():
    r = 0.55
    for beta in np.linspace(0.1, 3.0, 5):
        rho, phi = polar(r, beta)
        F_star = lambda rr, pr, pt: np.vectorize(lambda a, b, c: co_norm(ANISO, a, b, c))(rr, pr, pt)
        assert legendre_norm_from_conorm(F_star, r, rho, phi) == pytest.approx(ANISO(r, rho, phi), rel=1e-6)


@pytest.mark.parametrize("norm", [RadialRiemannian(R), RadialRiemannian(R, [2.0, -1.0]), ANISO,
                                  ConformalNorm(ANISO, Polynomial((1.0, 0.2)))])
def test_axioms_pass(norm):
    rep = check_axioms(norm, sample_count=100)
    assert rep.passed, rep.to_json()


def test_tabulated_fiber_reproduces_source():
    tab = TabulatedFiber.from_norm(ANISO, n_r=33, n_angles=64)
    assert check_axioms(tab, sample_count=100, tol=1e-4).passed
    rng = np.random.default_rng(3)
    r = rng.uniform(R, 1.0, 50)
    rho, phi = polar(r, rng.uniform(0, 2 * np.pi, 50))
    assert np.max(np.abs(tab(r, rho, phi) / ANISO(r, rho, phi) - 1)) < 1e-4


def test_tabulated_rejects_bad_table():
    with pytest.raises(ConfigError):
        TabulatedFiber(R=R, r=np.linspace(R, 1, 4), values=np.ones((3, 8)))


def test_nonconvex_harmonics_fail_convexity():
    bad = AnisotropicSpeed(R, harmonics=[[1.0], [0.0], [0.0], [0.3]])
    assert not check_axioms(bad, sample_count=300)["convexity"].passed


@pytest.mark.parametrize("norm", [RadialRiemannian(R, [2.0, -1.0]), ANISO,
                                  TabulatedFiber.from_norm(ANISO, n_r=9, n_angles=16),
                                  ConformalNorm(RadialRiemannian(R), Polynomial((1.0, -0.5)))])
def test_json_round_trip(norm):
    back = norm_from_json(json.loads(json.dumps(norm.to_json())))
    r, rho, phi = 0.63, 0.4, -0.9
    assert back(r, rho, phi) == pytest.approx(norm(r, rho, phi), rel=1e-14)


def test_unknown_family():
    with pytest.raises(ConfigError):
        norm_from_json({"family": "Nope", "R": 0.3})


@settings(max_examples=60, deadline=None)
@given(radius, angle, scale, scale)
def test_homogeneity_property(r, beta, m, lam):
    rho, phi = polar(r, beta, m)
    assert ANISO(r, lam * rho, lam * phi) == pytest.approx(lam * ANISO(r, rho, phi), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(radius, angle, scale)
def test_reversibility_property(r, beta, m):
    rho, phi = polar(r, beta, m)
    assert ANISO(r, -rho, -phi) == pytest.approx(ANISO(r, rho, phi), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(radius, angle, angle)
def test_triangle_inequality_property(r, b1, b2):
    y1, y2 = np.array(polar(r, b1)), np.array(polar(r, b2))
    s = y1 + y2
    assert ANISO(r, *s) <= ANISO(r, *y1) + ANISO(r, *y2) + 1e-12


@settings(max_examples=40, deadline=None)
@given(radius, angle)
def test_euler_identity_property(r, beta):
    # 2-homogeneity of F^2: y . grad F^2 = 2 F^2
    rho, phi = polar(r, beta)
    j = ANISO.analytic_jet(r, rho, phi)
    assert rho * j.g_rho + phi * j.g_phi == pytest.approx(2 * j.f2, rel=1e-12)
