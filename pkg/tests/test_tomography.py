import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finsler_xray import AnisotropicSpeed, AnnulusFunction, Pipeline, RadialRiemannian, Sinogram, decompose
from finsler_xray.errors import AliasWarning, GridMismatch
from finsler_xray.profiles import Polynomial
from finsler_xray.tomography import forward_abel_ray, forward_direct, reconstruct, relative_l2_error

R = 0.3
ANISO = AnisotropicSpeed(R, harmonics=[[1.0, 0.15], [0.0, -0.15]])


def bump(scale, extra=(1.0,)):
    p = np.polynomial.Polynomial([-R, 1]) * np.polynomial.Polynomial([1, -1]) * np.polynomial.Polynomial(extra)
    return Polynomial(tuple(scale * p.coef))


TERMS = [{"k": 0, "profile": bump(4.0)},
         {"k": 1, "profile": bump(3.0, (0.5, 1.0)), "phase": "cos"},
         {"k": 3, "profile": bump(2.0, (1.0, -0.5)), "phase": "sin"}]


@pytest.fixture(scope="module")
def euclid_pipe():
    return Pipeline(RadialRiemannian(R), n_r=48, k_max=4, n_theta=12)


@pytest.fixture(scope="module")
def aniso_pipe():
    return Pipeline(ANISO, n_r=48, k_max=4, n_theta=12)


def test_from_terms_pointwise():
    r = np.linspace(R, 1, 9)
    f = AnnulusFunction.from_terms(r, TERMS)
    th = 0.7
    direct = bump(4.0)(r) + bump(3.0, (0.5, 1.0))(r) * np.cos(th) + bump(2.0, (1.0, -0.5))(r) * np.sin(3 * th)
    np.testing.assert_allclose(f(r, th), direct, atol=1e-14)


def test_decompose_synthesize_round_trip():
    r = np.linspace(R, 1, 9)
    f = AnnulusFunction.from_terms(r, TERMS, k_max=4)
    theta, vals = f.synthesize(16)
    g = decompose(vals, r, k_max=4)
    np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-13)


def test_decompose_warns_on_aliasing():
    r = np.linspace(R, 1, 5)
    theta = 2 * np.pi * np.arange(8) / 8
    with pytest.warns(AliasWarning):
        decompose(np.cos(3 * theta)[None, :] * np.ones((5, 1)), r, k_max=3)
    with pytest.raises(GridMismatch):
        decompose(np.ones((5, 8)), r, k_max=5)


def test_l2_norm_of_constant():
    r = np.linspace(R, 1, 2001)
    f = AnnulusFunction.from_terms(r, [{"k": 0, "profile": 1.0}])
    assert f.l2_norm() == pytest.approx(np.sqrt(np.pi * (1 - R * R)), rel=1e-6)


def test_subtraction_grid_check():
    a = AnnulusFunction.zero(np.linspace(R, 1, 5))
    b = AnnulusFunction.zero(np.linspace(R, 1, 6))
    with pytest.raises(GridMismatch):
        a - b


def test_sinogram_csv_round_trip(tmp_path):
    s = Sinogram(np.linspace(R, 1, 4), np.linspace(0, 1, 3), np.arange(12.0).reshape(4, 3))
    p = tmp_path / "s.csv"
    s.to_csv(p)
    back = Sinogram.from_csv(p)
    np.testing.assert_array_equal(back.values, s.values)


def test_euclidean_constant_field_chords():
    r0 = np.array([0.35, 0.6, 0.9])
    f = lambda r, th: np.ones_like(r)
    vals = [forward_direct(RadialRiemannian(R), f, x, 0.0) for x in r0]
    np.testing.assert_allclose(vals, 2 * np.sqrt(1 - r0 ** 2), atol=1e-10)


def test_direct_and_abel_agree(aniso_pipe):
    f = aniso_pipe.function(TERMS)
    sd, sa = aniso_pipe.forward_direct(f), aniso_pipe.forward_abel(f)
    assert np.max(np.abs(sd.values - sa.values)) < 1e-4 * np.max(np.abs(sd.values))


def test_abel_ray_off_grid(aniso_pipe):
    from finsler_xray.geodesics import trace_tangential
    f = aniso_pipe.function(TERMS)
    rec = trace_tangential(ANISO, 0.517)
    th = np.array([0.0, 1.1, 4.0])
    a = forward_abel_ray(rec, f, th)
    d = forward_direct(ANISO, f, 0.517, th, record=rec)
    assert np.max(np.abs(a - d)) < 1e-4 * np.max(np.abs(d))


def test_round_trip_small_grid(euclid_pipe):
    f = euclid_pipe.function(TERMS)
    out = euclid_pipe.roundtrip(f)
    assert out["rel_l2"] < 1e-2


def test_zero_data_reconstructs_zero(aniso_pipe):
    z = Sinogram(aniso_pipe.grid, aniso_pipe.theta0, np.zeros((aniso_pipe.grid.size, aniso_pipe.n_theta)))
    assert aniso_pipe.reconstruct(z).l2_norm() == 0.0


def test_reconstruct_grid_mismatch(euclid_pipe):
    bad = Sinogram(np.linspace(R, 1, 10), euclid_pipe.theta0, np.zeros((10, euclid_pipe.n_theta)))
    with pytest.raises(GridMismatch):
        reconstruct(euclid_pipe.operators, bad)


def test_pipeline_rejects_coarse_angles():
    with pytest.raises(GridMismatch):
        Pipeline(RadialRiemannian(R), n_r=8, k_max=4, n_theta=8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 11))
def test_rotation_equivariance_property(shift):
    pipe = _pipe()
    f = pipe.function(TERMS)
    dth = pipe.theta0[shift]
    a = pipe.forward_abel(f.rotated(dth)).values
    b = np.roll(pipe.forward_abel(f).values, shift, axis=1)
    assert np.max(np.abs(a - b)) < 1e-12 * max(1.0, np.max(np.abs(b)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 4), st.sampled_from(["cos", "sin"]))
def test_mode_decoupling_property(k, phase):
    pipe = _pipe()
    f = pipe.function([{"k": k, "profile": bump(1.0), "phase": phase if k else "cos"}])
    d = pipe.forward_abel(f).modes(4)
    other = np.delete(d, [4 - k, 4 + k], axis=0)
    assert np.max(np.abs(other)) < 1e-13 * max(1.0, np.max(np.abs(d)))


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_property(a, b):
    pipe = _pipe()
    f = pipe.function(TERMS[:1])
    g = pipe.function(TERMS[2:])
    lin = pipe.function([{**TERMS[0], "profile": bump(4.0 * a)},
                         {**TERMS[2], "profile": bump(2.0 * b, (1.0, -0.5))}])
    lhs = pipe.forward_abel(lin).values
    rhs = a * pipe.forward_abel(f).values + b * pipe.forward_abel(g).values
    assert np.max(np.abs(lhs - rhs)) < 1e-11


_PIPE = []


def _pipe():
    if not _PIPE:
        _PIPE.append(Pipeline(ANISO, n_r=24, k_max=4, n_theta=12))
    return _PIPE[0]


def test_relative_error_of_truth_is_zero():
    f = AnnulusFunction.from_terms(np.linspace(R, 1, 9), TERMS)
    assert relative_l2_error(f, f) == 0.0
