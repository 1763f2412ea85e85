"""Geodesic X-ray tomography for spherically symmetric Finsler norms on an annulus.

The package traces tangential geodesics of a reversible Finsler norm on
``R <= r <= 1``, reduces each angular Fourier mode of the geodesic ray
transform to a generalized Abel equation and inverts it.  Elastic (qP-wave)
norms and the linearized boundary-distance problem are built on the same
geodesic machinery.
"""
from .errors import *  # noqa: F401,F403
from .profiles import Polynomial, Tabulated, FunctionProfile, as_profile, profile_from_json
from .norms import (
    AnisotropicSpeed,
    ConformalNorm,
    FinslerNorm,
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
from .herglotz import check_foliation, check_herglotz, turning_acceleration
from .geodesics import (
    GeodesicRecord,
    GeodesicState,
    integrate_along,
    integrate_geodesic,
    shoot_boundary_geodesic,
    trace_tangential,
)
from .abel import (
    build_kernel,
    discretize,
    discretize_modes,
    forward_general,
    invert,
    kernel_from_trace,
)
from .tomography import (
    AnnulusFunction,
    Pipeline,
    Sinogram,
    decompose,
    forward_abel,
    forward_direct,
    reconstruct,
    relative_l2_error,
)
from .elastic import (
    ElasticDerived,
    StiffnessProfile,
    StiffnessTensor,
    build_slice_norm,
    christoffel,
    qp_conorm,
)
from .linearization import (
    boundary_distance,
    check_potential_vanishing,
    sphere_bundle_transform,
    verify_conformal_linearization,
)

__version__ = "0.1.0"
