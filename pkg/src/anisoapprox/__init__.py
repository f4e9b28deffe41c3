"""Anisotropic spline quasi-interpolation toolkit.

Constructive approximation on dyadic box domains: tensor cardinal-spline
partitions of unity, local polynomial projections, telescoping extension
operators, derivative recovery from point samples, and desk-scale experiments
that measure the convergence-rate exponents of these constructions.
"""

from .approx import (
    BlendedPiecewise,
    ExtensionResult,
    RateReport,
    SteppedPiecewise,
    default_blend_smoothness,
    derivative_eval,
    discretize,
    extend,
    k_functional,
    quasi_interpolant,
    rate_condition,
    rate_experiment,
    regrid_stepped,
    stepped_project,
    telescope,
    v_step,
)
from .bspline import (
    Blend,
    SubdivisionStencil,
    blend_derivative,
    blend_eval,
    bspline_eval,
    bspline_eval_many,
    refinement_coeffs,
    subdivide,
    subdivision_stencil,
)
from .domain import (
    AlphaTypeReport,
    ChainReport,
    DomainGrid,
    DomainSpec,
    LevelTooCoarseError,
    classify_cells,
    find_chain,
    l_shape,
    nearest_interior,
    two_squares,
    unit_cube,
    verify_alpha_type,
)
from .grid import (
    AnisoProfile,
    DyadicCell,
    LevelVector,
    MultiIndex,
    ScaleMap,
    SignedIndex,
    index_range,
    level_vector,
    scale_apply,
    scale_invert,
)
from .polyspace import (
    PolyCell,
    lagrange_from_values,
    lagrange_iso,
    poly_derivative,
    project_L2,
)
from .recovery import (
    SampleSet,
    StechkinPoint,
    StechkinReport,
    operator_norm_proxy,
    recover,
    recovery_experiment,
    sample_points,
    select_stage,
    stechkin_experiment,
)
from .spaces import (
    QuadratureConfig,
    ScalarField,
    SpaceParams,
    averaged_modulus,
    besov_derivative_norm,
    besov_norm,
    finite_difference,
    lp_norm,
    nikolskii_norm,
    sup_modulus,
)

__version__ = "0.1.0"
