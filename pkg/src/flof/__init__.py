"""Registration and interpolation toolkit for space-time implicit surfaces.

Simulation sequences become 4D signed-distance volumes; a hierarchical flow
solve with residual iterations and surface projection computes a dense
deformation matching two of them, and precomputed deformations synthesize
arbitrary in-betweens over 1D/2D parameter spaces.
"""

from .flow import FlofParams, FlowSystem, CGReport, FlowSolveError, assemble, solve_cg, flow_single_level
from .levelset import (
    SpaceTimeSDF,
    assemble_spacetime,
    extract_time_slice,
    iso_from_density,
    redistance,
    scale_for_flow,
)
from .deformation import (
    Deformation,
    advect,
    advect_slab,
    align_velocity,
    error_metric,
    project_surface,
)
from .registration import FlofMatcher, MatchResult, flof, match_pair
from .interpolation import (
    OutsideHullError,
    ParameterSpace,
    SpaceSample,
    barycentric,
    in_simplex,
    interp_linear_1d,
    interp_union,
    locate_union_point,
    smoke_normalize,
    synthesize_slab,
    temporal_filter,
    union_point_labels,
    union_weights_1d,
)
from . import grid

__version__ = "0.1.0"

__all__ = [
    "CGReport",
    "Deformation",
    "FlofMatcher",
    "FlofParams",
    "FlowSolveError",
    "FlowSystem",
    "MatchResult",
    "OutsideHullError",
    "ParameterSpace",
    "SpaceSample",
    "SpaceTimeSDF",
    "advect",
    "advect_slab",
    "align_velocity",
    "assemble",
    "assemble_spacetime",
    "barycentric",
    "error_metric",
    "extract_time_slice",
    "flof",
    "flow_single_level",
    "grid",
    "in_simplex",
    "interp_linear_1d",
    "interp_union",
    "iso_from_density",
    "locate_union_point",
    "match_pair",
    "project_surface",
    "redistance",
    "scale_for_flow",
    "smoke_normalize",
    "solve_cg",
    "synthesize_slab",
    "temporal_filter",
    "union_point_labels",
    "union_weights_1d",
]
