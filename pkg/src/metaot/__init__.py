"""Sliced optimal-transport distances between meta-measures.

Meta-measures are empirical measures whose points are themselves empirical
measures.  The package provides the exact Wasserstein-over-Wasserstein
baseline, its sliced estimators (SQW for 1D meta-measures through
Gaussian-process projections of quantile functions, DSW for the general
case through additional sphere slicing), and the application pipelines for
shapes, point-cloud batches, and patch-based image comparison.
"""

__version__ = "0.1.0"

from .discrete_ot import solve_entropic, solve_exact, wasserstein_exact
from .gp_slicer import KernelSpec, QuadratureGrid, make_grid, sample_paths
from .measures import (
    EmpiricalMeasure,
    MetaMeasure,
    build_meta,
    load_point_cloud,
    second_moment,
    uniform_measure,
)
from .mmspace import ShapeInput, local_distance_distribution, sqw_shape_distance
from .ot1d import Quantile1D, eval_quantile, quantile_of, wasserstein_1d
from .patches import GrayImage, PerlinParams, batch_to_meta, extract_patches, perlin_texture
from .sphere import project_measure, project_meta, sample_directions
from .sqw_dsw import (
    DistanceEstimate,
    SlicingConfig,
    dsw,
    dsw_distance_matrix,
    sqw,
    sqw_distance_matrix,
    sw_wow,
)
from .wow import wow_distance_matrix, wow_exact

__all__ = [
    "DistanceEstimate",
    "EmpiricalMeasure",
    "GrayImage",
    "KernelSpec",
    "MetaMeasure",
    "PerlinParams",
    "Quantile1D",
    "QuadratureGrid",
    "ShapeInput",
    "SlicingConfig",
    "batch_to_meta",
    "build_meta",
    "dsw",
    "dsw_distance_matrix",
    "eval_quantile",
    "extract_patches",
    "load_point_cloud",
    "local_distance_distribution",
    "make_grid",
    "perlin_texture",
    "project_measure",
    "project_meta",
    "quantile_of",
    "sample_directions",
    "sample_paths",
    "second_moment",
    "solve_entropic",
    "solve_exact",
    "sqw",
    "sqw_distance_matrix",
    "sqw_shape_distance",
    "sw_wow",
    "uniform_measure",
    "wasserstein_1d",
    "wasserstein_exact",
    "wow_distance_matrix",
    "wow_exact",
]
