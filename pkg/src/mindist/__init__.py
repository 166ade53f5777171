"""Minimum-distance location estimation from kernel density estimates."""

__version__ = "0.1.0"

from .divergence import (
    affinity_to_distances,
    hellinger_affinity,
    kl_divergence,
    make_quadrature,
    pearson_divergence,
    relative_pearson,
)
from .estimate import Surface, argmax_affinity, argmin_divergence, build_surface, rank_models
from .grid import GridLocation, GridSpec, flat_index, grid_location, to_cartesian, unflat_index
from .kde import DensityEstimate, VelocityDataset, bandwidth, eval_kde, fit_kde, sample_kde

__all__ = [
    "DensityEstimate",
    "GridLocation",
    "GridSpec",
    "Surface",
    "VelocityDataset",
    "affinity_to_distances",
    "argmax_affinity",
    "argmin_divergence",
    "bandwidth",
    "build_surface",
    "eval_kde",
    "fit_kde",
    "flat_index",
    "grid_location",
    "hellinger_affinity",
    "kl_divergence",
    "make_quadrature",
    "pearson_divergence",
    "rank_models",
    "relative_pearson",
    "sample_kde",
    "to_cartesian",
    "unflat_index",
]
