"""Synthetic location-dependent velocity data.

Stands in for simulation output: the velocity distribution at a grid cell is
an equal-weight mixture of ``mode_count`` isotropic Gaussians around a mean
that varies smoothly and injectively with ``(r, theta)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .grid import GridLocation, GridSpec
from .kde import VelocityDataset

DEFAULT_N_PER_LOCATION = 400
DEFAULT_SEED = 20140818


@dataclass(frozen=True)
class FieldParams:
    amplitude: float = 40.0
    radial_gain: float = 1.0
    angular_gain: float = 0.1
    noise_scale: float = 1.0
    mode_count: int = 1
    mode_spread: float = 0.0

    def __post_init__(self):
        if not self.noise_scale >= 0:
            raise ParameterError(f"noise_scale must be non-negative, got {self.noise_scale}")
        if int(self.mode_count) != self.mode_count or self.mode_count < 1:
            raise ParameterError(f"mode_count must be a positive integer, got {self.mode_count}")
        if self.mode_spread < 0:
            raise ParameterError(f"mode_spread must be non-negative, got {self.mode_spread}")

    def to_dict(self) -> dict:
        return asdict(self)


def mean_field(loc: GridLocation, params: FieldParams) -> np.ndarray:
    """Centre of the velocity distribution at ``loc``."""
    phase = params.angular_gain * math.radians(loc.theta)
    return np.array([
        params.amplitude * loc.r * math.cos(phase),
        params.amplitude * params.radial_gain * loc.r * math.sin(phase),
    ])


def mode_centers(loc: GridLocation, params: FieldParams) -> np.ndarray:
    centre = mean_field(loc, params)
    m = params.mode_count
    if m == 1:
        return centre[None, :]
    angles = 2.0 * math.pi * np.arange(m) / m
    offsets = params.mode_spread * np.column_stack([np.cos(angles), np.sin(angles)])
    return centre[None, :] + offsets


def generate_velocity_dataset(
    loc: GridLocation,
    n: int,
    params: FieldParams | None = None,
    rng: np.random.Generator | None = None,
) -> VelocityDataset:
    if n < 2:
        raise ParameterError(f"dataset size must be at least 2, got {n}")
    params = params or FieldParams()
    rng = rng if rng is not None else np.random.default_rng()
    centers = mode_centers(loc, params)
    which = rng.integers(0, centers.shape[0], size=n)
    noise = rng.standard_normal((n, 2))
    return VelocityDataset(centers[which] + params.noise_scale * noise)


def generate_suite(
    spec: GridSpec | None = None,
    n_per_location: int = DEFAULT_N_PER_LOCATION,
    params: FieldParams | None = None,
    master_seed: int = DEFAULT_SEED,
) -> list[VelocityDataset]:
    """One dataset per grid cell, in flat-index order.

    Cell ``i`` draws from the ``i``-th child of ``SeedSequence(master_seed)``,
    so any single cell can be regenerated without the others.
    """
    spec = spec or GridSpec()
    params = params or FieldParams()
    children = np.random.SeedSequence(master_seed).spawn(spec.d)
    return [
        generate_velocity_dataset(loc, n_per_location, params, np.random.default_rng(child))
        for loc, child in zip(spec.locations(), children)
    ]
