"""Polar grid of candidate observer locations.

Cells are addressed by 1-based ``(k, j)`` pairs, ``k`` running over radial
bins and ``j`` over angular bins, or by the flat index
``i = n_theta * (k - 1) + j``.  Coordinates are bin centres; angles are kept
in degrees and only converted to radians for trigonometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import GridIndexError, ParameterError


@dataclass(frozen=True)
class GridSpec:
    r0: float = 1.7
    theta0: float = 0.0
    delta_r: float = 0.025
    delta_theta: float = 10.0
    n_r: int = 24
    n_theta: int = 9

    def __post_init__(self):
        if not self.delta_r > 0:
            raise ParameterError(f"delta_r must be positive, got {self.delta_r}")
        if not self.delta_theta > 0:
            raise ParameterError(f"delta_theta must be positive, got {self.delta_theta}")
        if int(self.n_r) != self.n_r or self.n_r < 1:
            raise ParameterError(f"n_r must be a positive integer, got {self.n_r}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 1:
            raise ParameterError(f"n_theta must be a positive integer, got {self.n_theta}")
        object.__setattr__(self, "n_r", int(self.n_r))
        object.__setattr__(self, "n_theta", int(self.n_theta))

    @property
    def d(self) -> int:
        """Total number of grid cells."""
        return self.n_r * self.n_theta

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "theta0": self.theta0,
            "delta_r": self.delta_r,
            "delta_theta": self.delta_theta,
            "n_r": self.n_r,
            "n_theta": self.n_theta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        fields = ("r0", "theta0", "delta_r", "delta_theta", "n_r", "n_theta")
        unknown = set(data) - set(fields)
        if unknown:
            raise ParameterError(f"unknown grid field(s): {sorted(unknown)}")
        return cls(**{key: data[key] for key in fields if key in data})

    def cells(self) -> Iterator[tuple[int, int]]:
        """Yield every ``(k, j)`` in flat-index order."""
        for k in range(1, self.n_r + 1):
            for j in range(1, self.n_theta + 1):
                yield k, j

    def locations(self) -> list["GridLocation"]:
        return [grid_location(k, j, self) for k, j in self.cells()]


@dataclass(frozen=True)
class GridLocation:
    k: int
    j: int
    r: float
    theta: float


def _check_indices(k: int, j: int, spec: GridSpec) -> None:
    if not 1 <= k <= spec.n_r:
        raise GridIndexError(f"radial index k={k} outside 1..{spec.n_r}")
    if not 1 <= j <= spec.n_theta:
        raise GridIndexError(f"angular index j={j} outside 1..{spec.n_theta}")


def radial_center(k: int, spec: GridSpec) -> float:
    # Rounding to 12 decimals removes binary noise (1.7 + 19*0.025 + ...)
    # so table values compare exactly.
    return round(spec.r0 + (k - 1) * spec.delta_r + spec.delta_r / 2, 12)


def angular_center(j: int, spec: GridSpec) -> float:
    return round(spec.theta0 + (j - 1) * spec.delta_theta + spec.delta_theta / 2, 12)


def grid_location(k: int, j: int, spec: GridSpec | None = None) -> GridLocation:
    """Return the bin-centre location of cell ``(k, j)``.

    Raises
    ------
    GridIndexError
        If either index is outside the grid.
    """
    spec = spec or GridSpec()
    _check_indices(k, j, spec)
    return GridLocation(k, j, radial_center(k, spec), angular_center(j, spec))


def to_cartesian(loc: GridLocation) -> tuple[float, float]:
    theta = math.radians(loc.theta)
    return loc.r * math.cos(theta), loc.r * math.sin(theta)


def flat_index(k: int, j: int, spec: GridSpec | None = None) -> int:
    spec = spec or GridSpec()
    _check_indices(k, j, spec)
    return spec.n_theta * (k - 1) + j


def unflat_index(i: int, spec: GridSpec | None = None) -> tuple[int, int]:
    """Inverse of :func:`flat_index`."""
    spec = spec or GridSpec()
    if not 1 <= i <= spec.d:
        raise GridIndexError(f"flat index i={i} outside 1..{spec.d}")
    k, j = divmod(i - 1, spec.n_theta)
    return k + 1, j + 1


def location_table(spec: GridSpec | None = None) -> np.ndarray:
    """``(d, 4)`` array of ``k, j, r, theta`` rows in flat-index order."""
    spec = spec or GridSpec()
    return np.array([(loc.k, loc.j, loc.r, loc.theta) for loc in spec.locations()])
