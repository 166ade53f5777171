"""Divergence surfaces over the location grid and their extrema."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import divergence as dv
from ._parallel import ordered_map
from .errors import DegenerateDataError, ParameterError
from .grid import GridLocation, GridSpec, grid_location, unflat_index
from .kde import DensityEstimate, VelocityDataset, fit_kde

MAX_MEASURES = (dv.AFFINITY,)
MIN_MEASURES = (dv.SQUARED_HELLINGER, dv.BHATTACHARYYA, dv.KL, dv.PE, dv.RPE)


@dataclass(frozen=True, eq=False)
class Surface:
    spec: GridSpec
    measure: str
    values: np.ndarray
    observed_n: int | None = None
    per_location_n: tuple[int, ...] | None = None
    alpha: float | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if vals.size != self.spec.d:
            raise ParameterError(f"surface needs {self.spec.d} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            bad = np.flatnonzero(~np.isfinite(vals)) + 1
            raise ParameterError(f"surface values not finite at flat indices {bad.tolist()}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.per_location_n is not None:
            object.__setattr__(self, "per_location_n", tuple(int(n) for n in self.per_location_n))

    def value_at(self, k: int, j: int) -> float:
        return float(self.values[self.spec.n_theta * (k - 1) + (j - 1)])

    def as_matrix(self) -> np.ndarray:
        """Values reshaped to ``(n_r, n_theta)``; row ``k-1``, column ``j-1``."""
        return self.values.reshape(self.spec.n_r, self.spec.n_theta)

    def to_dict(self) -> dict:
        out = {
            "measure": self.measure,
            "grid": self.spec.to_dict(),
            "values": [float(v) for v in self.values],
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.observed_n is not None:
            out["observed_n"] = self.observed_n
        if self.per_location_n is not None:
            out["per_location_n"] = list(self.per_location_n)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Surface":
        return cls(
            spec=GridSpec.from_dict(data["grid"]),
            measure=data["measure"],
            values=np.asarray(data["values"], dtype=float),
            observed_n=data.get("observed_n"),
            per_location_n=data.get("per_location_n"),
            alpha=data.get("alpha"),
        )


@dataclass(frozen=True)
class Estimate:
    indices: tuple[int, int]
    location: GridLocation
    value: float
    orientation: str

    def to_dict(self) -> dict:
        return {
            "k": self.indices[0],
            "j": self.indices[1],
            "r": self.location.r,
            "theta": self.location.theta,
            "value": self.value,
            "orientation": self.orientation,
        }


def fit_suite(sims: Sequence[VelocityDataset], workers: int = 1) -> list[DensityEstimate]:
    """Fit one KDE per dataset; errors name the 1-based flat index."""

    def fit(item):
        i, data = item
        try:
            return fit_kde(data)
        except DegenerateDataError as exc:
            raise DegenerateDataError(f"grid index {i}: {exc}") from exc

    return ordered_map(fit, enumerate(sims, start=1), workers)


def pair_value(g: DensityEstimate, f: DensityEstimate, measure: str,
               resolution: int = dv.DEFAULT_RESOLUTION, alpha: float = 0.5) -> float:
    q = dv.make_quadrature(f, g, resolution)
    return dv.measure_on_quadrature(measure, g, f, q, alpha)


def surface_from_estimates(
    f_hat: DensityEstimate,
    g_hats: Sequence[DensityEstimate],
    spec: GridSpec,
    measure: str,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    alpha: float = 0.5,
    workers: int = 1,
) -> Surface:
    measure = dv.normalize_measure(measure)
    if len(g_hats) != spec.d:
        raise ParameterError(f"expected {spec.d} simulated datasets, got {len(g_hats)}")
    values = ordered_map(
        lambda g: pair_value(g, f_hat, measure, quad_resolution, alpha), g_hats, workers
    )
    return Surface(
        spec,
        measure,
        np.asarray(values),
        observed_n=f_hat.n,
        per_location_n=tuple(g.n for g in g_hats),
        alpha=alpha if measure == dv.RPE else None,
    )


def build_surface(
    observed: VelocityDataset,
    sims: Sequence[VelocityDataset],
    measure: str = dv.AFFINITY,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    spec: GridSpec | None = None,
    alpha: float = 0.5,
    workers: int = 1,
) -> Surface:
    """Evaluate ``measure(g_i, f)`` for every grid cell.

    ``f`` is fitted once on ``observed``; ``g_i`` on ``sims[i-1]``.  Each
    pair gets its own padded quadrature grid.
    """
    spec = spec or GridSpec()
    if len(sims) != spec.d:
        raise ParameterError(f"expected {spec.d} simulated datasets, got {len(sims)}")
    try:
        f_hat = fit_kde(observed)
    except DegenerateDataError as exc:
        raise DegenerateDataError(f"observed dataset: {exc}") from exc
    g_hats = fit_suite(sims, workers)
    return surface_from_estimates(f_hat, g_hats, spec, measure, quad_resolution, alpha, workers)


def _extremum(s: Surface, orientation: str) -> Estimate:
    # argmax/argmin return the first occurrence, i.e. the smallest flat index.
    pos = int(np.argmax(s.values) if orientation == "max" else np.argmin(s.values))
    k, j = unflat_index(pos + 1, s.spec)
    return Estimate((k, j), grid_location(k, j, s.spec), float(s.values[pos]), orientation)


def argmax_affinity(s: Surface) -> Estimate:
    if s.measure not in MAX_MEASURES:
        raise ParameterError(f"argmax_affinity needs an affinity surface, got {s.measure!r}")
    return _extremum(s, "max")


def argmin_divergence(s: Surface) -> Estimate:
    if s.measure not in MIN_MEASURES:
        raise ParameterError(f"argmin_divergence needs a divergence surface, got {s.measure!r}")
    return _extremum(s, "min")


def best_location(s: Surface) -> Estimate:
    """Arg-extremum in the direction appropriate to the surface's measure."""
    return argmax_affinity(s) if s.measure in MAX_MEASURES else argmin_divergence(s)


def distance_surface(s: Surface, measure: str = dv.SQUARED_HELLINGER) -> Surface:
    """Transform an affinity surface into squared-Hellinger or Bhattacharyya values."""
    if s.measure != dv.AFFINITY:
        raise ParameterError(f"need an affinity surface, got {s.measure!r}")
    measure = dv.normalize_measure(measure)
    if measure not in (dv.SQUARED_HELLINGER, dv.BHATTACHARYYA):
        raise ParameterError(f"cannot derive {measure!r} from affinities")
    pick = 0 if measure == dv.SQUARED_HELLINGER else 1
    vals = [dv.affinity_to_distances(float(v))[pick] for v in s.values]
    return Surface(s.spec, measure, np.asarray(vals), s.observed_n, s.per_location_n)


@dataclass(frozen=True)
class RankedModel:
    name: str
    best_value: float
    estimate: Estimate = field(compare=False)


def rank_models(surfaces: Sequence[tuple[str, Surface]]) -> list[RankedModel]:
    """Order models by their maximum affinity, best first; ties go by name."""
    if not surfaces:
        raise ParameterError("no model surfaces to rank")
    ranked = []
    for name, surf in surfaces:
        est = argmax_affinity(surf)
        ranked.append(RankedModel(name, est.value, est))
    ranked.sort(key=lambda m: (-m.best_value, m.name))
    return ranked
