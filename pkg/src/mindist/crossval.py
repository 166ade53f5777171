"""Block cross-validation of neighbourhood consistency.

The grid is tiled by 3x3 blocks anchored at cell (1, 1).  Each block's
centre is treated in turn as the true location: its KDE is compared with the
KDEs of every other cell, and the Chebyshev ring of the best match is
recorded.  A well-behaved location-to-distribution map puts the best match in
ring 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import divergence as dv
from ._parallel import ordered_map
from .errors import ParameterError
from .estimate import MAX_MEASURES, fit_suite, pair_value
from .grid import GridSpec, flat_index, unflat_index
from .kde import DensityEstimate, VelocityDataset

BLOCK = 3


def block_midpoints(spec: GridSpec | None = None) -> list[tuple[int, int]]:
    spec = spec or GridSpec()
    if spec.n_r % BLOCK or spec.n_theta % BLOCK:
        raise ParameterError(
            f"grid {spec.n_r}x{spec.n_theta} does not split into {BLOCK}x{BLOCK} blocks"
        )
    return [
        (k, j)
        for k in range(2, spec.n_r + 1, BLOCK)
        for j in range(2, spec.n_theta + 1, BLOCK)
    ]


def chebyshev_ring(center: tuple[int, int], point: tuple[int, int]) -> int:
    return max(abs(point[0] - center[0]), abs(point[1] - center[1]))


@dataclass(frozen=True)
class MidpointRecord:
    midpoint: tuple[int, int]
    best: tuple[int, int]
    ring: int
    value: float

    def to_dict(self) -> dict:
        return {
            "midpoint": {"k": self.midpoint[0], "j": self.midpoint[1]},
            "best": {"k": self.best[0], "j": self.best[1]},
            "ring": self.ring,
            "value": self.value,
        }


@dataclass(frozen=True)
class CrossValReport:
    model_name: str
    measure: str
    records: tuple[MidpointRecord, ...]

    @property
    def ring1(self) -> int:
        return sum(1 for r in self.records if r.ring == 1)

    @property
    def ring2(self) -> int:
        return sum(1 for r in self.records if r.ring == 2)

    @property
    def beyond(self) -> int:
        return sum(1 for r in self.records if r.ring > 2)

    def to_dict(self) -> dict:
        return {
            "model": self.model_name,
            "measure": self.measure,
            "counts": {"ring1": self.ring1, "ring2": self.ring2, "beyond": self.beyond},
            "records": [r.to_dict() for r in self.records],
        }

    def table(self) -> str:
        """Text table: model, 1st nbhood, 2nd nbhood, beyond."""
        header = f"{'Model':<16}{'1st nbhood':>12}{'2nd nbhood':>12}{'beyond':>8}"
        row = f"{self.model_name:<16}{self.ring1:>12d}{self.ring2:>12d}{self.beyond:>8d}"
        return header + "\n" + row + "\n"


def crossval_from_estimates(
    estimates: Sequence[DensityEstimate],
    spec: GridSpec,
    measure: str = dv.AFFINITY,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    model_name: str = "model",
    alpha: float = 0.5,
    workers: int = 1,
) -> CrossValReport:
    measure = dv.normalize_measure(measure)
    if len(estimates) != spec.d:
        raise ParameterError(f"expected {spec.d} estimates, got {len(estimates)}")
    maximise = measure in MAX_MEASURES

    def evaluate(mid):
        m = flat_index(*mid, spec)
        truth = estimates[m - 1]
        others = [i for i in range(1, spec.d + 1) if i != m]
        vals = np.array([
            pair_value(estimates[i - 1], truth, measure, quad_resolution, alpha) for i in others
        ])
        pos = int(np.argmax(vals) if maximise else np.argmin(vals))
        best = unflat_index(others[pos], spec)
        return MidpointRecord(mid, best, chebyshev_ring(mid, best), float(vals[pos]))

    records = ordered_map(evaluate, block_midpoints(spec), workers)
    return CrossValReport(model_name, measure, tuple(records))


def run_crossval(
    sims: Sequence[VelocityDataset],
    spec: GridSpec | None = None,
    measure: str = dv.AFFINITY,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    model_name: str = "model",
    alpha: float = 0.5,
    workers: int = 1,
) -> CrossValReport:
    """Cross-validate a full suite of ``d`` datasets given in flat-index order."""
    spec = spec or GridSpec()
    if len(sims) != spec.d:
        raise ParameterError(f"expected {spec.d} simulated datasets, got {len(sims)}")
    block_midpoints(spec)
    return crossval_from_estimates(fit_suite(sims, workers), spec, measure, quad_resolution,
                                   model_name, alpha, workers)
