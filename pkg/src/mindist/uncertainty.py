"""Bootstrap confidence sets for the maximum-affinity location."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import divergence as dv
from ._parallel import ordered_map
from .errors import ParameterError
from .estimate import Surface, argmax_affinity, pair_value
from .grid import GridLocation, grid_location
from .kde import DensityEstimate, VelocityDataset, fit_kde, sample_kde

SHIFT_INVARIANCE_NOTE = (
    "cutoff derived at the argmax cell; valid if contours of constant affinity "
    "are shift invariant across the grid"
)


@dataclass(frozen=True)
class Member:
    location: GridLocation
    affinity: float

    def to_dict(self) -> dict:
        loc = self.location
        return {"k": loc.k, "j": loc.j, "r": loc.r, "theta": loc.theta, "affinity": self.affinity}


@dataclass(frozen=True, eq=False)
class ConfidenceSet:
    level: float
    cutoff: float
    members: tuple[Member, ...]
    replicate_affinities: np.ndarray
    argmax: tuple[int, int]
    quantile_cutoff: float

    @property
    def cells(self) -> set[tuple[int, int]]:
        return {(m.location.k, m.location.j) for m in self.members}

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "cutoff": self.cutoff,
            "members": [m.to_dict() for m in self.members],
            "replicates": [float(v) for v in self.replicate_affinities],
            "metadata": {
                "argmax": {"k": self.argmax[0], "j": self.argmax[1]},
                "quantile_cutoff": self.quantile_cutoff,
                "B": int(self.replicate_affinities.size),
                "note": SHIFT_INVARIANCE_NOTE,
            },
        }


def nearest_rank(values, prob: float) -> float:
    """Nearest-rank lower quantile: the ``ceil(prob * n)``-th smallest value."""
    vals = np.sort(np.asarray(values, dtype=float))
    n = vals.size
    if n == 0:
        raise ParameterError("no values to take a quantile of")
    # round() first so 0.05 * 300 lands on 15, not 15.000000000000002
    rank = max(1, math.ceil(round(prob * n, 9)))
    return float(vals[min(rank, n) - 1])


def replicate_affinities(
    g_star: DensityEstimate,
    f_hat: DensityEstimate,
    B: int,
    m: int,
    seed: int | np.random.SeedSequence,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    refit_bandwidth: bool = True,
    workers: int = 1,
) -> np.ndarray:
    """Affinity to ``f_hat`` of ``B`` KDEs refitted on smoothed-bootstrap samples of ``g_star``.

    Replicate ``b`` uses the ``b``-th spawned child of the seed sequence, so
    results do not depend on ``workers``.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(B)

    def one(child):
        sample = sample_kde(g_star, m, np.random.default_rng(child))
        rep = fit_kde(sample) if refit_bandwidth else DensityEstimate(sample.samples, g_star.h)
        return pair_value(rep, f_hat, dv.AFFINITY, quad_resolution)

    return np.asarray(ordered_map(one, children, workers))


def bootstrap_confidence_set(
    observed: VelocityDataset,
    sim_at_argmax: VelocityDataset,
    surface: Surface,
    B: int = 300,
    level: float = 0.95,
    seed: int | np.random.SeedSequence = 0,
    quad_resolution: int = dv.DEFAULT_RESOLUTION,
    refit_bandwidth: bool = True,
    workers: int = 1,
) -> ConfidenceSet:
    """Confidence set of grid cells for the maximum-affinity location.

    The cutoff is the nearest-rank ``1 - level`` quantile of the replicate
    affinities, capped at the surface maximum so the point estimate is
    always a member.  Every cell whose surface value reaches the cutoff is
    included.
    """
    if surface.measure != dv.AFFINITY:
        raise ParameterError(f"confidence sets need an affinity surface, got {surface.measure!r}")
    if B < 2:
        raise ParameterError(f"need at least 2 bootstrap replicates, got {B}")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must lie in (0, 1), got {level}")

    f_hat = fit_kde(observed)
    g_star = fit_kde(sim_at_argmax)
    reps = replicate_affinities(g_star, f_hat, B, sim_at_argmax.n, seed,
                                quad_resolution, refit_bandwidth, workers)
    q_cut = nearest_rank(reps, 1.0 - level)
    best = argmax_affinity(surface)
    cutoff = min(q_cut, best.value)
    members = tuple(
        Member(grid_location(k, j, surface.spec), surface.value_at(k, j))
        for k, j in surface.spec.cells()
        if surface.value_at(k, j) >= cutoff
    )
    return ConfidenceSet(level, cutoff, members, reps, best.indices, q_cut)
