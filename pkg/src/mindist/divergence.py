"""Plug-in divergences between two fitted densities.

All integrals use the midpoint rule on a uniform ``nx x ny`` grid whose
bounds cover both datasets padded by five bandwidths.  Argument order
follows ``measure(g, f)``: in location estimation ``g`` is the simulated
density and ``f`` the observed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .kde import DensityEstimate

DEFAULT_RESOLUTION = 256
MIN_NODES = 16
PAD_BANDWIDTHS = 5.0
FLOOR = 1e-300
_EXACT_LOG_BELOW = 1e-280
_WEIGHT_RATIO = 1e-30
_LARGEST = float(np.finfo(float).max)

AFFINITY = "affinity"
SQUARED_HELLINGER = "squared_hellinger"
BHATTACHARYYA = "bhattacharyya"
KL = "kl"
PE = "pe"
RPE = "rpe"
PLUGIN_MEASURES = (AFFINITY, SQUARED_HELLINGER, BHATTACHARYYA, KL, PE, RPE)

_ALIASES = {
    "hellinger": SQUARED_HELLINGER,
    "hd": SQUARED_HELLINGER,
    "squared-hellinger": SQUARED_HELLINGER,
    "kld": KL,
    "b": BHATTACHARYYA,
}


def normalize_measure(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in PLUGIN_MEASURES:
        raise ParameterError(f"unknown measure {name!r}; choose from {', '.join(PLUGIN_MEASURES)}")
    return key


@dataclass(frozen=True)
class QuadratureGrid:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    nx: int
    ny: int

    @property
    def cell_area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo) / (self.nx * self.ny)

    @property
    def xs(self) -> np.ndarray:
        dx = (self.x_hi - self.x_lo) / self.nx
        return self.x_lo + (np.arange(self.nx) + 0.5) * dx

    @property
    def ys(self) -> np.ndarray:
        dy = (self.y_hi - self.y_lo) / self.ny
        return self.y_lo + (np.arange(self.ny) + 0.5) * dy


@dataclass(frozen=True)
class DivergenceValue:
    measure: str
    value: float
    alpha: float | None = None


def make_quadrature(
    f: DensityEstimate,
    g: DensityEstimate,
    nx: int = DEFAULT_RESOLUTION,
    ny: int | None = None,
) -> QuadratureGrid:
    """Midpoint grid over the padded union of both bounding boxes."""
    ny = nx if ny is None else ny
    if nx < MIN_NODES or ny < MIN_NODES:
        raise ParameterError(f"quadrature needs at least {MIN_NODES} nodes per axis, got {nx}x{ny}")
    pad = PAD_BANDWIDTHS * max(f.h, g.h)
    fx0, fx1, fy0, fy1 = f.bounding_box()
    gx0, gx1, gy0, gy1 = g.bounding_box()
    return QuadratureGrid(
        min(fx0, gx0) - pad,
        max(fx1, gx1) + pad,
        min(fy0, gy0) - pad,
        max(fy1, gy1) + pad,
        int(nx),
        int(ny),
    )


def _densities(g, f, q):
    return g.evaluate_grid(q.xs, q.ys), f.evaluate_grid(q.xs, q.ys)


def affinity_from_values(gv: np.ndarray, fv: np.ndarray, cell_area: float) -> float:
    rho = float(np.sqrt(gv * fv).sum() * cell_area)
    return min(max(rho, 0.0), 1.0)


def kl_from_values(gv, fv, cell_area, log_f=None) -> float:
    """Midpoint sum of ``g log(g / f)`` from node values.

    Nodes where ``g`` underflows contribute nothing.  Where ``f`` underflows
    but ``g`` carries weight, ``log_f(mask)`` supplies the exact
    log-density if given; elsewhere ``f`` is floored.
    """
    use = gv >= FLOOR
    gu = gv[use]
    fu = fv[use]
    log_fu = np.log(np.maximum(fu, FLOOR))
    if log_f is not None and gu.size:
        tiny = (fu < _EXACT_LOG_BELOW) & (gu >= _WEIGHT_RATIO * gu.max())
        if tiny.any():
            mask = np.zeros(gv.shape, dtype=bool)
            mask[use] = tiny
            log_fu[tiny] = log_f(mask)
    return float((gu * (np.log(gu) - log_fu)).sum() * cell_area)


def pe_from_values(gv, fv, cell_area) -> float:
    # PE(g, f) = int g (f/g - 1)^2 with g the denominator.  Nodes where both
    # densities underflow are the 0/0 limit and contribute nothing.
    # g (f/g - 1)^2 == (f - g)^2 / g, which cannot overflow node-wise.
    use = (gv >= FLOOR) | (fv >= FLOOR)
    gu = np.maximum(gv[use], FLOOR)
    fu = fv[use]
    with np.errstate(over="ignore"):
        total = float(((fu - gu) ** 2 / gu).sum() * cell_area)
    return min(total, _LARGEST)


def rpe_from_values(gv, fv, alpha, cell_area) -> float:
    return pe_from_values(alpha * fv + (1.0 - alpha) * gv, fv, cell_area)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")


def hellinger_affinity(g: DensityEstimate, f: DensityEstimate, q: QuadratureGrid | None = None) -> float:
    """Hellinger affinity ``int sqrt(g f)``, clamped to ``[0, 1]``."""
    q = q or make_quadrature(f, g)
    return affinity_from_values(*_densities(g, f, q), q.cell_area)


def affinity_to_distances(rho: float, tol: float = 1e-9) -> tuple[float, float]:
    """Map an affinity to (squared Hellinger, Bhattacharyya) distances.

    Returns ``(2 (1 - rho), -log rho)``; the Bhattacharyya distance is
    ``inf`` when ``rho == 0``.
    """
    if not (-tol <= rho <= 1.0 + tol):
        raise ParameterError(f"affinity must lie in [0, 1], got {rho}")
    rho = min(max(rho, 0.0), 1.0)
    hd = 2.0 * (1.0 - rho)
    b = math.inf if rho == 0.0 else -math.log(rho)
    return hd, b


def kl_divergence(g: DensityEstimate, f: DensityEstimate, q: QuadratureGrid | None = None) -> float:
    """``int g log(g / f)``."""
    q = q or make_quadrature(f, g)
    return measure_on_quadrature(KL, g, f, q)


def pearson_divergence(g: DensityEstimate, f: DensityEstimate, q: QuadratureGrid | None = None) -> float:
    """``int g (f / g - 1)**2``."""
    q = q or make_quadrature(f, g)
    return pe_from_values(*_densities(g, f, q), q.cell_area)


def relative_pearson(
    g: DensityEstimate,
    f: DensityEstimate,
    alpha: float = 0.5,
    q: QuadratureGrid | None = None,
) -> float:
    """Pearson divergence of ``f`` from the mixture ``alpha f + (1 - alpha) g``."""
    _check_alpha(alpha)
    q = q or make_quadrature(f, g)
    gv, fv = _densities(g, f, q)
    return rpe_from_values(gv, fv, alpha, q.cell_area)


def divergence(
    g: DensityEstimate,
    f: DensityEstimate,
    measure: str,
    q: QuadratureGrid | None = None,
    alpha: float = 0.5,
    resolution: int = DEFAULT_RESOLUTION,
) -> DivergenceValue:
    """Compute any plug-in measure by name on one shared quadrature."""
    measure = normalize_measure(measure)
    if measure == RPE:
        _check_alpha(alpha)
    q = q or make_quadrature(f, g, resolution)
    return DivergenceValue(measure, measure_on_quadrature(measure, g, f, q, alpha),
                           alpha if measure == RPE else None)


def _node_log_density(est: DensityEstimate, q: QuadratureGrid):
    def log_density(mask):
        ix, iy = np.nonzero(mask)
        return est.log_evaluate(np.column_stack([q.xs[ix], q.ys[iy]]))

    return log_density


def measure_on_quadrature(measure, g, f, q, alpha=0.5) -> float:
    """Evaluate both densities on ``q`` and reduce to the named measure."""
    gv, fv = _densities(g, f, q)
    log_f = _node_log_density(f, q) if measure == KL else None
    return measure_from_values(measure, gv, fv, q.cell_area, alpha, log_f)


def measure_from_values(measure, gv, fv, cell_area, alpha=0.5, log_f=None) -> float:
    if measure in (AFFINITY, SQUARED_HELLINGER, BHATTACHARYYA):
        rho = affinity_from_values(gv, fv, cell_area)
        if measure == AFFINITY:
            return rho
        hd, b = affinity_to_distances(rho)
        return hd if measure == SQUARED_HELLINGER else b
    if measure == KL:
        return kl_from_values(gv, fv, cell_area, log_f)
    if measure == PE:
        return pe_from_values(gv, fv, cell_area)
    if measure == RPE:
        return rpe_from_values(gv, fv, alpha, cell_area)
    raise ParameterError(f"unknown measure {measure!r}")
