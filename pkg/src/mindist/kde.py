"""Bivariate Gaussian kernel density estimation.

The kernel is the standard 2-D Gaussian with identity covariance and a
single scalar bandwidth ``h = sigma * n**(-1/6)``, where ``sigma**2`` is the
mean of the two unbiased component variances.  Evaluation is always the full
kernel sum; on tensor-product grids the kernel factorises, which turns the
sum into one matrix product without any approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateDataError, ParameterError

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class VelocityDataset:
    """An ``(n, 2)`` array of velocity pairs, in file order."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DegenerateDataError(f"velocity data must be n x 2, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise DegenerateDataError(f"need at least 2 samples, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise DegenerateDataError("velocity data contain non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def __len__(self):
        return self.n


def _as_points(data) -> np.ndarray:
    if isinstance(data, VelocityDataset):
        return data.samples
    return VelocityDataset(data).samples


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Fitted Gaussian KDE: the data points and a scalar bandwidth.

    Constructing one directly allows ``n = 1``; a single point with ``h = 1``
    is exactly the standard normal density centred at that point.
    """

    points: np.ndarray
    h: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True).reshape(-1, 2)
        if pts.shape[0] < 1:
            raise ParameterError("a density estimate needs at least one point")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ParameterError(f"bandwidth must be positive and finite, got {self.h}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def evaluate(self, at) -> np.ndarray:
        """Density at each row of an ``(m, 2)`` array."""
        at = np.atleast_2d(np.asarray(at, dtype=float))
        out = np.empty(at.shape[0])
        inv_h = 1.0 / self.h
        scale = 1.0 / (2.0 * math.pi * self.n * self.h**2)
        for start in range(0, at.shape[0], _CHUNK):
            block = at[start:start + _CHUNK]
            dx = (block[:, None, 0] - self.points[None, :, 0]) * inv_h
            dy = (block[:, None, 1] - self.points[None, :, 1]) * inv_h
            out[start:start + _CHUNK] = scale * np.exp(-0.5 * (dx * dx + dy * dy)).sum(axis=1)
        return out

    def log_evaluate(self, at) -> np.ndarray:
        """Log-density at each row of ``at``, exact even where the density underflows."""
        at = np.atleast_2d(np.asarray(at, dtype=float))
        out = np.empty(at.shape[0])
        inv_h = 1.0 / self.h
        log_scale = -math.log(2.0 * math.pi * self.n * self.h**2)
        for start in range(0, at.shape[0], _CHUNK):
            block = at[start:start + _CHUNK]
            dx = (block[:, None, 0] - self.points[None, :, 0]) * inv_h
            dy = (block[:, None, 1] - self.points[None, :, 1]) * inv_h
            out[start:start + _CHUNK] = log_scale + logsumexp(-0.5 * (dx * dx + dy * dy), axis=1)
        return out

    def evaluate_grid(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Density on the tensor grid ``xs x ys``; result has shape ``(nx, ny)``.

        Uses ``exp(-(dx^2+dy^2)/2) = exp(-dx^2/2) * exp(-dy^2/2)`` so the
        kernel sum becomes ``Kx.T @ Ky``.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        inv_h = 1.0 / self.h
        kx = np.exp(-0.5 * ((xs[None, :] - self.points[:, 0:1]) * inv_h) ** 2)
        ky = np.exp(-0.5 * ((ys[None, :] - self.points[:, 1:2]) * inv_h) ** 2)
        scale = 1.0 / (2.0 * math.pi * self.n * self.h**2)
        return scale * (kx.T @ ky)


def bandwidth(data) -> float:
    """Bandwidth ``sigma * n**(-1/6)`` with ``sigma**2 = (s_x**2 + s_y**2) / 2``.

    Sample variances use the ``n - 1`` denominator.

    Raises
    ------
    DegenerateDataError
        If fewer than two points are given or all points coincide.
    """
    pts = _as_points(data)
    n = pts.shape[0]
    var = pts.var(axis=0, ddof=1)
    sigma2 = 0.5 * float(var[0] + var[1])
    if not sigma2 > 0:
        raise DegenerateDataError("zero total variance: all samples are identical")
    return math.sqrt(sigma2) * n ** (-1.0 / 6.0)


def fit_kde(data, h: float | None = None) -> DensityEstimate:
    """Fit a KDE; ``h`` overrides the bandwidth rule when given."""
    pts = _as_points(data)
    if h is None:
        h = bandwidth(pts)
    return DensityEstimate(pts, h)


def eval_kde(est: DensityEstimate, at) -> float:
    """Density of ``est`` at a single point ``(x, y)``."""
    x, y = at
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ParameterError(f"evaluation point must be finite, got {at!r}")
    return float(est.evaluate([[x, y]])[0])


def sample_kde(est: DensityEstimate, m: int, rng: np.random.Generator) -> VelocityDataset:
    """Smoothed bootstrap draw of ``m`` points from ``est``.

    Each point is a uniformly resampled data point plus ``h`` times a
    standard bivariate normal vector.
    """
    if m < 2:
        raise ParameterError(f"sample size must be at least 2, got {m}")
    idx = rng.integers(0, est.n, size=m)
    noise = rng.standard_normal((m, 2))
    return VelocityDataset(est.points[idx] + est.h * noise)
