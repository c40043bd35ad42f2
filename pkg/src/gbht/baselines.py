"""Baseline estimators: Gaussian-kernel KDE and a Sturges-rule histogram."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDataError, DimensionMismatchError, InsufficientDataError
from .transform import _as_rows

__all__ = [
    "KdeModel",
    "HdeModel",
    "fit_kde",
    "kde_density_at",
    "silverman_bandwidth",
    "sturges_bins",
    "fit_hde",
    "hde_density_at",
]


def _matrix(data, min_rows=2):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatchError(f"data must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InsufficientDataError(f"need at least {min_rows} rows, got {X.shape[0]}")
    return X


@dataclass(frozen=True, eq=False)
class KdeModel:
    support_points: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def dim(self):
        return self.support_points.shape[1]

    def __call__(self, x):
        return kde_density_at(self, x)


def silverman_bandwidth(data):
    """``sigma * (4 / ((d + 2) n)) ** (1 / (d + 4))`` with ``sigma = sqrt(trace(V)/d)``."""
    X = _matrix(data)
    n, d = X.shape
    centered = X - X.mean(axis=0)
    sigma = math.sqrt(float(np.einsum("ij,ij->", centered, centered)) / (n - 1) / d)
    if sigma == 0.0:
        raise DegenerateDataError("all rows are identical (zero standard deviation)")
    return sigma * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))


def fit_kde(data, rule="silverman"):
    """Gaussian product-kernel KDE.

    ``rule`` is ``"silverman"`` or a positive float used as a fixed bandwidth.
    """
    if isinstance(rule, str):
        if rule != "silverman":
            raise ValueError(f"unknown bandwidth rule {rule!r}")
        X = _matrix(data)
        h = silverman_bandwidth(X)
    else:
        X = _matrix(data, min_rows=1)
        h = float(rule)
    return KdeModel(X.copy(), h)


def kde_density_at(m, x):
    X, single = _as_rows(x, m.dim)
    h = m.bandwidth
    n, d = m.support_points.shape
    sums = kernels.kde_kernel_sum(X, m.support_points, h)
    out = sums / (n * (h * math.sqrt(2.0 * math.pi)) ** d)
    return out[0] if single else out


def sturges_bins(n):
    return math.ceil(math.log2(n)) + 1


@dataclass(frozen=True, eq=False)
class HdeModel:
    """Fixed axis-aligned grid histogram over the data's bounding box."""

    lo: np.ndarray
    hi: np.ndarray
    bins_per_axis: int
    density: dict

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def bin_volume(self):
        return float(np.prod((self.hi - self.lo) / self.bins_per_axis))

    def total_mass(self):
        return sum(self.density.values()) * self.bin_volume

    def grid_index(self, X):
        k = self.bins_per_axis
        idx = np.floor((X - self.lo) / (self.hi - self.lo) * k).astype(np.int64)
        # the upper edge belongs to the last bin
        idx[X == self.hi] = k - 1
        return np.minimum(idx, k - 1)

    def __call__(self, x):
        return hde_density_at(self, x)


def fit_hde(data):
    """Histogram with ``ceil(log2 n) + 1`` bins per axis (Sturges' rule)."""
    X = _matrix(data)
    n = X.shape[0]
    lo, hi = X.min(axis=0), X.max(axis=0)
    if np.any(hi <= lo):
        raise DegenerateDataError("zero range on at least one axis")
    k = sturges_bins(n)
    model = HdeModel(lo, hi, k, {})
    cells, counts = np.unique(model.grid_index(X), axis=0, return_counts=True)
    vol = model.bin_volume
    model.density.update(
        (tuple(c), cnt / (n * vol)) for c, cnt in zip(cells.tolist(), counts.tolist())
    )
    return model


def hde_density_at(m, x):
    X, single = _as_rows(x, m.dim)
    inside = np.all((X >= m.lo) & (X <= m.hi), axis=1)
    out = np.zeros(X.shape[0])
    rows = np.flatnonzero(inside)
    if rows.size:
        idx = m.grid_index(X[rows])
        out[rows] = [m.density.get(tuple(c), 0.0) for c in idx.tolist()]
    return out[0] if single else out
