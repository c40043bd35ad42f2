"""Random histogram transforms ``H(x) = R @ diag(s) @ x + b`` and bin indexing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    InsufficientDataError,
    InvalidDimensionError,
)

__all__ = [
    "ScaleParams",
    "HistogramTransform",
    "sample_rotation",
    "reference_scale",
    "sample_stretching",
    "sample_translation",
    "sample_transform",
    "apply_transform",
    "bin_index",
    "cell_volume",
]


@dataclass(frozen=True)
class ScaleParams:
    """Log-scale offsets around a data-driven reference scale.

    Log-scales are drawn from ``[s_min + log(reference_scale),
    s_max + log(reference_scale)]``.
    """

    s_min: float
    s_max: float
    reference_scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.s_min) and math.isfinite(self.s_max)):
            raise ValueError("s_min and s_max must be finite")
        if not self.s_min < self.s_max:
            raise ValueError(f"s_min ({self.s_min}) must be < s_max ({self.s_max})")
        if not (self.reference_scale > 0 and math.isfinite(self.reference_scale)):
            raise ValueError("reference_scale must be a finite positive number")

    @property
    def log_bounds(self):
        base = math.log(self.reference_scale)
        return self.s_min + base, self.s_max + base

    @property
    def lower_scale(self):
        return math.exp(self.log_bounds[0])

    @property
    def upper_scale(self):
        return math.exp(self.log_bounds[1])

    @property
    def min_bin_width(self):
        return 1.0 / self.upper_scale

    @property
    def max_bin_width(self):
        return 1.0 / self.lower_scale


@dataclass(frozen=True, eq=False)
class HistogramTransform:
    rotation: np.ndarray
    scales: np.ndarray
    translation: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64, ndmin=2)
        s = np.array(self.scales, dtype=np.float64, ndmin=1)
        b = np.array(self.translation, dtype=np.float64, ndmin=1)
        d = s.shape[0]
        if d < 1 or R.shape != (d, d) or b.shape != (d,):
            raise DimensionMismatchError(
                f"inconsistent shapes: rotation {R.shape}, scales {s.shape}, "
                f"translation {b.shape}"
            )
        if not np.all(np.isfinite(s)) or np.any(s <= 0) or np.any(~np.isfinite(1.0 / s)):
            raise ValueError("scales must be finite and positive")
        if np.any(b < 0) or np.any(b >= 1):
            raise ValueError("translation components must lie in [0, 1)")
        for arr in (R, s, b):
            arr.setflags(write=False)
        M = R * s  # R @ diag(s)
        M.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "translation", b)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.scales.shape[0]

    @property
    def bin_widths(self):
        return 1.0 / self.scales

    @property
    def cell_volume(self):
        return float(np.prod(1.0 / self.scales))

    def same_as(self, other):
        """Bitwise equality of all fields."""
        return (
            np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.scales, other.scales)
            and np.array_equal(self.translation, other.translation)
        )

    def apply(self, X):
        X, single = _as_rows(X, self.dim)
        out = X @ self.matrix.T + self.translation
        return out[0] if single else out

    def bins(self, X):
        X, single = _as_rows(X, self.dim)
        out = kernels.transformed_bins(X, self.matrix, self.translation)
        return out[0] if single else out


def _as_rows(X, d):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionMismatchError(f"expected points of dimension {d}, got shape {X.shape}")
    return X, single


def sample_rotation(rng, d):
    """Haar-distributed proper rotation via QR of a Gaussian matrix.

    The QR factor signs are normalized so the triangular factor has a
    positive diagonal; if the result is a reflection, its first column is
    negated.
    """
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    return kernels.positive_qr(rng.standard_normal((d, d)))


def reference_scale(data):
    """Reciprocal of the reference bin width ``3.5 * sigma * n**(-1/(2+d))``.

    ``sigma`` is ``sqrt(trace(V)/d)`` with ``V`` the unbiased sample covariance.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data must be finite")
    centered = X - X.mean(axis=0)
    trace = float(np.einsum("ij,ij->", centered, centered)) / (n - 1)
    sigma = math.sqrt(trace / d)
    if sigma == 0.0:
        raise DegenerateDataError("all rows are identical (zero standard deviation)")
    return n ** (1.0 / (2 + d)) / (3.5 * sigma)


def sample_stretching(rng, d, params):
    lo, hi = params.log_bounds
    return np.exp(rng.uniform(lo, hi, size=int(d)))


def sample_translation(rng, d):
    return rng.random(int(d))


def sample_transform(rng, d, params):
    # draw order (rotation, stretching, translation) is part of the
    # reproducibility contract
    R = sample_rotation(rng, d)
    s = sample_stretching(rng, d, params)
    b = sample_translation(rng, d)
    return HistogramTransform(R, s, b)


def apply_transform(t, x):
    return t.apply(x)


def bin_index(t, x):
    return t.bins(x)


def cell_volume(t):
    return t.cell_volume
