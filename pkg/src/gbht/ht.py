"""Piecewise-constant densities on the cells of one histogram transform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, InsufficientDataError
from .transform import HistogramTransform, _as_rows

__all__ = [
    "HtDensity",
    "CellIndex",
    "fit_ht",
    "fit_weighted_ht",
    "ht_density_at",
    "LEARNER_MODES",
    "normalize_mode",
]

LEARNER_MODES = ("weighted", "greedy")
_MODE_ALIASES = {
    "weighted": "weighted",
    "weighted-histogram": "weighted",
    "greedy": "greedy",
    "greedy-cell": "greedy",
}

def normalize_mode(mode):
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(
            f"unknown learner mode {mode!r}; expected one of {sorted(_MODE_ALIASES)}"
        ) from None


class CellIndex:
    """Exact lookup from integer bin vectors to positions in a sorted cell table.

    Cells are encoded as mixed-radix int64 keys relative to the bounding box
    of the stored cells, with the first axis most significant, so key order is
    lexicographic order. Queries outside the box cannot match a stored cell.
    When the box is too large for int64 keys a dict keyed by tuples is used.
    """

    def __init__(self, cells, encoding=None):
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.cells = cells
        self._table = None
        if encoding is not None:
            self.lo, self.span, self.stride, self.keys = encoding
            self.exact = True
            return
        d = cells.shape[1]
        self.lo = cells.min(axis=0) if len(cells) else np.zeros(d, np.int64)
        self.span = (cells.max(axis=0) - self.lo + 1) if len(cells) else np.ones(d, np.int64)
        self.exact = not kernels._box_overflows(self.span)
        if self.exact:
            self.stride = kernels._strides(self.span)
            self.keys = kernels.encode_bins(cells, self.lo, self.span, self.stride)
        else:
            self.stride = None
            self.keys = None
            self._table = {tuple(row): i for i, row in enumerate(cells.tolist())}

    def positions_of_bins(self, idx):
        """Position of each bin vector in the table, ``-1`` when absent."""
        if self.exact:
            return self._positions_of_keys(
                kernels.encode_bins(idx, self.lo, self.span, self.stride)
            )
        return np.array([self._table.get(tuple(r), -1) for r in idx.tolist()], dtype=np.int64)

    def positions_of_points(self, X, transform):
        if self.exact:
            keys = kernels.query_keys(
                X, transform.matrix, transform.translation, self.lo, self.span, self.stride
            )
            return self._positions_of_keys(keys)
        return self.positions_of_bins(transform.bins(X))

    def _positions_of_keys(self, keys):
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        found = (keys >= 0) & (len(self.keys) > 0)
        if len(self.keys):
            found &= self.keys[pos] == keys
        return np.where(found, pos, -1)


@dataclass(frozen=True, eq=False)
class HtDensity:
    """Density constant on each occupied cell of ``transform``; zero elsewhere.

    ``cells`` holds the occupied bin vectors in lexicographic order and
    ``masses`` the density value (not probability) on each.
    """

    transform: HistogramTransform
    cells: np.ndarray
    masses: np.ndarray
    index: CellIndex = field(default=None, repr=False)

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.int64).reshape(-1, self.transform.dim)
        masses = np.ascontiguousarray(self.masses, dtype=np.float64).reshape(-1)
        if cells.shape[0] != masses.shape[0]:
            raise DimensionMismatchError("cells and masses differ in length")
        if np.any(masses < 0):
            raise ValueError("cell masses must be nonnegative")
        index = self.index if self.index is not None else CellIndex(cells)
        cells.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "index", index)

    @property
    def dim(self):
        return self.transform.dim

    @property
    def cell_volume(self):
        return self.transform.cell_volume

    @property
    def cell_mass(self):
        """Sparse map ``tuple(bin index) -> density``."""
        return {tuple(c): float(m) for c, m in zip(self.cells.tolist(), self.masses)}

    def total_mass(self):
        return float(np.sum(self.masses) * self.cell_volume)

    def __call__(self, X):
        X, single = _as_rows(X, self.dim)
        pos = self.index.positions_of_points(X, self.transform)
        out = np.where(pos >= 0, self.masses[np.maximum(pos, 0)], 0.0)
        return out[0] if single else out


def _check_data(data, t):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1 and t.dim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != t.dim:
        raise DimensionMismatchError(f"data shape {X.shape} does not match transform dim {t.dim}")
    if X.shape[0] < 1:
        raise InsufficientDataError("data is empty")
    return X


def _group(X, t, weights):
    """Occupied cells of ``t`` with per-row cell ids and per-cell weight sums."""
    cells, inverse, W, encoding = kernels.group_bins(X, t.matrix, t.translation, weights)
    return CellIndex(cells, encoding), inverse, W


def fit_ht(data, t):
    """Empirical histogram on the cells of ``t``: ``count / (n * volume)``."""
    X = _check_data(data, t)
    index, _, counts = _group(X, t, np.ones(X.shape[0]))
    masses = (counts / X.shape[0]) / t.cell_volume
    return HtDensity(t, index.cells, masses, index)


def _weighted_masses(W, vol, mode):
    if mode == "weighted":
        return (W / W.sum()) / vol
    masses = np.zeros_like(W)
    # cells are in lexicographic order, argmax takes the first maximizer
    masses[int(np.argmax(W))] = 1.0 / vol
    return masses


def fit_weighted_ht(data, weights, t, mode="weighted"):
    """Fit a density on the cells of ``t`` under positive sample weights.

    Parameters
    ----------
    data : array of shape (n, d)
    weights : array of shape (n,)
        Strictly positive, finite.
    t : HistogramTransform
    mode : {"weighted", "greedy"}
        ``"weighted"`` sets each cell's probability to its share of the total
        weight (the weighted maximum-likelihood histogram). ``"greedy"`` puts
        all mass on the cell with the largest weight per unit volume, which
        maximizes ``sum(weights * f(x))`` over the cell simplex.
    """
    mode = normalize_mode(mode)
    X = _check_data(data, t)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"{w.shape[0]} weights for {X.shape[0]} points")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be positive and finite")
    index, _, W = _group(X, t, w)
    masses = _weighted_masses(W, t.cell_volume, mode)
    if mode == "greedy":
        keep = masses > 0
        return HtDensity(t, index.cells[keep], masses[keep])
    return HtDensity(t, index.cells, masses, index)


def ht_density_at(f, x):
    return f(x)
