"""Synthetic benchmark distributions (four families) with exact densities.

==========  ==============================================================
Type I      0.4 N(e, 0.25 I) + 0.6 N(-e, 0.25 I), ``e`` the all-ones vector
Type II     each axis 0.7 Beta(2, 10) + 0.3 Unif(0.6, 1.0)
Type III    each axis 0.5 Laplace(0, scale 0.5) + 0.5 Unif(2, 4)
Type IV     axes 1..d-1 Exponential(rate 0.5), last axis Unif(0, 5)
==========  ==============================================================

Types II-IV have independent coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DimensionMismatchError, InvalidDimensionError

__all__ = ["SyntheticKind", "sample_synthetic", "true_pdf", "KINDS"]

KINDS = ("I", "II", "III", "IV")
_ALIASES = {"1": "I", "2": "II", "3": "III", "4": "IV"}


@dataclass(frozen=True)
class SyntheticKind:
    tag: str
    dim: int

    def __post_init__(self):
        tag = str(self.tag).upper()
        if tag.startswith("TYPE"):
            tag = tag[4:]
        tag = _ALIASES.get(tag, tag)
        if tag not in KINDS:
            raise ValueError(f"unknown synthetic type {self.tag!r}; expected one of {KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidDimensionError(f"dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "dim", int(self.dim))


def sample_synthetic(kind, n, rng):
    """Draw ``n`` i.i.d. rows of shape ``(n, kind.dim)``."""
    n, d = int(n), kind.dim
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind.tag == "I":
        pos = rng.random(n) < 0.4
        centers = np.where(pos, 1.0, -1.0)[:, None]
        return centers + 0.5 * rng.standard_normal((n, d))
    if kind.tag == "II":
        pick = rng.random((n, d)) < 0.7
        return np.where(pick, rng.beta(2.0, 10.0, (n, d)), rng.uniform(0.6, 1.0, (n, d)))
    if kind.tag == "III":
        pick = rng.random((n, d)) < 0.5
        return np.where(pick, rng.laplace(0.0, 0.5, (n, d)), rng.uniform(2.0, 4.0, (n, d)))
    out = np.empty((n, d))
    out[:, : d - 1] = rng.exponential(2.0, (n, d - 1))
    out[:, d - 1] = rng.uniform(0.0, 5.0, n)
    return out


def _uniform_pdf(x, a, b):
    return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)


def _marginal_pdf(tag, x):
    if tag == "II":
        return 0.7 * stats.beta.pdf(x, 2.0, 10.0) + 0.3 * _uniform_pdf(x, 0.6, 1.0)
    if tag == "III":
        return 0.5 * np.exp(-np.abs(x) / 0.5) / (2 * 0.5) + 0.5 * _uniform_pdf(x, 2.0, 4.0)
    raise ValueError(tag)


def true_pdf(kind, x):
    """Exact density at a point (shape ``(d,)``) or rows (shape ``(m, d)``)."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    d = kind.dim
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionMismatchError(f"expected points of dimension {d}, got shape {X.shape}")
    if kind.tag == "I":
        norm = (2 * math.pi * 0.25) ** (-d / 2)
        plus = np.sum((X - 1.0) ** 2, axis=1)
        minus = np.sum((X + 1.0) ** 2, axis=1)
        out = norm * (0.4 * np.exp(-plus / 0.5) + 0.6 * np.exp(-minus / 0.5))
    elif kind.tag == "IV":
        head = X[:, : d - 1]
        expo = np.where(head >= 0, 0.5 * np.exp(-0.5 * np.abs(head)), 0.0)
        out = np.prod(expo, axis=1) * _uniform_pdf(X[:, d - 1], 0.0, 5.0)
    else:
        out = np.prod(_marginal_pdf(kind.tag, X), axis=1)
    return out[0] if single else out
