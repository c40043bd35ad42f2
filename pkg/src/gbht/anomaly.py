"""Density-threshold anomaly detection on a fitted boosted model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boosting import gbht_density_at

__all__ = ["AnomalyResult", "anomaly_scores", "detect", "contamination_threshold", "score"]


@dataclass(frozen=True, eq=False)
class AnomalyResult:
    scores: np.ndarray
    flags: np.ndarray
    threshold: float


def anomaly_scores(model, data):
    """Negated model density; larger means more anomalous."""
    return -np.atleast_1d(gbht_density_at(model, data))


def detect(model, data, rho):
    """Flag rows whose model density is at most ``rho``."""
    if not rho >= 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    return np.atleast_1d(gbht_density_at(model, data)) <= rho


def contamination_threshold(model, data, contamination):
    """Threshold equal to the empirical ``contamination``-quantile of densities."""
    if not 0.0 <= contamination <= 1.0:
        raise ValueError("contamination must lie in [0, 1]")
    return float(np.quantile(np.atleast_1d(gbht_density_at(model, data)), contamination))


def score(model, data, rho=None, contamination=None):
    if rho is not None and contamination is not None:
        raise ValueError("pass at most one of rho and contamination")
    dens = np.atleast_1d(gbht_density_at(model, data))
    if contamination is not None:
        rho = float(np.quantile(dens, contamination))
    elif rho is None:
        rho = 0.0
    if not rho >= 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    return AnomalyResult(-dens, dens <= rho, float(rho))
