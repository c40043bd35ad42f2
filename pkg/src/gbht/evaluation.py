"""Accuracy metrics and k-fold cross-validation over scale parameters."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .boosting import GbhtConfig, fit_gbht, gbht_log_density_at
from .errors import DimensionMismatchError, InsufficientDataError

__all__ = [
    "EvalReport",
    "CvResult",
    "mae",
    "anll",
    "auc",
    "fold_indices",
    "parse_grid",
    "cross_validate",
]

REPORT_FORMAT = 1


@dataclass
class EvalReport:
    anll: float
    mae: float = None
    auc: float = None
    n_test: int = 0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mae is not None and not self.mae >= 0:
            raise ValueError("mae must be nonnegative")
        if self.auc is not None and not 0.0 <= self.auc <= 1.0:
            raise ValueError("auc must lie in [0, 1]")

    def to_dict(self):
        return {
            "anll": self.anll,
            "mae": self.mae,
            "auc": self.auc,
            "n_test": self.n_test,
            "config": self.config,
            "format": REPORT_FORMAT,
        }


@dataclass
class CvResult:
    """Grid table and the selected ``(s_min, s_max)``.

    Each row of ``table`` is ``(s_min, s_max, fold_anlls, mean_anll)`` in grid order.
    """

    table: list
    chosen: tuple
    folds: int

    def to_dict(self):
        return {
            "table": [
                {"s_min": a, "s_max": b, "fold_anll": list(f), "mean_anll": m}
                for a, b, f, m in self.table
            ],
            "chosen": {"s_min": self.chosen[0], "s_max": self.chosen[1]},
            "folds": self.folds,
            "format": REPORT_FORMAT,
        }


def _paired(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise InsufficientDataError("empty input")
    return a, b


def mae(estimates, truths):
    est, tru = _paired(estimates, truths)
    return float(np.mean(np.abs(est - tru)))


def anll(log_densities):
    """Average negative log-likelihood; ``-inf`` entries give ``+inf``."""
    v = np.asarray(log_densities, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise InsufficientDataError("empty input")
    return float(-np.mean(v))


def auc(scores, labels):
    """Mann-Whitney AUC: P(score+ > score-) + P(tie)/2, via average ranks."""
    s, y = _paired(scores, labels)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary (0/1)")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("labels must contain both classes")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def fold_indices(n, folds, rng):
    """Random balanced partition of ``range(n)``; sizes differ by at most one."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise InsufficientDataError(f"{n} rows cannot fill {folds} folds")
    return np.array_split(rng.permutation(n), folds)


def parse_grid(text):
    """Parse ``start:step:stop`` (inclusive stop) or a comma list into floats."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = map(float, parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError(f"empty grid {text!r}")
        return [round(start + k * step, 12) for k in range(count)]
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


def _score_pair(X, folds_idx, cfg, fold_seeds):
    out = []
    for k, val in enumerate(folds_idx):
        train = np.concatenate([f for j, f in enumerate(folds_idx) if j != k])
        model = fit_gbht(X[train], cfg, np.random.default_rng(fold_seeds[k]))
        out.append(anll(gbht_log_density_at(model, X[val], cfg)))
    return out


def cross_validate(data, base_cfg, smin_grid, gap_grid, folds=3, rng=None, threads=1):
    """Grid search over ``(s_min, s_min + gap)`` by k-fold validation ANLL.

    Every grid point uses the same fold split and the same per-fold random
    streams, so grid points differ only through their scale range. Ties go
    to the earlier grid entry (smaller ``s_min``, then smaller gap).
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    smin_grid, gap_grid = list(smin_grid), list(gap_grid)
    if not smin_grid or not gap_grid:
        raise ValueError("grid is empty")
    if any(g <= 0 for g in gap_grid):
        raise ValueError("gaps must be positive")
    if rng is None:
        rng = np.random.default_rng(base_cfg.seed)
    folds_idx = fold_indices(X.shape[0], folds, rng)
    base = int(rng.integers(2**63))
    fold_seeds = [[base, k] for k in range(folds)]
    pairs = [(a, a + g) for a in smin_grid for g in gap_grid]
    cfgs = [dataclasses.replace(base_cfg, s_min=a, s_max=b) for a, b in pairs]

    def run(cfg):
        return _score_pair(X, folds_idx, cfg, fold_seeds)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cfgs))
    else:
        results = [run(c) for c in cfgs]
    table = [(a, b, tuple(r), float(np.mean(r))) for (a, b), r in zip(pairs, results)]
    best = min(range(len(table)), key=lambda i: (table[i][3], i))
    return CvResult(table, (table[best][0], table[best][1]), folds)
