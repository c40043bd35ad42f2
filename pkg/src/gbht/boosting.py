"""Gradient boosting of random histogram-transform densities under NLL loss."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, InsufficientDataError, InvariantError
from .ht import HtDensity, _group, _check_data, _weighted_masses, normalize_mode
from .transform import ScaleParams, _as_rows, reference_scale, sample_transform

__all__ = [
    "GbhtConfig",
    "GbhtModel",
    "init_f0",
    "line_search_alpha",
    "mixture_weights",
    "boost_step",
    "fit_gbht",
    "gbht_density_at",
    "gbht_log_density_at",
]


@dataclass(frozen=True)
class GbhtConfig:
    iterations: int = 100
    s_min: float = -1.0
    s_max: float = 0.0
    learner_mode: str = "greedy"
    shrinkage: float = 1.0
    alpha_upper: float = 1.0 - 1e-6
    alpha_tolerance: float = 1e-8
    density_floor: float = 1e-12
    seed: int = 0
    line_search: str = "golden"

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a nonnegative integer, got {self.iterations}")
        if not self.s_min < self.s_max:
            raise ValueError(f"s_min ({self.s_min}) must be < s_max ({self.s_max})")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage must lie in (0, 1], got {self.shrinkage}")
        if not 0.0 <= self.alpha_upper < 1.0:
            raise ValueError(f"alpha_upper must lie in [0, 1), got {self.alpha_upper}")
        if not self.alpha_tolerance > 0:
            raise ValueError("alpha_tolerance must be positive")
        if not self.density_floor >= 0:
            raise ValueError("density_floor must be nonnegative")
        if self.line_search not in ("golden", "newton"):
            raise ValueError(f"line_search must be 'golden' or 'newton', got {self.line_search!r}")
        object.__setattr__(self, "learner_mode", normalize_mode(self.learner_mode))

    def scale_params(self, data):
        return ScaleParams(self.s_min, self.s_max, reference_scale(data))

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class GbhtModel:
    """Boosted mixture ``w0 * F0 + sum_j w_j * f_j``.

    ``train_nll_trace[t]`` is the mean training NLL after ``t`` iterations,
    so it has one more entry than ``alphas``.
    """

    f0: HtDensity
    components: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    mixture_weights: np.ndarray = None
    train_nll_trace: list = field(default_factory=list)
    config: GbhtConfig = None
    scale_params: ScaleParams = None

    def __post_init__(self):
        if self.mixture_weights is None:
            self.mixture_weights = mixture_weights(self.alphas)
        self.mixture_weights = np.asarray(self.mixture_weights, dtype=np.float64)
        if self.mixture_weights.shape[0] != len(self.components) + 1:
            raise InvariantError("one mixture weight per component plus F0 is required")

    @property
    def dim(self):
        return self.f0.dim

    @property
    def n_iterations(self):
        return len(self.components)

    def density(self, X):
        return gbht_density_at(self, X)


def mixture_weights(alphas):
    """Weights of ``F0, f_1, ..., f_T`` implied by the step sizes.

    ``w_j = alpha_j * prod_{k>j} (1 - alpha_k)`` and ``w_0 = prod_k (1 - alpha_k)``.
    """
    w = np.ones(1)
    for a in alphas:
        w = np.append(w * (1.0 - a), a)
    return w


def init_f0(data, t0):
    """Uniform density over the cells of ``t0`` that contain training points."""
    X = _check_data(data, t0)
    index, _, _ = _group(X, t0, np.ones(X.shape[0]))
    m = len(index.cells)
    masses = np.full(m, 1.0 / (m * t0.cell_volume))
    return HtDensity(t0, index.cells, masses, index)


def line_search_alpha(prev_vals, cand_vals, cfg=None):
    """Step size minimizing ``sum(-log((1-a)*prev + a*cand))`` over ``[0, alpha_upper]``.

    Golden-section search to ``alpha_tolerance`` (or safeguarded Newton when
    ``cfg.line_search == "newton"``); ``0`` is returned unless a candidate
    strictly improves on it.
    """
    cfg = cfg or GbhtConfig()
    prev = np.asarray(prev_vals, dtype=np.float64)
    cand = np.asarray(cand_vals, dtype=np.float64)
    if prev.shape != cand.shape:
        raise DimensionMismatchError("prev_vals and cand_vals differ in shape")
    if np.any(~(prev > 0)):
        raise InvariantError("current model density must be positive at every training point")
    if cfg.alpha_upper == 0.0:
        return 0.0
    if cfg.line_search == "newton":
        return kernels.newton_alpha(prev, cand, cfg.alpha_upper, cfg.alpha_tolerance)
    return kernels.golden_section_alpha(prev, cand, cfg.alpha_upper, cfg.alpha_tolerance)


def _fit_learner(X, weights, t, mode):
    """Weak learner plus its values at the training rows."""
    index, inverse, W = _group(X, t, weights)
    masses = _weighted_masses(W, t.cell_volume, mode)
    values = masses[inverse]
    if mode == "greedy":
        keep = masses > 0
        return HtDensity(t, index.cells[keep], masses[keep]), values
    return HtDensity(t, index.cells, masses, index), values


def _step(X, current, rng, cfg, params):
    """One boosting iteration; returns (learner, alpha, new training densities, new nll)."""
    t = sample_transform(rng, X.shape[1], params)
    weights = 1.0 / current
    learner, cand = _fit_learner(X, weights, t, cfg.learner_mode)
    alpha = line_search_alpha(current, cand, cfg)
    g0 = kernels.mixture_nll(current, cand, 0.0)
    if cfg.shrinkage != 1.0:
        alpha *= cfg.shrinkage
    g = kernels.mixture_nll(current, cand, alpha)
    if not g <= g0:
        # rounding can undo a vanishing improvement; fall back to the no-op
        alpha, g = 0.0, g0
    new = (1.0 - alpha) * current + alpha * cand
    return learner, alpha, new, g / X.shape[0]


def _prepare(data, d_expected=None):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatchError(f"data must be 2-D, got shape {X.shape}")
    if d_expected is not None and X.shape[1] != d_expected:
        raise DimensionMismatchError(f"data has {X.shape[1]} columns, model has {d_expected}")
    if X.shape[0] < 1:
        raise InsufficientDataError("data is empty")
    return X


def boost_step(model, data, rng, cfg=None, current=None):
    """Return a new model with one more boosting iteration.

    ``current`` may carry the model's densities at ``data`` to avoid
    re-evaluating the whole mixture.
    """
    cfg = cfg or model.config
    X = _prepare(data, model.dim)
    if current is None:
        current = gbht_density_at(model, X)
    params = model.scale_params or cfg.scale_params(X)
    learner, alpha, _, nll = _step(X, np.asarray(current, dtype=np.float64), rng, cfg, params)
    alphas = list(model.alphas) + [alpha]
    w = np.append(model.mixture_weights * (1.0 - alpha), alpha)
    return dataclasses.replace(
        model,
        components=list(model.components) + [learner],
        alphas=alphas,
        mixture_weights=w,
        train_nll_trace=list(model.train_nll_trace) + [nll],
        config=cfg,
        scale_params=params,
    )


def fit_gbht(data, cfg, rng=None, callback=None):
    """Fit a boosted histogram-transform density.

    Parameters
    ----------
    data : array of shape (n, d), n >= 2
    cfg : GbhtConfig
    rng : numpy.random.Generator, optional
        Defaults to ``default_rng(cfg.seed)``.
    callback : callable, optional
        Called as ``callback(t, learner, alpha)`` after each iteration.

    Returns
    -------
    GbhtModel
    """
    X = _prepare(data)
    if X.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {X.shape[0]}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    params = cfg.scale_params(X)
    f0 = init_f0(X, sample_transform(rng, X.shape[1], params))
    current = f0(X)
    trace = [kernels.mixture_nll(current, current, 0.0) / X.shape[0]]
    components, alphas = [], []
    w = np.ones(1)
    for t in range(cfg.iterations):
        learner, alpha, current, nll = _step(X, current, rng, cfg, params)
        components.append(learner)
        alphas.append(alpha)
        w = np.append(w * (1.0 - alpha), alpha)
        trace.append(nll)
        if callback is not None:
            callback(t + 1, learner, alpha)
    return GbhtModel(f0, components, alphas, w, trace, cfg, params)


def gbht_density_at(model, x):
    X, single = _as_rows(x, model.dim)
    w = model.mixture_weights
    out = w[0] * model.f0(X)
    for wj, f in zip(w[1:], model.components):
        if wj != 0.0:
            out += wj * f(X)
    return out[0] if single else out


def gbht_log_density_at(model, x, cfg=None, floor=None):
    """``log(max(density, floor))``; with a zero floor, empty cells give ``-inf``."""
    if floor is None:
        floor = (cfg or model.config or GbhtConfig()).density_floor
    dens = gbht_density_at(model, x)
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(dens, floor))
