"""Gradient-boosted histogram-transform density estimation."""

__version__ = "0.1.0"

from .anomaly import AnomalyResult, anomaly_scores, contamination_threshold, detect
from .baselines import fit_hde, fit_kde, hde_density_at, kde_density_at
from .boosting import (
    GbhtConfig,
    GbhtModel,
    boost_step,
    fit_gbht,
    gbht_density_at,
    gbht_log_density_at,
    init_f0,
    line_search_alpha,
    mixture_weights,
)
from .data_io import load_csv, load_model, minmax_scale, pca_reduce, save_model, write_csv
from .evaluation import CvResult, EvalReport, anll, auc, cross_validate, mae
from .ht import HtDensity, fit_ht, fit_weighted_ht, ht_density_at
from .synthetic import SyntheticKind, sample_synthetic, true_pdf
from .transform import (
    HistogramTransform,
    ScaleParams,
    apply_transform,
    bin_index,
    cell_volume,
    reference_scale,
    sample_rotation,
    sample_stretching,
    sample_transform,
    sample_translation,
)
