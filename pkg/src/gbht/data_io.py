"""CSV ingestion, preprocessing and JSON model persistence."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import jsonschema
import numpy as np

from .boosting import GbhtConfig, GbhtModel
from .errors import CsvParseError, InsufficientDataError, SchemaError
from .ht import HtDensity
from .transform import HistogramTransform, ScaleParams

__all__ = [
    "Dataset",
    "PcaProjection",
    "load_csv",
    "write_csv",
    "minmax_scale",
    "pca_reduce",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "MODEL_FORMAT",
]

MODEL_FORMAT = 1


@dataclass(eq=False)
class Dataset:
    matrix: np.ndarray
    labels: np.ndarray = None
    columns: list = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("matrix contains NaN or Inf")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.matrix.shape[0],):
                raise ValueError("labels must have one entry per row")
            if not np.all((self.labels == 0) | (self.labels == 1)):
                raise ValueError("labels must be binary (0/1)")
            self.labels = self.labels.astype(np.int64)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def d(self):
        return self.matrix.shape[1]


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_csv(path, label_column=None):
    """Read a comma-separated numeric file.

    A header is assumed when the first row has any non-numeric token.
    ``label_column`` (a header name, or a 0-based index when there is no
    header) is split out as binary labels.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError(f"{path}: no data rows", row=1)
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    width = len(header) if header else len(rows[0]) if rows else 0
    values = []
    for i, r in enumerate(rows):
        line = first_line + i
        if len(r) != width:
            raise CsvParseError(
                f"{path}: row {line} has {len(r)} fields, expected {width}", row=line
            )
        try:
            values.append([float(c) for c in r])
        except ValueError:
            col = next(j for j, c in enumerate(r) if not _is_number(c))
            raise CsvParseError(
                f"{path}: non-numeric value {r[col]!r} at row {line}, column {col + 1}",
                row=line,
                column=col + 1,
            ) from None
    M = np.array(values, dtype=np.float64).reshape(len(values), width)
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise CsvParseError(
            f"{path}: non-finite value at row {first_line + bad[0]}, column {bad[1] + 1}",
            row=int(first_line + bad[0]),
            column=int(bad[1] + 1),
        )
    labels = None
    if label_column is not None:
        if header is not None and label_column in header:
            j = header.index(label_column)
        elif header is None and str(label_column).isdigit():
            j = int(label_column)
        else:
            raise CsvParseError(f"{path}: label column {label_column!r} not found")
        if j >= width:
            raise CsvParseError(f"{path}: label column index {j} out of range")
        labels = M[:, j]
        if not np.all((labels == 0) | (labels == 1)):
            raise CsvParseError(f"{path}: label column {label_column!r} is not binary")
        M = np.delete(M, j, axis=1)
        if header is not None:
            header = header[:j] + header[j + 1 :]
    return Dataset(M, labels, header)


def write_csv(path, data, columns=None):
    M = data.matrix if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if columns is None and isinstance(data, Dataset):
        columns = data.columns
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if columns:
            w.writerow(columns)
        for row in M.tolist():
            w.writerow([repr(v) for v in row])


def minmax_scale(data):
    """Scale each axis to ``[0, 1]``; constant axes map to 0 with a warning.

    Returns ``(scaled_dataset, lo, hi)``.
    """
    ds = data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=np.float64))
    M = ds.matrix
    if M.shape[0] < 1:
        raise InsufficientDataError("data is empty")
    lo, hi = M.min(axis=0), M.max(axis=0)
    span = hi - lo
    const = span == 0
    if np.any(const):
        warnings.warn(
            f"constant column(s) {np.flatnonzero(const).tolist()} mapped to 0.0",
            RuntimeWarning,
            stacklevel=2,
        )
    scaled = np.where(const, 0.0, (M - lo) / np.where(const, 1.0, span))
    return Dataset(scaled, ds.labels, ds.columns), lo, hi


@dataclass(frozen=True, eq=False)
class PcaProjection:
    mean: np.ndarray
    basis: np.ndarray
    explained_variance: np.ndarray

    @property
    def target_dim(self):
        return self.basis.shape[1]

    def project(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.basis


def pca_reduce(data, target_dim):
    """Project onto the top ``target_dim`` principal axes.

    Columns are ordered by decreasing variance; each column's largest-magnitude
    entry is made positive.
    """
    X = data.matrix if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n, d = X.shape
    if not 1 <= target_dim <= d:
        raise ValueError(f"target dimension must lie in [1, {d}], got {target_dim}")
    if n < 2:
        raise InsufficientDataError("PCA needs at least 2 rows")
    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1][:target_dim]
    basis = vecs[:, order]
    pivot = np.argmax(np.abs(basis), axis=0)
    basis = basis * np.sign(basis[pivot, np.arange(target_dim)])
    proj = PcaProjection(mean, basis, vals[order])
    return proj, proj.project(X)


# ---------------------------------------------------------------------------
# model JSON

_VEC = {"type": "array", "items": {"type": "number"}}
_DENSITY_SCHEMA = {
    "type": "object",
    "required": ["rotation", "scales", "translation", "cells", "cell_volume"],
    "properties": {
        "rotation": {"type": "array", "items": _VEC},
        "scales": _VEC,
        "translation": _VEC,
        "cells": {
            "type": "array",
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "prefixItems": [{"type": "array", "items": {"type": "integer"}}, {"type": "number"}],
            },
        },
        "cell_volume": {"type": "number"},
    },
}
MODEL_SCHEMA = {
    "type": "object",
    "required": ["format", "f0", "components", "alphas", "mixture_weights", "config"],
    "properties": {
        "format": {"const": MODEL_FORMAT},
        "f0": _DENSITY_SCHEMA,
        "components": {"type": "array", "items": _DENSITY_SCHEMA},
        "alphas": _VEC,
        "mixture_weights": _VEC,
        "train_nll_trace": _VEC,
        "config": {"type": "object"},
        "scale_params": {"type": ["object", "null"]},
    },
}


def _density_to_dict(f):
    t = f.transform
    return {
        "rotation": t.rotation.tolist(),
        "scales": t.scales.tolist(),
        "translation": t.translation.tolist(),
        "cells": [[c, m] for c, m in zip(f.cells.tolist(), f.masses.tolist())],
        "cell_volume": f.cell_volume,
    }


def _density_from_dict(obj):
    t = HistogramTransform(
        np.array(obj["rotation"], dtype=np.float64),
        np.array(obj["scales"], dtype=np.float64),
        np.array(obj["translation"], dtype=np.float64),
    )
    d = t.dim
    cells = np.array([c for c, _ in obj["cells"]], dtype=np.int64).reshape(-1, d)
    masses = np.array([m for _, m in obj["cells"]], dtype=np.float64)
    order = np.lexsort(cells.T[::-1]) if len(cells) else np.arange(0)
    return HtDensity(t, cells[order], masses[order])


def model_to_dict(model):
    sp = model.scale_params
    return {
        "format": MODEL_FORMAT,
        "f0": _density_to_dict(model.f0),
        "components": [_density_to_dict(f) for f in model.components],
        "alphas": [float(a) for a in model.alphas],
        "mixture_weights": model.mixture_weights.tolist(),
        "train_nll_trace": [float(v) for v in model.train_nll_trace],
        "config": model.config.to_dict() if model.config else {},
        "scale_params": None
        if sp is None
        else {"s_min": sp.s_min, "s_max": sp.s_max, "reference_scale": sp.reference_scale},
    }


def model_from_dict(obj):
    if isinstance(obj, dict) and obj.get("format") not in (None, MODEL_FORMAT):
        raise SchemaError(f"unsupported model format {obj.get('format')!r}")
    try:
        jsonschema.validate(obj, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"invalid model file: {exc.message}") from None
    try:
        known = {f.name for f in fields(GbhtConfig)}
        cfg = GbhtConfig(**{k: v for k, v in obj["config"].items() if k in known})
        sp = obj.get("scale_params")
        params = ScaleParams(**sp) if sp else None
        T = len(obj["components"])
        if len(obj["alphas"]) != T or len(obj["mixture_weights"]) != T + 1:
            raise SchemaError(
                f"{T} components need {T} alphas and {T + 1} mixture weights, got "
                f"{len(obj['alphas'])} and {len(obj['mixture_weights'])}"
            )
        return GbhtModel(
            f0=_density_from_dict(obj["f0"]),
            components=[_density_from_dict(c) for c in obj["components"]],
            alphas=list(obj["alphas"]),
            mixture_weights=np.array(obj["mixture_weights"], dtype=np.float64),
            train_nll_trace=list(obj.get("train_nll_trace", [])),
            config=cfg,
            scale_params=params,
        )
    except SchemaError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"invalid model file: {exc}") from None


def save_model(model, path):
    text = json.dumps(model_to_dict(model), allow_nan=False)
    Path(path).write_text(text)


def load_model(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(obj)
