"""Training, evaluation and persistence of the spectrum -> slot-dimension model."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import TARGET_COLUMNS, DatasetTable
from .lasso import LassoConfig, LassoModel, fit_lasso, predict
from .preprocess import (
    DEFAULT_PCA_DIM,
    FittedPreprocessor,
    IqrFilter,
    PcaModel,
    Standardizer,
    fit_pipeline,
    pipeline_transform,
)
from .surrogate import FrequencyGrid, Spectrum

FORMAT_VERSION = 1
MODEL_SUFFIX = ".slotforge.json"
TARGET_CLAMPS = ((25.0, 130.0), (5.0, 60.0), (0.0, 90.0))


class PipelineError(ValueError):
    pass


class GridMismatchError(PipelineError):
    pass


class ModelFormatError(PipelineError):
    pass


@dataclass
class TrainedPipeline:
    preprocessor: FittedPreprocessor
    model: LassoModel
    grid: FrequencyGrid
    lasso_config: LassoConfig = field(default_factory=LassoConfig)
    target_names: tuple[str, ...] = TARGET_COLUMNS
    target_clamps: tuple[tuple[float, float], ...] = TARGET_CLAMPS
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        if self.model.n_targets != 3:
            raise PipelineError(f"model must have 3 targets, has {self.model.n_targets}")
        if self.preprocessor.output_dim != self.model.n_features:
            raise PipelineError(
                f"preprocessor emits {self.preprocessor.output_dim} features, "
                f"model expects {self.model.n_features}"
            )

    def check_grid(self, grid: FrequencyGrid) -> None:
        if grid != self.grid:
            raise GridMismatchError(f"input grid {grid} does not match model grid {self.grid}")

    def predict_raw(self, features) -> np.ndarray:
        return predict(self.model, pipeline_transform(self.preprocessor, features))

    def round_and_clamp(self, raw: np.ndarray) -> np.ndarray:
        lo = np.array([c[0] for c in self.target_clamps])
        hi = np.array([c[1] for c in self.target_clamps])
        return np.clip(np.floor(raw + 0.5), lo, hi).astype(np.int64)


def train(
    dataset: DatasetTable,
    lasso_config: LassoConfig = LassoConfig(),
    pca_d: int = DEFAULT_PCA_DIM,
) -> TrainedPipeline:
    """Fit the preprocessing chain on the dataset's spectra, then the Lasso on raw targets."""
    if len(dataset) < pca_d + 2:
        raise PipelineError(f"need at least pca_d + 2 = {pca_d + 2} rows, got {len(dataset)}")
    fp, Z = fit_pipeline(dataset.features, pca_d)
    model = fit_lasso(Z, dataset.targets[fp.kept_rows], lasso_config)
    return TrainedPipeline(fp, model, dataset.grid, lasso_config)


# --- metrics ---------------------------------------------------------------


def r2_score(y_true, y_pred) -> float:
    y = np.asarray(y_true, dtype=np.float64)
    yhat = np.asarray(y_pred, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise PipelineError("r2_score needs two 1-D vectors of equal length")
    if y.size < 2:
        raise PipelineError("r2_score needs at least 2 samples")
    total = np.sum((y - y.mean()) ** 2)
    if total == 0.0:
        raise PipelineError("r2_score undefined for constant y_true")
    return float(1.0 - np.sum((y - yhat) ** 2) / total)


def mse(y_true, y_pred) -> float:
    y = np.asarray(y_true, dtype=np.float64)
    yhat = np.asarray(y_pred, dtype=np.float64)
    if y.shape != yhat.shape or y.size == 0:
        raise PipelineError("mse needs two non-empty arrays of equal shape")
    return float(np.mean((y - yhat) ** 2))


def percentage_error(true_val: float, pred_val: float) -> float:
    if true_val == 0:
        raise PipelineError("percentage error undefined for a true value of 0")
    return 100.0 * abs(true_val - pred_val) / abs(true_val)


@dataclass
class EvalReport:
    n_samples: int
    r2_per_target: list[float] | None
    r2_uniform_mean: float | None
    mse_per_target: list[float]
    mse_overall: float
    row_ids: np.ndarray
    true: np.ndarray
    predicted_raw: np.ndarray
    predicted_rounded: np.ndarray
    pct_error: np.ndarray  # nan where the true value is 0

    def summary(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "r2_per_target": (
                dict(zip(TARGET_COLUMNS, self.r2_per_target)) if self.r2_per_target else None
            ),
            "r2_uniform_mean": self.r2_uniform_mean,
            "mse_per_target": dict(zip(TARGET_COLUMNS, self.mse_per_target)),
            "mse_overall": self.mse_overall,
        }


def _pct_row(true_row, pred_row) -> list[float]:
    return [
        math.nan if t == 0 else percentage_error(t, p) for t, p in zip(true_row, pred_row)
    ]


def evaluate(pipeline: TrainedPipeline, table: DatasetTable) -> EvalReport:
    """Metrics on raw predictions; no rows are dropped."""
    pipeline.check_grid(table.grid)
    raw = pipeline.predict_raw(table.features)
    rounded = pipeline.round_and_clamp(raw)
    y = table.targets
    n = len(table)
    if n >= 2:
        r2 = [r2_score(y[:, k], raw[:, k]) for k in range(3)]
        r2_mean = float(np.mean(r2))
    else:
        r2, r2_mean = None, None
    mses = [mse(y[:, k], raw[:, k]) for k in range(3)]
    pct = np.array([_pct_row(t, p) for t, p in zip(y, raw)]).reshape(n, 3)
    return EvalReport(n, r2, r2_mean, mses, mse(y, raw), table.row_ids, y, raw, rounded, pct)


def predict_dims(pipeline: TrainedPipeline, spectrum: Spectrum) -> tuple[np.ndarray, np.ndarray]:
    """Raw (S1, Sw1, theta) and the rounded, clamped integers."""
    pipeline.check_grid(spectrum.grid)
    raw = pipeline.predict_raw(spectrum.s11_db[None, :])[0]
    return raw, pipeline.round_and_clamp(raw)


def write_eval_report(report: EvalReport, csv_path: str | Path, json_path: str | Path) -> None:
    header = [
        "row_id",
        "s1_true", "sw1_true", "theta_true",
        "s1_pred", "sw1_pred", "theta_pred",
        "s1_pct", "sw1_pct", "theta_pct",
    ]  # fmt: skip
    with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(report.n_samples):
            pct = ["" if math.isnan(v) else f"{v:.4f}" for v in report.pct_error[i]]
            w.writerow(
                [int(report.row_ids[i])]
                + [f"{v:g}" for v in report.true[i]]
                + [f"{v:.6f}" for v in report.predicted_raw[i]]
                + pct
            )
    Path(json_path).write_text(json.dumps(report.summary(), indent=2) + "\n", encoding="utf-8")


# --- persistence -----------------------------------------------------------


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise ModelFormatError(f"cannot persist non-finite value {x}")
    return format(float(x), ".17g")


def _encode(obj, indent: int = 0) -> str:
    """JSON text with every float written at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ",".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(obj)


def _std_dict(s: Standardizer) -> dict:
    return {"means": s.means, "stds": s.stds}


def _std_from(d: dict) -> Standardizer:
    return Standardizer(np.array(d["means"], dtype=np.float64), np.array(d["stds"], dtype=np.float64))


def pipeline_to_dict(p: TrainedPipeline) -> dict:
    fp = p.preprocessor
    return {
        "format_version": p.format_version,
        "grid": p.grid.to_dict(),
        "target_names": list(p.target_names),
        "target_clamps": [list(c) for c in p.target_clamps],
        "lasso_config": {
            "alpha": p.lasso_config.alpha,
            "tol": p.lasso_config.tol,
            "max_iter": p.lasso_config.max_iter,
            "fit_intercept": p.lasso_config.fit_intercept,
        },
        "preprocessor": {
            "iqr": {
                "multiplier": fp.iqr.multiplier,
                "max_outlier_feature_fraction": fp.iqr.max_outlier_feature_fraction,
                "lower": fp.iqr.lower,
                "upper": fp.iqr.upper,
            },
            "std1": _std_dict(fp.std1),
            "pca": {
                "mean": fp.pca.mean,
                "components": fp.pca.components,
                "explained_variances": fp.pca.explained_variances,
            },
            "poly": {"degree": 2, "include_bias": True, "input_dim": fp.pca.n_components},
            "std2": _std_dict(fp.std2),
            "kept_rows": fp.kept_rows,
        },
        "model": {
            "weights": p.model.weights,
            "intercepts": p.model.intercepts,
            "sweeps_used": p.model.sweeps_used,
            "converged": p.model.converged,
        },
    }


def pipeline_from_dict(d: dict) -> TrainedPipeline:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        pre = d["preprocessor"]
        pca_d = int(pre["poly"]["input_dim"])
        components = np.array(pre["pca"]["components"], dtype=np.float64)
        p_in = len(pre["pca"]["mean"])
        fp = FittedPreprocessor(
            iqr=IqrFilter(
                np.array(pre["iqr"]["lower"], dtype=np.float64),
                np.array(pre["iqr"]["upper"], dtype=np.float64),
                float(pre["iqr"]["multiplier"]),
                float(pre["iqr"]["max_outlier_feature_fraction"]),
            ),
            std1=_std_from(pre["std1"]),
            pca=PcaModel(
                np.array(pre["pca"]["mean"], dtype=np.float64),
                components.reshape(p_in, pca_d),
                np.array(pre["pca"]["explained_variances"], dtype=np.float64),
            ),
            std2=_std_from(pre["std2"]),
            kept_rows=np.array(pre["kept_rows"], dtype=np.int64),
        )
        m = d["model"]
        weights = np.array(m["weights"], dtype=np.float64).reshape(-1, 3)
        model = LassoModel(
            weights,
            np.array(m["intercepts"], dtype=np.float64),
            [int(v) for v in m["sweeps_used"]],
            [bool(v) for v in m["converged"]],
        )
        return TrainedPipeline(
            preprocessor=fp,
            model=model,
            grid=FrequencyGrid.from_dict(d["grid"]),
            lasso_config=LassoConfig(**d["lasso_config"]),
            target_names=tuple(d["target_names"]),
            target_clamps=tuple(tuple(float(v) for v in c) for c in d["target_clamps"]),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PipelineError):
            raise
        raise ModelFormatError(f"malformed model file: {exc}") from None


def save_pipeline(p: TrainedPipeline, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(_encode(pipeline_to_dict(p)) + "\n", encoding="utf-8")
    return path


def load_pipeline(path: str | Path) -> TrainedPipeline:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    return pipeline_from_dict(d)
