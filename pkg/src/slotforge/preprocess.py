"""Feature preprocessing: IQR row filter, standardization, PCA, quadratic expansion.

All stages are fit once on training spectra and then frozen. Row dropping by
the IQR filter happens only while fitting; transforms never drop rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-12
DEFAULT_PCA_DIM = 150


class PreprocessError(ValueError):
    pass


def _matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise PreprocessError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


def _check_width(X: np.ndarray, width: int, stage: str) -> None:
    if X.shape[1] != width:
        raise PreprocessError(f"{stage}: expected {width} features, got {X.shape[1]}")


# --- IQR -------------------------------------------------------------------


@dataclass(frozen=True)
class IqrFilter:
    lower: np.ndarray
    upper: np.ndarray
    multiplier: float = 1.5
    max_outlier_feature_fraction: float = 0.05

    @property
    def n_features(self) -> int:
        return self.lower.size

    def outlier_fraction(self, X) -> np.ndarray:
        X = _matrix(X)
        _check_width(X, self.n_features, "iqr")
        outside = (X < self.lower) | (X > self.upper)
        return outside.sum(axis=1) / self.n_features


def fit_iqr(
    X, multiplier: float = 1.5, max_outlier_feature_fraction: float = 0.05
) -> IqrFilter:
    """Per-feature Tukey fences from linearly interpolated quartiles."""
    X = _matrix(X)
    if X.shape[0] < 4:
        raise PreprocessError(f"IQR fit needs at least 4 rows, got {X.shape[0]}")
    q1, q3 = np.quantile(X, [0.25, 0.75], axis=0, method="linear")
    spread = q3 - q1
    return IqrFilter(
        lower=q1 - multiplier * spread,
        upper=q3 + multiplier * spread,
        multiplier=multiplier,
        max_outlier_feature_fraction=max_outlier_feature_fraction,
    )


def apply_iqr(filt: IqrFilter, X) -> np.ndarray:
    """Ascending indices of rows whose out-of-fence feature share is within the limit."""
    frac = filt.outlier_fraction(X)
    return np.flatnonzero(frac <= filt.max_outlier_feature_fraction)


# --- standardization -------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def inverse(self, Z) -> np.ndarray:
        Z = _matrix(Z)
        _check_width(Z, self.means.size, "standardizer")
        return Z * self.stds + self.means


def fit_standardizer(X) -> Standardizer:
    X = _matrix(X)
    if X.shape[0] < 2:
        raise PreprocessError("standardizer fit needs at least 2 rows")
    means = X.mean(axis=0)
    stds = np.maximum(X.std(axis=0), STD_FLOOR)
    return Standardizer(means, stds)


def standardize(s: Standardizer, X) -> np.ndarray:
    X = _matrix(X)
    _check_width(X, s.means.size, "standardizer")
    return (X - s.means) / s.stds


# --- PCA -------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (p,)
    components: np.ndarray  # (p, d)
    explained_variances: np.ndarray  # (d,)

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


def fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if components.size == 0:
        return components
    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def fit_pca(X, d: int = DEFAULT_PCA_DIM) -> PcaModel:
    """Top-``d`` eigenvectors of the population covariance.

    ``d`` is capped at ``min(d, p, n - 1)``.
    """
    X = _matrix(X)
    n, p = X.shape
    if n < 2:
        raise PreprocessError("PCA needs at least 2 rows")
    d_eff = max(0, min(int(d), p, n - 1))
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:d_eff]
    variances = np.maximum(evals[order], 0.0)
    components = fix_signs(evecs[:, order])
    return PcaModel(mean, np.ascontiguousarray(components), variances)


def pca_transform(m: PcaModel, X) -> np.ndarray:
    X = _matrix(X)
    _check_width(X, m.mean.size, "pca")
    return (X - m.mean) @ m.components


def pca_inverse(m: PcaModel, scores) -> np.ndarray:
    scores = _matrix(scores)
    _check_width(scores, m.n_components, "pca inverse")
    return scores @ m.components.T + m.mean


# --- polynomial expansion --------------------------------------------------


def poly_output_dim(d: int) -> int:
    return (d + 1) * (d + 2) // 2


def poly_expand(x) -> np.ndarray:
    """Degree-2 expansion with bias: ``[1, x_1..x_d, x_i*x_j for i <= j]``.

    Accepts a single vector or a batch of row vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    n, d = X.shape
    iu, ju = np.triu_indices(d)
    out = np.empty((n, poly_output_dim(d)))
    out[:, 0] = 1.0
    out[:, 1 : d + 1] = X
    out[:, d + 1 :] = X[:, iu] * X[:, ju]
    return out[0] if single else out


# --- chained preprocessor --------------------------------------------------


@dataclass(frozen=True)
class FittedPreprocessor:
    iqr: IqrFilter
    std1: Standardizer
    pca: PcaModel
    std2: Standardizer  # bias column carries mean 0, std 1
    kept_rows: np.ndarray  # training rows surviving the IQR filter

    @property
    def input_dim(self) -> int:
        return self.std1.means.size

    @property
    def output_dim(self) -> int:
        return poly_output_dim(self.pca.n_components)


def _expanded_standardizer(E: np.ndarray) -> Standardizer:
    s = fit_standardizer(E)
    means, stds = s.means.copy(), s.stds.copy()
    means[0], stds[0] = 0.0, 1.0
    return Standardizer(means, stds)


def fit_pipeline(
    Xtrain, d: int = DEFAULT_PCA_DIM
) -> tuple[FittedPreprocessor, np.ndarray]:
    """Fit every stage and return the preprocessor plus the transformed kept rows."""
    X = _matrix(Xtrain)
    if X.shape[0] < max(4, d + 1):
        raise PreprocessError(
            f"need at least {max(4, d + 1)} training rows, got {X.shape[0]}"
        )
    iqr = fit_iqr(X)
    kept = apply_iqr(iqr, X)
    Xk = X[kept]
    std1 = fit_standardizer(Xk)
    pca = fit_pca(standardize(std1, Xk), d)
    expanded = poly_expand(pca_transform(pca, standardize(std1, Xk)))
    std2 = _expanded_standardizer(expanded)
    fp = FittedPreprocessor(iqr, std1, pca, std2, kept)
    return fp, standardize(std2, expanded)


def pipeline_transform(fp: FittedPreprocessor, X) -> np.ndarray:
    X = _matrix(X)
    _check_width(X, fp.input_dim, "pipeline")
    scores = pca_transform(fp.pca, standardize(fp.std1, X))
    return standardize(fp.std2, poly_expand(scores))
