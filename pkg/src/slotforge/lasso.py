"""Multi-output Lasso fitted by cyclic coordinate descent.

Each target column is fitted independently against

    (1 / (2n)) * ||y - X w - b||^2 + alpha * ||w||_1

with an unpenalized intercept ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit


@dataclass(frozen=True)
class LassoConfig:
    alpha: float = 0.01
    tol: float = 1e-6
    max_iter: int = 10_000
    fit_intercept: bool = True

    def __post_init__(self) -> None:
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class LassoModel:
    weights: np.ndarray  # (p, m)
    intercepts: np.ndarray  # (m,)
    sweeps_used: list[int]
    converged: list[bool]
    # penalized objective after each sweep, per target; only filled on request
    objective_history: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_targets(self) -> int:
        return self.weights.shape[1]


def soft_threshold(z: float, g: float) -> float:
    if g < 0:
        raise ValueError("threshold must be non-negative")
    if z > g:
        return z - g
    if z < -g:
        return z + g
    return 0.0


@njit(cache=True)
def _cd_single(X, y, col_sq, alpha, tol, max_iter, fit_intercept, track, history):
    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    if fit_intercept:
        for i in range(n):
            b += y[i]
        b /= n
    r = np.empty(n)
    for i in range(n):
        r[i] = y[i] - b

    sweeps = 0
    converged = False
    while sweeps < max_iter:
        sweeps += 1
        max_delta = 0.0
        for j in range(p):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            wj = w[j]
            g = 0.0
            for i in range(n):
                g += X[i, j] * r[i]
            z = wj * cj + g / n
            if z > alpha:
                new = (z - alpha) / cj
            elif z < -alpha:
                new = (z + alpha) / cj
            else:
                new = 0.0
            delta = new - wj
            if delta != 0.0:
                for i in range(n):
                    r[i] -= delta * X[i, j]
                w[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if fit_intercept:
            shift = 0.0
            for i in range(n):
                shift += r[i]
            shift /= n
            b += shift
            for i in range(n):
                r[i] -= shift
        if track:
            loss = 0.0
            for i in range(n):
                loss += r[i] * r[i]
            l1 = 0.0
            for j in range(p):
                l1 += abs(w[j])
            history[sweeps - 1] = loss / (2.0 * n) + alpha * l1
        if max_delta < tol:
            converged = True
            break
    return w, b, sweeps, converged


def _as_2d_targets(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    return Y[:, None] if Y.ndim == 1 else Y


def fit_lasso(
    X: np.ndarray,
    Y: np.ndarray,
    config: LassoConfig = LassoConfig(),
    track_objective: bool = False,
) -> LassoModel:
    """Fit one Lasso per column of ``Y``.

    Coordinates are visited in column order every sweep; iteration stops once
    the largest absolute weight change in a sweep drops below ``config.tol``.
    Columns with zero energy are skipped and keep weight zero.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    Y = _as_2d_targets(Y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    if Y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite values in lasso inputs")

    n, p = X.shape
    col_sq = np.einsum("ij,ij->j", X, X) / n
    weights = np.zeros((p, Y.shape[1]))
    intercepts = np.zeros(Y.shape[1])
    sweeps_used: list[int] = []
    converged: list[bool] = []
    histories: list[list[float]] = []
    for k in range(Y.shape[1]):
        history = np.zeros(config.max_iter if track_objective else 1)
        w, b, sweeps, ok = _cd_single(
            X,
            np.ascontiguousarray(Y[:, k]),
            col_sq,
            float(config.alpha),
            float(config.tol),
            int(config.max_iter),
            bool(config.fit_intercept),
            track_objective,
            history,
        )
        weights[:, k] = w
        intercepts[k] = b
        sweeps_used.append(int(sweeps))
        converged.append(bool(ok))
        if track_objective:
            histories.append(history[:sweeps].tolist())
    return LassoModel(weights, intercepts, sweeps_used, converged, histories)


def predict(model: LassoModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} features, got array of shape {X.shape}"
        )
    return X @ model.weights + model.intercepts


def kkt_residual(model: LassoModel, X: np.ndarray, Y: np.ndarray, alpha: float) -> np.ndarray:
    """Largest violation of the Lasso optimality conditions, per target."""
    X = np.asarray(X, dtype=np.float64)
    Y = _as_2d_targets(Y)
    n = X.shape[0]
    R = Y - predict(model, X)
    G = X.T @ R / n
    W = model.weights
    viol = np.where(
        W == 0.0,
        np.maximum(0.0, np.abs(G) - alpha),
        np.abs(G - alpha * np.sign(W)),
    )
    return viol.max(axis=0)
