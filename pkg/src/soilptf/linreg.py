"""Ordinary least squares with optional ridge penalty.

Features are standardized to zero mean and unit variance before solving;
the returned coefficients are mapped back to the original feature space,
so prediction is plain intercept + sum(coef * x). The ridge penalty is
applied in standardized space and never touches the intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import json

import numpy as np
import scipy.linalg


class FitError(ValueError):
    pass


class RankDeficientError(FitError):
    """Raised when the design matrix has linearly dependent columns."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {self.columns}")


@dataclass
class LinearModel:
    """A fitted linear predictor in original feature units."""

    intercept: float
    coefficients: dict[str, float]
    training_count: int
    feature_means: dict[str, float]
    feature_scales: dict[str, float]

    def __post_init__(self):
        values = [self.intercept, *self.coefficients.values()]
        if not np.all(np.isfinite(values)):
            raise FitError(f"non-finite model coefficients: {values}")

    @property
    def feature_names(self) -> list[str]:
        return list(self.coefficients)

    def predict(self, x) -> float:
        return predict_linear(self, x)

    def predict_matrix(self, X: np.ndarray, feature_names) -> np.ndarray:
        if list(feature_names) != self.feature_names:
            raise FitError(
                f"feature order mismatch: model has {self.feature_names}, got {list(feature_names)}"
            )
        beta = np.array([self.coefficients[c] for c in self.feature_names])
        return X @ beta + self.intercept

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coefficients": dict(self.coefficients),
            "training_count": self.training_count,
            "standardization": {
                "means": dict(self.feature_means),
                "scales": dict(self.feature_scales),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            intercept=d["intercept"],
            coefficients=dict(d["coefficients"]),
            training_count=d["training_count"],
            feature_means=dict(d["standardization"]["means"]),
            feature_scales=dict(d["standardization"]["scales"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        return cls.from_dict(json.loads(text))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise FitError(f"X must be 2-d, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise FitError(f"X has {X.shape[0]} rows but y has shape {y.shape}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise FitError("X or y contains NaN or infinity")
    return X, y


def ols_fit(X, y, ridge: float = 0.0, feature_names=None) -> LinearModel:
    """Least-squares fit of y on X plus an intercept.

    With ridge=0 a rank-deficient system raises RankDeficientError naming
    the dependent columns; any positive ridge makes the solve well posed.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if n < 2:
        raise FitError(f"need at least 2 rows to fit, got {n}")
    if ridge < 0:
        raise FitError(f"ridge must be non-negative, got {ridge}")
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(p)]
    if len(names) != p:
        raise FitError(f"{len(names)} feature names for {p} columns")

    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0  # constant column standardizes to all zeros
    Xs = (X - means) / scales
    A = np.hstack([np.ones((n, 1)), Xs])

    if ridge == 0.0:
        _require_full_rank(A, names)
        beta = np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        pen = np.hstack([np.zeros((p, 1)), np.sqrt(ridge) * np.eye(p)])
        beta = np.linalg.lstsq(
            np.vstack([A, pen]), np.concatenate([y, np.zeros(p)]), rcond=None
        )[0]

    coef = beta[1:] / scales
    intercept = float(beta[0] - (beta[1:] * means / scales).sum())
    return LinearModel(
        intercept=intercept,
        coefficients={c: float(v) for c, v in zip(names, coef)},
        training_count=n,
        feature_means={c: float(v) for c, v in zip(names, means)},
        feature_scales={c: float(v) for c, v in zip(names, scales)},
    )


def _require_full_rank(A: np.ndarray, names: list[str]):
    # Pivoted QR: tiny trailing diagonal entries of R mark dependent columns.
    _, r, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return
    tol = diag[0] * max(A.shape) * np.finfo(float).eps
    rank = int((diag > tol).sum())
    if rank < A.shape[1]:
        bad = ["intercept" if j == 0 else names[j - 1] for j in piv[rank:]]
        raise RankDeficientError(sorted(bad))


def local_ridge(X) -> float:
    """Penalty for degenerate local systems: 1e-8 * trace(X'X) / p in
    standardized coordinates, floored so all-constant X still gets a
    positive penalty."""
    X = np.asarray(X, dtype=float)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0
    Xs = (X - X.mean(axis=0)) / scales
    p = max(1, X.shape[1])
    t = float((Xs * Xs).sum())
    return 1e-8 * (t / p if t > 0.0 else 1.0)


def fit_local(X, y, feature_names=None) -> LinearModel:
    """OLS with an automatic ridge fallback for small or degenerate systems."""
    X, y = _check_xy(X, y)
    n, p = X.shape
    if n < p + 1:
        return ols_fit(X, y, ridge=local_ridge(X), feature_names=feature_names)
    try:
        return ols_fit(X, y, feature_names=feature_names)
    except RankDeficientError:
        return ols_fit(X, y, ridge=local_ridge(X), feature_names=feature_names)


def predict_linear(model: LinearModel, x) -> float:
    """Evaluate intercept + sum(coef * feature) for one sample mapping."""
    total = model.intercept
    for name, coef in model.coefficients.items():
        if hasattr(x, "value"):
            v = x.value(name)
        else:
            try:
                v = x[name]
            except KeyError:
                raise FitError(f"sample lacks model feature {name!r}") from None
        if v is None:
            raise FitError(f"sample has no value for model feature {name!r}")
        total += coef * v
    return float(total)


def residuals(model: LinearModel, X, y, feature_names=None) -> np.ndarray:
    """Observed minus predicted for every row."""
    X, y = _check_xy(X, y)
    names = list(feature_names) if feature_names is not None else model.feature_names
    return y - model.predict_matrix(X, names)
