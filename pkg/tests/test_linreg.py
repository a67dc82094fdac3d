"""Linear fitting: exact recovery, rank handling, ridge fallback."""

import numpy as np
import pytest

from soilptf.linreg import (
    FitError,
    LinearModel,
    RankDeficientError,
    fit_local,
    local_ridge,
    ols_fit,
    predict_linear,
    residuals,
)


def test_exact_line_recovery():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = 2.0 * X[:, 0] + 3.0
    m = ols_fit(X, y, feature_names=["x"])
    assert m.intercept == pytest.approx(3.0, abs=1e-10)
    assert m.coefficients["x"] == pytest.approx(2.0, abs=1e-10)
    assert m.training_count == 4


def test_exact_plane_recovery():
    rng = np.random.default_rng(1)
    X = rng.normal(0, 2, (40, 2))
    y = 1.0 + 2.0 * X[:, 0] - 3.0 * X[:, 1]
    m = ols_fit(X, y, feature_names=["a", "b"])
    assert m.intercept == pytest.approx(1.0, abs=1e-9)
    assert m.coefficients["a"] == pytest.approx(2.0, abs=1e-9)
    assert m.coefficients["b"] == pytest.approx(-3.0, abs=1e-9)
    assert np.max(np.abs(residuals(m, X, y))) < 1e-9


def test_ols_minimizes_sse():
    # perturbing the solution can only raise the squared error
    rng = np.random.default_rng(2)
    X = rng.normal(0, 1, (50, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 0.3 + rng.normal(0, 0.5, 50)
    m = ols_fit(X, y, feature_names=["a", "b", "c"])
    base = float((residuals(m, X, y) ** 2).sum())
    for _ in range(20):
        bumped = LinearModel(
            intercept=m.intercept + rng.normal(0, 0.1),
            coefficients={k: v + rng.normal(0, 0.1) for k, v in m.coefficients.items()},
            training_count=m.training_count,
            feature_means=m.feature_means,
            feature_scales=m.feature_scales,
        )
        assert float((residuals(bumped, X, y) ** 2).sum()) >= base


def test_input_validation():
    with pytest.raises(FitError, match="at least 2 rows"):
        ols_fit([[1.0]], [1.0])
    with pytest.raises(FitError, match="2-d"):
        ols_fit([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(FitError, match="rows"):
        ols_fit([[1.0], [2.0]], [1.0])
    with pytest.raises(FitError, match="NaN"):
        ols_fit([[1.0], [float("nan")]], [1.0, 2.0])
    with pytest.raises(FitError, match="non-negative"):
        ols_fit([[1.0], [2.0]], [1.0, 2.0], ridge=-1.0)
    with pytest.raises(FitError, match="feature names"):
        ols_fit([[1.0], [2.0]], [1.0, 2.0], feature_names=["a", "b"])


def test_duplicate_column_named():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(RankDeficientError) as err:
        ols_fit(X, y, feature_names=["a", "a_copy"])
    assert set(err.value.columns) & {"a", "a_copy"}


def test_constant_column_is_dependent():
    # constant column duplicates the intercept once standardized
    X = np.array([[1.0, 7.0], [2.0, 7.0], [3.0, 7.0], [4.0, 7.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(RankDeficientError):
        ols_fit(X, y, feature_names=["x", "const"])
    # ridge resolves it and still predicts the line
    m = ols_fit(X, y, ridge=1e-8, feature_names=["x", "const"])
    assert m.predict({"x": 2.5, "const": 7.0}) == pytest.approx(2.5, abs=1e-3)


def test_ridge_shrinks_toward_zero():
    rng = np.random.default_rng(3)
    X = rng.normal(0, 1, (60, 2))
    y = X @ np.array([3.0, -1.5]) + rng.normal(0, 0.1, 60)
    loose = ols_fit(X, y, feature_names=["a", "b"])
    tight = ols_fit(X, y, ridge=1e6, feature_names=["a", "b"])
    for k in ("a", "b"):
        assert abs(tight.coefficients[k]) < abs(loose.coefficients[k])
    assert abs(tight.coefficients["a"]) < 0.01


def test_local_ridge_scale():
    X = np.random.default_rng(4).normal(0, 5, (30, 3))
    r = local_ridge(X)
    assert 0 < r < 1e-5
    # standardized columns have unit variance, so trace/p is about n
    assert r == pytest.approx(1e-8 * 30, rel=0.05)


def test_fit_local_underdetermined():
    # 3 rows, 4 features: straight OLS is impossible, fallback must fit
    rng = np.random.default_rng(5)
    X = rng.normal(0, 1, (3, 4))
    y = np.array([1.0, 2.0, 3.0])
    m = fit_local(X, y, feature_names=list("abcd"))
    assert np.all(np.isfinite(list(m.coefficients.values())))
    assert np.max(np.abs(residuals(m, X, y))) < 0.1  # near-interpolation


def test_fit_local_rank_deficient_fallback():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    m = fit_local(X, y, feature_names=["a", "b"])
    pred = m.predict_matrix(X, ["a", "b"])
    assert np.allclose(pred, y, atol=1e-3)


def test_predict_paths_agree():
    m = ols_fit([[0.0], [1.0], [2.0]], [3.0, 5.0, 7.0], feature_names=["x"])
    assert predict_linear(m, {"x": 10.0}) == pytest.approx(23.0, abs=1e-9)
    assert m.predict({"x": 10.0}) == pytest.approx(23.0, abs=1e-9)
    got = m.predict_matrix(np.array([[10.0], [0.0]]), ["x"])
    assert got == pytest.approx([23.0, 3.0], abs=1e-9)
    with pytest.raises(FitError, match="feature order mismatch"):
        m.predict_matrix(np.array([[1.0]]), ["y"])
    with pytest.raises(FitError, match="lacks model feature"):
        predict_linear(m, {"z": 1.0})
    with pytest.raises(FitError, match="no value"):
        predict_linear(m, {"x": None})


def test_model_finite_guard():
    with pytest.raises(FitError, match="non-finite"):
        LinearModel(
            intercept=float("inf"), coefficients={"x": 1.0},
            training_count=2, feature_means={"x": 0.0}, feature_scales={"x": 1.0},
        )


def test_model_json_roundtrip():
    m = ols_fit([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]], [1.0, 2.0, 3.0],
                feature_names=["a", "b"])
    back = LinearModel.from_json(m.to_json())
    assert back == m
    doc = m.to_dict()
    assert set(doc) == {"intercept", "coefficients", "training_count", "standardization"}
    assert set(doc["standardization"]) == {"means", "scales"}


def test_residuals_definition():
    m = ols_fit([[0.0], [1.0]], [1.0, 3.0], feature_names=["x"])
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([2.0, 3.0, 4.0])
    # observed minus predicted, with prediction 1 + 2x
    assert residuals(m, X, y) == pytest.approx([1.0, 0.0, -1.0], abs=1e-9)
