import numpy as np
import pytest
from oracles import ols_normal_equations

from slotforge.lasso import LassoConfig, LassoModel, fit_lasso, kkt_residual, predict, soft_threshold


def standardized(rng, n, p):
    X = rng.normal(size=(n, p))
    return (X - X.mean(axis=0)) / X.std(axis=0)


@pytest.mark.parametrize("z,g,out", [(3, 1, 2), (-0.5, 1, 0), (-3, 1, -2), (0.2, 0, 0.2)])
def test_soft_threshold(z, g, out):
    assert soft_threshold(z, g) == out


def test_soft_threshold_negative_gap():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


class TestConfig:
    def test_defaults(self):
        c = LassoConfig()
        assert (c.alpha, c.tol, c.max_iter, c.fit_intercept) == (0.01, 1e-6, 10_000, True)

    @pytest.mark.parametrize("kw", [{"alpha": -1}, {"tol": 0}, {"max_iter": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            LassoConfig(**kw)


class TestFit:
    def test_alpha_zero_is_ols(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(10, 3)) + np.array([1.0, -2.0, 0.5])
        y = X @ np.array([1.5, -0.7, 2.0]) + 3.0 + 0.1 * rng.normal(size=10)
        w_ref, b_ref = ols_normal_equations(X, y)
        m = fit_lasso(X, y, LassoConfig(alpha=0.0, tol=1e-12, max_iter=100_000))
        assert m.converged == [True]
        assert np.abs(m.weights[:, 0] - w_ref).max() < 1e-6
        assert abs(m.intercepts[0] - b_ref) < 1e-6
        fitted = predict(m, X)[:, 0]
        assert np.abs(fitted - (X @ w_ref + b_ref)).max() < 1e-6

    def test_single_feature_fixed_point(self):
        rng = np.random.default_rng(1)
        x = standardized(rng, 40, 1)
        y = 0.8 * x[:, 0] + 0.3 * rng.normal(size=40)
        y -= y.mean()
        alpha = 0.05
        m = fit_lasso(x, y, LassoConfig(alpha=alpha))
        expected = soft_threshold(float(x[:, 0] @ y / 40), alpha)
        assert m.weights[0, 0] == pytest.approx(expected, abs=1e-12)
        assert m.sweeps_used == [2]

    def test_above_critical_alpha(self):
        rng = np.random.default_rng(2)
        X = standardized(rng, 30, 6)
        y = X @ rng.normal(size=6) + 4.0
        alpha_max = np.max(np.abs(X.T @ (y - y.mean()))) / 30
        m = fit_lasso(X, y, LassoConfig(alpha=alpha_max * 1.0001))
        assert np.all(m.weights == 0.0)
        assert m.intercepts[0] == pytest.approx(y.mean())
        assert kkt_residual(m, X, y, alpha_max * 1.0001)[0] == 0.0
        below = fit_lasso(X, y, LassoConfig(alpha=alpha_max * 0.99))
        assert np.count_nonzero(below.weights) >= 1

    def test_zero_column_skipped(self):
        rng = np.random.default_rng(3)
        X = standardized(rng, 20, 3)
        X[:, 1] = 0.0
        m = fit_lasso(X, X[:, 0] * 2, LassoConfig(alpha=0.001))
        assert m.weights[1, 0] == 0.0

    def test_multi_target_independent(self):
        rng = np.random.default_rng(4)
        X = standardized(rng, 50, 8)
        Y = np.column_stack([X[:, 0] + 1, -2 * X[:, 3], X[:, 5] * X[:, 6]])
        joint = fit_lasso(X, Y, LassoConfig(alpha=0.01))
        for k in range(3):
            alone = fit_lasso(X, Y[:, k], LassoConfig(alpha=0.01))
            assert np.array_equal(alone.weights[:, 0], joint.weights[:, k])

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_lasso(np.zeros((0, 3)), np.zeros(0))
        with pytest.raises(ValueError):
            fit_lasso(np.array([[np.nan, 1.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            fit_lasso(np.ones((3, 2)), np.ones(4))


class TestProperties:
    @pytest.mark.parametrize("seed", range(5))
    def test_objective_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        X = standardized(rng, 50, 20)
        y = X[:, :4] @ rng.normal(size=4) + 0.5 * rng.normal(size=50)
        m = fit_lasso(X, y, LassoConfig(alpha=0.05), track_objective=True)
        hist = np.array(m.objective_history[0])
        assert hist.size == m.sweeps_used[0]
        assert np.all(np.diff(hist) <= 1e-12 * hist[0])

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_after_convergence(self, seed):
        rng = np.random.default_rng(10 + seed)
        X = standardized(rng, 50, 20)
        Y = np.column_stack([X @ rng.normal(size=20), X[:, 0] - X[:, 1] + rng.normal(size=50)])
        cfg = LassoConfig(alpha=0.01)
        m = fit_lasso(X, Y, cfg)
        assert all(m.converged)
        assert np.all(kkt_residual(m, X, Y, cfg.alpha) <= 10 * cfg.tol)

    def test_kkt_sensitive_to_perturbation(self):
        rng = np.random.default_rng(20)
        X = standardized(rng, 50, 10)
        y = X @ rng.normal(size=10)
        m = fit_lasso(X, y, LassoConfig(alpha=0.01))
        base = kkt_residual(m, X, y, 0.01)[0]
        j = int(np.flatnonzero(m.weights[:, 0])[0])
        W = m.weights.copy()
        W[j, 0] += 0.1
        bumped = LassoModel(W, m.intercepts, m.sweeps_used, m.converged)
        assert kkt_residual(bumped, X, y, 0.01)[0] > base

    def test_sparsity_monotone_in_alpha(self):
        rng = np.random.default_rng(30)
        X = standardized(rng, 60, 40)
        y = X[:, :6] @ rng.normal(size=6) + 0.3 * rng.normal(size=60)
        counts = [
            np.count_nonzero(fit_lasso(X, y, LassoConfig(alpha=a)).weights)
            for a in (0.001, 0.01, 0.1, 1.0)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_deterministic(self):
        rng = np.random.default_rng(40)
        X = standardized(rng, 40, 30)
        y = rng.normal(size=40)
        a = fit_lasso(X, y, LassoConfig(alpha=0.02))
        b = fit_lasso(X, y, LassoConfig(alpha=0.02))
        assert a.weights.tobytes() == b.weights.tobytes()

    def test_support_recovery(self):
        rng = np.random.default_rng(50)
        X = standardized(rng, 100, 50)
        w_true = np.zeros(50)
        w_true[[4, 17, 33]] = [2.0, -1.5, 1.0]
        y = X @ w_true
        m = fit_lasso(X, y, LassoConfig(alpha=0.001))
        support = set(np.flatnonzero(m.weights[:, 0]).tolist())
        assert {4, 17, 33} <= support


class TestPredict:
    def test_zero_weights(self):
        m = LassoModel(np.zeros((4, 2)), np.array([1.5, -2.0]), [1, 1], [True, True])
        assert np.array_equal(predict(m, np.ones((3, 4))), np.tile([1.5, -2.0], (3, 1)))

    def test_affine(self):
        m = LassoModel(np.array([[2.0]]), np.array([1.0]), [1], [True])
        assert predict(m, np.array([[3.0]]))[0, 0] == 7.0

    def test_shape_mismatch(self):
        m = LassoModel(np.zeros((4, 1)), np.zeros(1), [1], [True])
        with pytest.raises(ValueError):
            predict(m, np.ones((2, 5)))
