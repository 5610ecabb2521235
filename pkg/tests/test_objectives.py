import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from smoothrisk.dataset import Dataset
from smoothrisk.errors import DataError
from smoothrisk.moments import ClassMoments, ExplicitCovariance, diff_moments
from smoothrisk.objectives import (HingeObjective, LogisticObjective,
                                   N01Objective, NrankObjective, class_terms,
                                   f_hinge_pairwise, f_logistic, f_n01, f_nrank,
                                   penalty, std_normal_cdf, std_normal_pdf)

from conftest import central_diff, random_dataset, random_moments, random_unit, rel_err


def brute_hinge(w, ds, lam=0.0):
    s = ds.scores(w)
    Xp, Xn = ds.X_pos, ds.X_neg
    sp_, sn = s[ds.y == 1], s[ds.y == -1]
    value, grad = 0.0, np.zeros_like(w)
    for i in range(sp_.size):
        for j in range(sn.size):
            h = 1.0 - (sp_[i] - sn[j])
            if h > 0:
                value += h
                grad += Xn[j] - Xp[i]
    k = sp_.size * sn.size
    return value / k + lam * w @ w, grad / k + 2 * lam * w


class TestNormalCdf:
    def test_values(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_cdf(1.0) == pytest.approx(0.841344746068543, abs=1e-15)
        tail = std_normal_cdf(-10.0)
        assert tail > 0 and tail == pytest.approx(7.619853024160527e-24, rel=1e-12)

    def test_vectorized(self):
        x = np.linspace(-3, 3, 7)
        assert np.allclose(std_normal_cdf(x), norm.cdf(x), rtol=1e-14)
        assert np.allclose(std_normal_pdf(x), norm.pdf(x), rtol=1e-14)

    @given(st.floats(-8, 8))
    def test_symmetry(self, x):
        assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15


class TestN01:
    def test_symmetric_case(self, symmetric_moments):
        val, grad = f_n01(np.array([1.0, 0.0]), symmetric_moments)
        assert val == pytest.approx(1 - norm.cdf(1.0), abs=1e-15)
        assert grad[1] == 0.0

    def test_orthogonal_direction(self, symmetric_moments):
        assert f_n01(np.array([0.0, 1.0]), symmetric_moments).value == 0.5

    def test_origin_rejected(self, symmetric_moments):
        with pytest.raises(ValueError, match="undefined at origin"):
            f_n01(np.zeros(2), symmetric_moments)
        with pytest.raises(ValueError, match="undefined at origin"):
            f_n01(np.array([1e-9, 0.0]), symmetric_moments)

    def test_wrong_dimension(self, symmetric_moments):
        with pytest.raises(DataError):
            f_n01(np.ones(3), symmetric_moments)

    def test_finite_in_null_space(self):
        Z = ExplicitCovariance(np.zeros((2, 2)))
        cm = ClassMoments(np.array([1.0, 0.0]), np.array([-1.0, 0.0]), Z, Z, 0.5)
        val, grad = f_n01(np.array([1.0, 0.0]), cm)
        assert np.isfinite(val) and np.all(np.isfinite(grad))

    def test_penalty_added(self, symmetric_moments):
        w = np.array([2.0, 0.0])
        a = f_n01(w, symmetric_moments, lam=0.1)
        b = f_n01(w, symmetric_moments)
        p = penalty(w, 0.1)
        assert a.value == pytest.approx(b.value + p.value, abs=1e-15)
        assert np.allclose(a.gradient, b.gradient + p.gradient)

    def test_gradient_fd(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            cm = random_moments(rng, 10)
            w = random_unit(rng, 10)
            g = f_n01(w, cm, 0.001).gradient
            fd = central_diff(lambda v: f_n01(v, cm, 0.001).value, w)
            assert rel_err(g, fd) <= 1e-5

    def test_class_decomposition_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            cm = random_moments(rng, 6)
            w = random_unit(rng, 6)
            t_pos, t_neg = class_terms(w, cm)
            assert f_n01(w, cm).value == cm.prior_pos * t_pos + cm.prior_neg * t_neg

    def test_monte_carlo(self):
        rng = np.random.default_rng(7)
        cm = random_moments(rng, 5)
        w = random_unit(rng, 5)
        n = 1_000_000
        n_pos = rng.binomial(n, cm.prior_pos)
        xp = rng.multivariate_normal(cm.mu_pos, cm.sigma_pos.matrix, n_pos)
        xn = rng.multivariate_normal(cm.mu_neg, cm.sigma_neg.matrix, n - n_pos)
        mc = (np.count_nonzero(xp @ w < 0) + np.count_nonzero(xn @ w > 0)) / n
        p = f_n01(w, cm).value
        assert abs(p - mc) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-3

    def test_objective_class(self, symmetric_moments):
        obj = N01Objective(symmetric_moments, 0.0)
        assert obj.dimension == 2
        assert obj(np.array([1.0, 0.0])).value == f_n01(np.array([1.0, 0.0]),
                                                         symmetric_moments).value


class TestNrank:
    def test_equal_means(self, rng):
        cm = random_moments(rng, 4)
        cm = ClassMoments(cm.mu_pos, cm.mu_pos.copy(), cm.sigma_pos, cm.sigma_neg, 0.5)
        dm = diff_moments(cm)
        for _ in range(5):
            assert f_nrank(rng.standard_normal(4), dm).value == 0.5

    def test_one_dimensional(self):
        one = ExplicitCovariance(np.eye(1))
        cm = ClassMoments(np.array([1.0]), np.array([-1.0]), one, one, 0.5)
        val = f_nrank(np.array([1.0]), diff_moments(cm)).value
        assert val == pytest.approx(norm.cdf(-math.sqrt(2)), abs=1e-15)
        assert val == pytest.approx(0.0786496, abs=1e-7)

    def test_accepts_class_moments(self, symmetric_moments):
        obj = NrankObjective(symmetric_moments)
        assert obj(np.array([1.0, 0.0])).value == pytest.approx(norm.cdf(-math.sqrt(2)))

    def test_gradient_fd(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            dm = diff_moments(random_moments(rng, 10))
            w = random_unit(rng, 10)
            g = f_nrank(w, dm, 0.001).gradient
            fd = central_diff(lambda v: f_nrank(v, dm, 0.001).value, w)
            assert rel_err(g, fd) <= 1e-5

    def test_monte_carlo_pairs(self):
        rng = np.random.default_rng(8)
        cm = random_moments(rng, 5)
        w = random_unit(rng, 5)
        n = 1_000_000
        xp = rng.multivariate_normal(cm.mu_pos, cm.sigma_pos.matrix, n)
        xn = rng.multivariate_normal(cm.mu_neg, cm.sigma_neg.matrix, n)
        mc = np.count_nonzero(xp @ w < xn @ w) / n
        p = f_nrank(w, diff_moments(cm)).value
        assert abs(p - mc) <= 4 * math.sqrt(0.25 / n) + 1e-3

    def test_monotone_in_mean(self, rng):
        cm = random_moments(rng, 3)
        dm = diff_moments(cm)
        w = random_unit(rng, 3)
        from smoothrisk.moments import DiffMoments
        vals = [f_nrank(w, DiffMoments(dm.mu_hat + t * w, dm.sigma_hat)).value
                for t in np.linspace(-2, 2, 9)]
        assert np.all(np.diff(vals) > 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 10.0]))
def test_scale_invariance_and_range(seed, alpha):
    rng = np.random.default_rng(seed)
    cm = random_moments(rng, 6)
    dm = diff_moments(cm)
    w = rng.standard_normal(6)
    for f, m in ((f_n01, cm), (f_nrank, dm)):
        v = f(w, m).value
        assert 0.0 <= v <= 1.0
        assert abs(f(alpha * w, m).value - v) <= 1e-10


class TestLogistic:
    def test_zero_weights(self, rng):
        ds = random_dataset(rng, 5, 7, 3)
        assert f_logistic(np.zeros(3), ds).value == pytest.approx(math.log(2), abs=1e-15)

    def test_stable_branch(self):
        ds = Dataset(np.array([[1.0]]), np.array([1]))
        v = f_logistic(np.array([30.0]), ds).value
        assert v == pytest.approx(math.log1p(math.exp(-30)), rel=1e-12)
        big = f_logistic(np.array([800.0]), ds)
        assert np.isfinite(big.value) and np.all(np.isfinite(big.gradient))
        neg = f_logistic(np.array([-800.0]), ds)
        assert neg.value == pytest.approx(800.0)
        assert neg.gradient[0] == pytest.approx(-1.0)

    def test_gradient_fd(self):
        rng = np.random.default_rng(2)
        ds = random_dataset(rng, 25, 25, 8)
        for _ in range(20):
            w = random_unit(rng, 8)
            g = f_logistic(w, ds, 0.02).gradient
            fd = central_diff(lambda v: f_logistic(v, ds, 0.02).value, w)
            assert rel_err(g, fd) <= 1e-6

    def test_sparse_matches_dense(self, rng):
        ds = random_dataset(rng, 20, 20, 6, sparse=True)
        dense = Dataset(ds.X.toarray(), ds.y)
        w = rng.standard_normal(6)
        a, b = f_logistic(w, ds, 0.1), f_logistic(w, dense, 0.1)
        assert a.value == pytest.approx(b.value)
        assert np.allclose(a.gradient, b.gradient)
        assert LogisticObjective(ds, 0.1)(w).value == pytest.approx(a.value)


class TestHinge:
    def test_inactive_pair(self):
        ds = Dataset(np.array([[2.0], [0.0]]), np.array([1, -1]))
        assert f_hinge_pairwise(np.array([1.0]), ds).value == 0.0

    def test_zero_margin(self):
        ds = Dataset(np.array([[0.0], [0.0]]), np.array([1, -1]))
        assert f_hinge_pairwise(np.array([1.0]), ds).value == 1.0

    def test_kink_excluded_from_subgradient(self):
        ds = Dataset(np.array([[1.0], [0.0]]), np.array([1, -1]))
        val, grad = f_hinge_pairwise(np.array([1.0]), ds)
        assert val == 0.0 and grad[0] == 0.0

    def test_empty_class(self):
        ds = Dataset(np.ones((3, 2)), np.array([1, 1, 1]))
        with pytest.raises(DataError):
            f_hinge_pairwise(np.ones(2), ds)

    def test_brute_force(self):
        rng = np.random.default_rng(3)
        ds = random_dataset(rng, 40, 60, 5)
        for _ in range(5):
            w = rng.standard_normal(5)
            val, grad = f_hinge_pairwise(w, ds, 0.01)
            bv, bg = brute_hinge(w, ds, 0.01)
            assert abs(val - bv) <= 1e-9
            assert np.abs(grad - bg).max() <= 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(1, 30))
    def test_brute_force_property(self, seed, n_pos, n_neg):
        rng = np.random.default_rng(seed)
        ds = random_dataset(rng, n_pos, n_neg, 3)
        w = np.round(rng.standard_normal(3), 1)
        val, grad = f_hinge_pairwise(w, ds)
        bv, bg = brute_hinge(w, ds)
        assert abs(val - bv) <= 1e-9 and np.abs(grad - bg).max() <= 1e-9

    def test_ties_and_duplicates(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0], [0.0], [2.0]])
        ds = Dataset(X, np.array([1, 1, 1, -1, -1, -1]))
        w = np.array([1.0])
        val, grad = f_hinge_pairwise(w, ds)
        bv, bg = brute_hinge(w, ds)
        assert val == pytest.approx(bv) and np.allclose(grad, bg)

    def test_sparse(self, rng):
        ds = random_dataset(rng, 15, 20, 6, sparse=True)
        w = rng.standard_normal(6)
        assert HingeObjective(ds)(w).value == pytest.approx(brute_hinge(w, ds)[0])


class TestPenalty:
    def test_unit_norm(self, rng):
        v, g = penalty(random_unit(rng, 4), 0.5)
        assert v == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(g, 0.0, atol=1e-14)

    def test_origin(self):
        v, g = penalty(np.zeros(3), 0.001)
        assert v == 0.001 and not np.any(g)

    def test_gradient_fd(self, rng):
        for _ in range(20):
            w = random_unit(rng, 10)
            w *= rng.uniform(0.5, 1.5)
            g = penalty(w, 0.3).gradient
            fd = central_diff(lambda v: penalty(v, 0.3).value, w)
            assert rel_err(g, fd) <= 1e-7
