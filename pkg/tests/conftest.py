import numpy as np
import pytest
import scipy.sparse as sp

from smoothrisk.dataset import Dataset, _random_spd
from smoothrisk.moments import ClassMoments, ExplicitCovariance


def central_diff(f, w, h=1e-6):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def random_moments(rng, d, prior_pos=None):
    s_pos, _ = _random_spd(rng, d)
    s_neg, _ = _random_spd(rng, d)
    p = rng.uniform(0.2, 0.8) if prior_pos is None else prior_pos
    return ClassMoments(rng.standard_normal(d), rng.standard_normal(d),
                        ExplicitCovariance(s_pos), ExplicitCovariance(s_neg), p)


def random_unit(rng, d):
    w = rng.standard_normal(d)
    return w / np.linalg.norm(w)


def random_dataset(rng, n_pos, n_neg, d, sparse=False, density=0.3):
    if sparse:
        X = sp.random(n_pos + n_neg, d, density=density, format="csr",
                      random_state=rng, data_rvs=rng.standard_normal)
    else:
        X = rng.standard_normal((n_pos + n_neg, d))
    y = np.array([1] * n_pos + [-1] * n_neg, dtype=np.int8)
    perm = rng.permutation(y.size)
    return Dataset(X[perm], y[perm])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def symmetric_moments():
    I = np.eye(2)
    return ClassMoments(np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                        ExplicitCovariance(I), ExplicitCovariance(I), 0.5)
