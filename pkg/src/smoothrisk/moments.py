"""Per-class moment estimation and covariance operators.

A covariance is held either as an explicit ``d x d`` array or implicitly
through the class data matrix, in which case ``Sigma @ v`` is computed as

    X^T (X v) / (m - 1) - m / (m - 1) * xbar (xbar^T v)

without ever forming ``Sigma``.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import load_libsvm
from .errors import DataError

__all__ = [
    "ExplicitCovariance",
    "ImplicitCovariance",
    "SumCovariance",
    "ClassMoments",
    "DiffMoments",
    "choose_representation",
    "estimate_class_moments",
    "diff_moments",
    "cov_apply",
    "quadratic_form",
    "moments_to_json",
    "moments_from_json",
]

IMPLICIT_MIN_DIM = 1024
IMPLICIT_MAX_DENSITY = 0.10


class ExplicitCovariance:
    kind = "explicit"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DataError(f"covariance must be square, got {matrix.shape}")
        self.matrix = matrix

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, v):
        return self.matrix @ v

    def to_dense(self):
        return self.matrix.copy()

    def rescaled(self, scale):
        inv = 1.0 / np.asarray(scale, dtype=np.float64)
        return ExplicitCovariance(self.matrix * np.outer(inv, inv))


class ImplicitCovariance:
    """Unbiased sample covariance of the rows of ``X``, applied matrix-free."""

    kind = "implicit"

    def __init__(self, X, mean=None):
        m = X.shape[0]
        if m < 2:
            raise DataError("insufficient class samples: need at least 2")
        if mean is None:
            mean = np.asarray(X.mean(axis=0)).ravel()
        self.X = X
        self.mean = np.asarray(mean, dtype=np.float64)
        self.m = m

    @property
    def dim(self):
        return self.X.shape[1]

    def apply(self, v):
        m = self.m
        Xv = self.X @ v
        out = np.asarray(self.X.T @ Xv).ravel() / (m - 1)
        out -= (m / (m - 1)) * (self.mean @ v) * self.mean
        return out

    def to_dense(self):
        XtX = self.X.T @ self.X
        if sp.issparse(XtX):
            XtX = XtX.toarray()
        m = self.m
        return XtX / (m - 1) - (m / (m - 1)) * np.outer(self.mean, self.mean)

    def rescaled(self, scale):
        inv = 1.0 / np.asarray(scale, dtype=np.float64)
        if sp.issparse(self.X):
            X = sp.csr_matrix(self.X @ sp.diags(inv))
        else:
            X = self.X * inv
        return ImplicitCovariance(X, self.mean * inv)


class SumCovariance:
    """Operator ``v -> A v + B v`` for two covariance representations."""

    kind = "sum"

    def __init__(self, first, second):
        if first.dim != second.dim:
            raise DataError("summed covariances differ in dimension")
        self.first = first
        self.second = second

    @property
    def dim(self):
        return self.first.dim

    def apply(self, v):
        return self.first.apply(v) + self.second.apply(v)

    def to_dense(self):
        return self.first.to_dense() + self.second.to_dense()


def _check_dim(c, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (c.dim,):
        raise DataError(f"vector of shape {v.shape} for a {c.dim}-dim covariance")
    return v


def cov_apply(c, v):
    """Return ``Sigma @ v`` for any covariance representation."""
    return c.apply(_check_dim(c, v))


def quadratic_form(c, w):
    """``w^T Sigma w``, clamped at zero against negative round-off."""
    w = _check_dim(c, w)
    q = float(w @ c.apply(w))
    return q if q > 0.0 else 0.0


@dataclass(frozen=True, eq=False)
class ClassMoments:
    mu_pos: np.ndarray
    mu_neg: np.ndarray
    sigma_pos: object
    sigma_neg: object
    prior_pos: float

    def __post_init__(self):
        if not 0.0 < self.prior_pos < 1.0:
            raise DataError(f"prior_pos={self.prior_pos} outside (0, 1)")

    @property
    def prior_neg(self):
        return 1.0 - self.prior_pos

    @property
    def dim(self):
        return self.mu_pos.size

    @classmethod
    def from_exact(cls, exact):
        return cls(np.asarray(exact.mu_pos, dtype=np.float64),
                   np.asarray(exact.mu_neg, dtype=np.float64),
                   ExplicitCovariance(exact.sigma_pos),
                   ExplicitCovariance(exact.sigma_neg),
                   float(exact.prior_pos))

    def rescaled(self, scale):
        """Moments of the features divided columnwise by ``scale``."""
        scale = np.asarray(scale, dtype=np.float64)
        return ClassMoments(self.mu_pos / scale, self.mu_neg / scale,
                            self.sigma_pos.rescaled(scale),
                            self.sigma_neg.rescaled(scale), self.prior_pos)


@dataclass(frozen=True, eq=False)
class DiffMoments:
    """Mean ``mu_neg - mu_pos`` and covariance ``Sigma_pos + Sigma_neg`` of
    ``X_neg - X_pos`` with the two classes taken as uncorrelated."""

    mu_hat: np.ndarray
    sigma_hat: object

    @property
    def dim(self):
        return self.mu_hat.size


def choose_representation(ds):
    """Implicit for ``d > 1024`` or sparse storage below 10% density.

    Dense arrays skip the density test: a matrix-free product over dense
    rows saves nothing.
    """
    if ds.d > IMPLICIT_MIN_DIM:
        return "implicit"
    if ds.is_sparse and ds.density() < IMPLICIT_MAX_DENSITY:
        return "implicit"
    return "explicit"


def _explicit_cov(X):
    m = X.shape[0]
    mean = np.asarray(X.T @ np.full(m, 1.0 / m)).ravel()
    S = X.T @ X
    if sp.issparse(S):
        S = S.toarray()
    S = S / (m - 1) - (m / (m - 1)) * np.outer(mean, mean)
    return mean, ExplicitCovariance(0.5 * (S + S.T))


def estimate_class_moments(ds, rep="auto"):
    """Sample means, unbiased covariances and priors ``n+/n``, ``n-/n``.

    ``rep`` is ``"explicit"``, ``"implicit"`` or ``"auto"`` (see
    ``choose_representation``).
    """
    if ds.n_pos < 2 or ds.n_neg < 2:
        raise DataError(
            f"insufficient class samples: n+={ds.n_pos}, n-={ds.n_neg} "
            "(need at least 2 each)")
    if rep == "auto":
        rep = choose_representation(ds)
    if rep not in ("explicit", "implicit"):
        raise ValueError(f"unknown covariance representation {rep!r}")

    parts = []
    for X in (ds.X_pos, ds.X_neg):
        if rep == "explicit":
            parts.append(_explicit_cov(X))
        else:
            c = ImplicitCovariance(X)
            parts.append((c.mean, c))
    (mu_pos, s_pos), (mu_neg, s_neg) = parts
    return ClassMoments(mu_pos, mu_neg, s_pos, s_neg, ds.n_pos / ds.n)


def diff_moments(cm):
    """Difference moments for the ranking objective (zero cross terms)."""
    a, b = cm.sigma_pos, cm.sigma_neg
    if isinstance(a, ExplicitCovariance) and isinstance(b, ExplicitCovariance):
        sigma_hat = ExplicitCovariance(a.matrix + b.matrix)
    else:
        sigma_hat = SumCovariance(a, b)
    return DiffMoments(cm.mu_neg - cm.mu_pos, sigma_hat)


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def moments_to_json(cm, data_ref=None):
    """JSON-ready dict. Implicit moments store ``data_ref`` (a LIBSVM path)
    instead of matrices and are rebuilt from it on load."""
    doc = {
        "mu_pos": cm.mu_pos.tolist(),
        "mu_neg": cm.mu_neg.tolist(),
        "prior_pos": cm.prior_pos,
    }
    kinds = {cm.sigma_pos.kind, cm.sigma_neg.kind}
    if kinds == {"explicit"}:
        doc["sigma_rep"] = "explicit"
        doc["sigma_pos"] = cm.sigma_pos.matrix.tolist()
        doc["sigma_neg"] = cm.sigma_neg.matrix.tolist()
    else:
        if data_ref is None:
            raise ValueError("implicit moments need a data_ref to serialize")
        doc["sigma_rep"] = "implicit"
        doc["data_ref"] = str(data_ref)
    return doc


def moments_from_json(doc, base_dir=None):
    mu_pos = np.asarray(doc["mu_pos"], dtype=np.float64)
    mu_neg = np.asarray(doc["mu_neg"], dtype=np.float64)
    rep = doc.get("sigma_rep", "explicit")
    if rep == "explicit":
        return ClassMoments(mu_pos, mu_neg,
                            ExplicitCovariance(doc["sigma_pos"]),
                            ExplicitCovariance(doc["sigma_neg"]),
                            float(doc["prior_pos"]))
    if rep == "implicit":
        path = doc["data_ref"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        ds = load_libsvm(path, d=mu_pos.size)
        cm = estimate_class_moments(ds, rep="implicit")
        return ClassMoments(mu_pos, mu_neg, cm.sigma_pos, cm.sigma_neg,
                            float(doc["prior_pos"]))
    raise DataError(f"unknown sigma_rep {rep!r}")
