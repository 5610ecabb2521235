"""Labeled binary datasets: LIBSVM I/O, normalization, splitting and
synthetic Gaussian generation.

Feature matrices are either dense ``numpy`` arrays or ``scipy.sparse``
CSR matrices; everything downstream only relies on ``X @ v`` and
``X.T @ u`` so both kinds flow through unchanged.
"""

import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DataError, ParseError

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "ExactMoments",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "normalize_features",
    "apply_scale",
    "split",
    "kfold",
    "flip_labels",
    "sample_gaussian_classes",
    "gen_synthetic",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` examples in ``d`` dimensions with labels in {+1, -1}."""

    X: object
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int8).ravel()
        if self.X.shape[0] != y.shape[0]:
            raise DataError(
                f"{self.X.shape[0]} feature rows but {y.shape[0]} labels")
        if y.size and not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be +1 or -1")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.X)

    @cached_property
    def n_pos(self):
        return int(np.count_nonzero(self.y == 1))

    @cached_property
    def n_neg(self):
        return int(np.count_nonzero(self.y == -1))

    def _rows(self, label):
        idx = np.flatnonzero(self.y == label)
        if self.is_sparse:
            return self.X[idx]
        return self.X.take(idx, axis=0)

    @property
    def X_pos(self):
        return self._rows(1)

    @property
    def X_neg(self):
        return self._rows(-1)

    def density(self):
        if self.n == 0 or self.d == 0:
            return 0.0
        nnz = self.X.nnz if self.is_sparse else np.count_nonzero(self.X)
        return nnz / (self.n * self.d)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.X[idx], self.y[idx])

    def with_labels(self, y):
        return Dataset(self.X, y)

    def scores(self, w):
        return np.asarray(self.X @ w).ravel()

    def require_both_classes(self, minimum=1):
        if self.n_pos < minimum or self.n_neg < minimum:
            raise DataError(
                f"need at least {minimum} example(s) per class, "
                f"got n+={self.n_pos}, n-={self.n_neg}")


@dataclass(frozen=True)
class SyntheticSpec:
    d: int
    n: int
    prior_pos: float
    outlier_frac: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be positive")
        if not 0.0 < self.prior_pos < 1.0:
            raise ValueError("prior_pos must lie in (0, 1)")
        if not 0.0 <= self.outlier_frac < 0.5:
            raise ValueError("outlier_frac must lie in [0, 0.5)")

    @property
    def prior_neg(self):
        return 1.0 - self.prior_pos

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        keys = {"d", "n", "prior_pos", "outlier_frac", "seed"}
        unknown = set(doc) - keys
        if unknown:
            raise ValueError(f"unknown synthetic spec keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self):
        return {"d": self.d, "n": self.n, "prior_pos": self.prior_pos,
                "outlier_frac": self.outlier_frac, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class ExactMoments:
    """Generating class moments of a synthetic Gaussian dataset."""

    mu_pos: np.ndarray
    mu_neg: np.ndarray
    sigma_pos: np.ndarray
    sigma_neg: np.ndarray
    prior_pos: float

    @property
    def prior_neg(self):
        return 1.0 - self.prior_pos


# ---------------------------------------------------------------------------
# LIBSVM text format
# ---------------------------------------------------------------------------

def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", lineno) from None
    if value == 1.0:
        return 1
    if value == -1.0 or value == 0.0:
        return -1
    raise ParseError(f"label {token!r} is not one of +1, -1, 0, 1", lineno)


def parse_libsvm(text, d=None):
    """Parse LIBSVM text (``str`` or ``bytes``) into a sparse Dataset.

    Labels 0/1 are mapped to -1/+1. Feature indices are 1-based in the
    text and 0-based in the result. ``d`` overrides the inferred dimension
    (the largest index seen) and must be at least that large.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")

    labels = []
    indptr = [0]
    indices = []
    values = []
    max_index = 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], lineno))
        row = {}
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed token {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} < 1", lineno)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            if idx in row:
                raise ParseError(f"duplicate index {idx}", lineno)
            row[idx] = val
        for idx in sorted(row):
            indices.append(idx - 1)
            values.append(row[idx])
        if row:
            max_index = max(max_index, max(row))
        indptr.append(len(indices))

    if d is None:
        d = max_index
    elif d < max_index:
        raise DataError(f"dimension override {d} < largest index {max_index}")

    X = sp.csr_matrix(
        (np.array(values, dtype=np.float64),
         np.array(indices, dtype=np.int64),
         np.array(indptr, dtype=np.int64)),
        shape=(len(labels), d))
    return Dataset(X, np.array(labels, dtype=np.int8))


def load_libsvm(path, d=None):
    with open(path, "rb") as fh:
        return parse_libsvm(fh.read(), d=d)


def dump_libsvm(ds):
    """Serialize to LIBSVM text; values use ``repr`` so parsing is exact."""
    X = sp.csr_matrix(ds.X)
    X.sort_indices()
    lines = []
    for i in range(ds.n):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = ["+1" if ds.y[i] == 1 else "-1"]
        for j, v in zip(X.indices[lo:hi], X.data[lo:hi]):
            if v != 0.0:
                parts.append(f"{j + 1}:{float(v)!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Normalization and splitting
# ---------------------------------------------------------------------------

def normalize_features(ds):
    """Scale every column so its largest magnitude is 1.

    Returns the scaled dataset and the per-column divisor; all-zero
    columns keep divisor 1.
    """
    if ds.n < 1:
        raise DataError("cannot normalize an empty dataset")
    if ds.is_sparse:
        colmax = np.asarray(abs(ds.X).max(axis=0).todense()).ravel()
    else:
        colmax = np.abs(ds.X).max(axis=0)
    scale = np.where(colmax > 0.0, np.maximum(colmax, 1e-300), 1.0)
    return apply_scale(ds, scale), scale


def apply_scale(ds, scale):
    scale = np.asarray(scale, dtype=np.float64)
    if scale.shape != (ds.d,):
        raise DataError(f"scale has length {scale.size}, data has d={ds.d}")
    inv = 1.0 / scale
    if ds.is_sparse:
        X = sp.csr_matrix(ds.X @ sp.diags(inv))
    else:
        X = ds.X * inv
    return Dataset(X, ds.y)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split(ds, train_frac, seed):
    """Random train/test split with ``round(train_frac * n)`` training rows."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(ds.n)
    n_train = _round_half_up(train_frac * ds.n)
    train = ds.subset(np.sort(perm[:n_train]))
    test = ds.subset(np.sort(perm[n_train:]))
    if train.n_pos == 0 or train.n_neg == 0:
        raise DataError("degenerate split: training set lacks a class")
    return train, test


def kfold_indices(n, k, seed):
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise DataError(f"k={k} folds requested for n={n} examples")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train_idx), np.sort(test_idx)))
    return out


def kfold(ds, k, seed):
    """List of ``k`` (train, test) pairs; test folds partition the data."""
    return [(ds.subset(tr), ds.subset(te))
            for tr, te in kfold_indices(ds.n, k, seed)]


# ---------------------------------------------------------------------------
# Synthetic Gaussian data
# ---------------------------------------------------------------------------

def flip_labels(ds, frac, seed):
    """Flip ``round(frac * n)`` labels chosen uniformly without replacement."""
    rng = np.random.default_rng(seed)
    n_flip = _round_half_up(frac * ds.n)
    idx = rng.choice(ds.n, size=n_flip, replace=False)
    y = ds.y.copy()
    y[idx] = -y[idx]
    return ds.with_labels(y), np.sort(idx)


def _random_spd(rng, d, lo=0.1, hi=2.0):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    eig = rng.uniform(lo, hi, size=d)
    S = (Q * eig) @ Q.T
    return 0.5 * (S + S.T), Q * np.sqrt(eig)


def sample_gaussian_classes(n_pos, n_neg, mu_pos, mu_neg, factor_pos,
                            factor_neg, rng):
    """Draw rows ``mu + z @ factor.T`` for each class, shuffled together.

    ``factor`` is any matrix with ``factor @ factor.T`` equal to the class
    covariance.
    """
    d = mu_pos.size
    Xp = mu_pos + rng.standard_normal((n_pos, d)) @ factor_pos.T
    Xn = mu_neg + rng.standard_normal((n_neg, d)) @ factor_neg.T
    X = np.vstack([Xp, Xn])
    y = np.concatenate([np.ones(n_pos, np.int8), -np.ones(n_neg, np.int8)])
    perm = rng.permutation(n_pos + n_neg)
    return Dataset(X[perm], y[perm])


def gen_synthetic(spec):
    """Gaussian two-class data with random means and covariances.

    Means are drawn componentwise from N(0, 1); covariances are
    ``Q diag(lam) Q^T`` with ``Q`` a random orthogonal matrix and
    ``lam ~ U[0.1, 2.0]``. ``round(outlier_frac * n)`` labels are flipped
    at the end; the returned moments are the generating (pre-flip) ones.
    """
    rng = np.random.default_rng(spec.seed)
    d = spec.d
    mu_pos = rng.standard_normal(d)
    mu_neg = rng.standard_normal(d)
    sigma_pos, f_pos = _random_spd(rng, d)
    sigma_neg, f_neg = _random_spd(rng, d)
    n_pos = _round_half_up(spec.n * spec.prior_pos)
    ds = sample_gaussian_classes(n_pos, spec.n - n_pos, mu_pos, mu_neg,
                                 f_pos, f_neg, rng)
    if spec.outlier_frac > 0:
        ds, _ = flip_labels(ds, spec.outlier_frac, rng)
    moments = ExactMoments(mu_pos, mu_neg, sigma_pos, sigma_neg,
                           spec.prior_pos)
    return ds, moments
