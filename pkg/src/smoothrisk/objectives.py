"""Training objectives with analytic gradients.

Moment-based objectives (``f_n01``, ``f_nrank``) cost O(d^2) per
evaluation (O(nnz) with implicit covariances) regardless of ``n``; the
sample-based baselines (``f_logistic``, ``f_hinge_pairwise``) scale with
the number of examples.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, expit

from .errors import DataError
from .moments import diff_moments

__all__ = [
    "ObjectiveEval",
    "std_normal_cdf",
    "std_normal_pdf",
    "penalty",
    "f_n01",
    "f_nrank",
    "f_logistic",
    "f_hinge_pairwise",
    "N01Objective",
    "NrankObjective",
    "LogisticObjective",
    "HingeObjective",
    "OBJECTIVE_IDS",
]

OBJECTIVE_IDS = ("n01", "nrank", "logistic", "hinge")

_SQRT_HALF = math.sqrt(0.5)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_MIN_NORM = 1e-8
_LOGISTIC_BRANCH = 30.0


class ObjectiveEval(NamedTuple):
    value: float
    gradient: np.ndarray


def std_normal_cdf(x):
    """Standard normal CDF through ``erfc``, accurate far into both tails."""
    out = 0.5 * erfc(-np.asarray(x, dtype=np.float64) * _SQRT_HALF)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    out = _INV_SQRT_2PI * np.exp(-0.5 * np.square(np.asarray(x, dtype=np.float64)))
    return float(out) if np.ndim(out) == 0 else out


def penalty(w, lam):
    """``lam * (1 - |w|^2)^2`` and its gradient."""
    w = np.asarray(w, dtype=np.float64)
    gap = 1.0 - float(w @ w)
    return ObjectiveEval(lam * gap * gap, (-4.0 * lam * gap) * w)


def _check_w(w, dim):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (dim,):
        raise DataError(f"weight vector has shape {w.shape}, expected ({dim},)")
    norm = float(np.linalg.norm(w))
    if norm < _MIN_NORM:
        raise ValueError("objective is undefined at origin (|w| < 1e-8)")
    return w, norm


def _standardized_margin(w, norm, mu, cov):
    """Return ``g = w.mu / sqrt(w' Sigma w)`` and its gradient in ``w``."""
    Sw = cov.apply(w)
    q = float(w @ Sw)
    sigma = max(math.sqrt(q) if q > 0.0 else 0.0, 1e-12 * (1.0 + norm))
    g = float(w @ mu) / sigma
    dg = (sigma * mu - g * Sw) / (sigma * sigma)
    return g, dg


def class_terms(w, cm):
    """Per-class misclassification probabilities under the normal model:
    ``(P(w.X+ < 0), P(w.X- > 0))``."""
    w, norm = _check_w(w, cm.dim)
    g_pos, _ = _standardized_margin(w, norm, cm.mu_pos, cm.sigma_pos)
    g_neg, _ = _standardized_margin(w, norm, cm.mu_neg, cm.sigma_neg)
    return std_normal_cdf(-g_pos), std_normal_cdf(g_neg)


def f_n01(w, cm, lam=0.0):
    """Normal approximation of the expected 0-1 error plus the norm penalty.

    With ``g+- = w.mu+- / sqrt(w' Sigma+- w)`` the unpenalized value is
    ``p+ * Phi(-g+) + p- * Phi(g-)``.
    """
    w, norm = _check_w(w, cm.dim)
    g_pos, dg_pos = _standardized_margin(w, norm, cm.mu_pos, cm.sigma_pos)
    g_neg, dg_neg = _standardized_margin(w, norm, cm.mu_neg, cm.sigma_neg)
    p_pos, p_neg = cm.prior_pos, cm.prior_neg

    value = p_pos * std_normal_cdf(-g_pos) + p_neg * std_normal_cdf(g_neg)
    grad = (p_neg * std_normal_pdf(g_neg)) * dg_neg \
        - (p_pos * std_normal_pdf(g_pos)) * dg_pos
    if lam:
        pv, pg = penalty(w, lam)
        value += pv
        grad = grad + pg
    return ObjectiveEval(value, grad)


def f_nrank(w, dm, lam=0.0):
    """Normal approximation of the expected ranking loss plus the penalty.

    ``Z = w.(X- - X+)`` has mean ``w.mu_hat`` and std
    ``sqrt(w' Sigma_hat w)``; the loss ``P(Z > 0)`` equals ``Phi(mu_Z/sigma_Z)``.
    """
    w, norm = _check_w(w, dm.dim)
    g, dg = _standardized_margin(w, norm, dm.mu_hat, dm.sigma_hat)
    value = std_normal_cdf(g)
    grad = std_normal_pdf(g) * dg
    if lam:
        pv, pg = penalty(w, lam)
        value += pv
        grad = grad + pg
    return ObjectiveEval(value, grad)


def _logistic(w, X, y, lam):
    n = X.shape[0]
    m = y * np.asarray(X @ w).ravel()
    hi = m > _LOGISTIC_BRANCH
    lo = m < -_LOGISTIC_BRANCH
    mid = ~(hi | lo)
    losses = np.empty_like(m)
    losses[hi] = np.exp(-m[hi])
    losses[lo] = np.exp(m[lo]) - m[lo]
    losses[mid] = np.log1p(np.exp(-m[mid]))
    coef = -y * expit(-m)
    grad = np.asarray(X.T @ coef).ravel() / n
    value = float(losses.sum()) / n
    if lam:
        value += lam * float(w @ w)
        grad += 2.0 * lam * w
    return ObjectiveEval(value, grad)


def f_logistic(w, ds, lam=0.0):
    """Mean logistic loss ``log(1 + exp(-y w.x))`` plus ``lam * |w|^2``."""
    if ds.n < 1:
        raise DataError("logistic loss needs at least one example")
    w = np.asarray(w, dtype=np.float64)
    return _logistic(w, ds.X, ds.y.astype(np.float64), lam)


def _hinge(w, X_pos, X_neg, lam):
    s_pos = np.asarray(X_pos @ w).ravel()
    s_neg = np.asarray(X_neg @ w).ravel()
    n_pos, n_neg = s_pos.size, s_neg.size

    # pair (i, j) is active iff s_neg[j] > s_pos[i] - 1
    thresh = s_pos - 1.0
    neg_sorted = np.sort(s_neg)
    suffix = np.concatenate([np.cumsum(neg_sorted[::-1])[::-1], [0.0]])
    first = np.searchsorted(neg_sorted, thresh, side="right")
    active_per_pos = n_neg - first
    total = float(np.sum(active_per_pos * (1.0 - s_pos)) + np.sum(suffix[first]))

    active_per_neg = np.searchsorted(np.sort(thresh), s_neg, side="left")
    scale = 1.0 / (n_pos * n_neg)
    grad = (np.asarray(X_neg.T @ active_per_neg.astype(np.float64)).ravel()
            - np.asarray(X_pos.T @ active_per_pos.astype(np.float64)).ravel()) * scale
    value = total * scale
    if lam:
        value += lam * float(w @ w)
        grad += 2.0 * lam * w
    return ObjectiveEval(value, grad)


def f_hinge_pairwise(w, ds, lam=0.0):
    """Mean pairwise hinge ``max(0, 1 - (w.x+ - w.x-))`` over all
    positive/negative pairs plus ``lam * |w|^2``, with a subgradient.

    Runs in O(n log n + nd): scores are sorted once and each positive's
    active negatives are counted by binary search against suffix sums.
    Pairs sitting exactly on the kink contribute nothing to the subgradient.
    """
    ds.require_both_classes()
    w = np.asarray(w, dtype=np.float64)
    return _hinge(w, ds.X_pos, ds.X_neg, lam)


class _Objective:
    def __call__(self, w):
        return self.evaluate(w)


class N01Objective(_Objective):
    def __init__(self, moments, lam=0.0):
        self.moments = moments
        self.lam = lam
        self.dimension = moments.dim

    def evaluate(self, w):
        return f_n01(w, self.moments, self.lam)


class NrankObjective(_Objective):
    def __init__(self, moments, lam=0.0):
        if not hasattr(moments, "mu_hat"):
            moments = diff_moments(moments)
        self.moments = moments
        self.lam = lam
        self.dimension = moments.dim

    def evaluate(self, w):
        return f_nrank(w, self.moments, self.lam)


class LogisticObjective(_Objective):
    def __init__(self, ds, lam=0.0):
        if ds.n < 1:
            raise DataError("logistic loss needs at least one example")
        self.X = ds.X
        self.y = ds.y.astype(np.float64)
        self.lam = lam
        self.dimension = ds.d

    def evaluate(self, w):
        return _logistic(np.asarray(w, dtype=np.float64), self.X, self.y, self.lam)


class HingeObjective(_Objective):
    def __init__(self, ds, lam=0.0):
        ds.require_both_classes()
        self.X_pos = ds.X_pos
        self.X_neg = ds.X_neg
        self.lam = lam
        self.dimension = ds.d

    def evaluate(self, w):
        return _hinge(np.asarray(w, dtype=np.float64), self.X_pos, self.X_neg,
                      self.lam)
