"""Limited-memory BFGS with a strong Wolfe line search."""

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalError

__all__ = [
    "LbfgsConfig",
    "TrainResult",
    "IterationInfo",
    "initial_point",
    "random_unit",
    "strong_wolfe_search",
    "lbfgs_minimize",
]


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 20
    c1: float = 1e-4
    c2: float = 0.9
    max_iters: int = 500
    grad_tol: float = 1e-4
    max_linesearch: int = 50

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be at least 1")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 0 or self.max_linesearch < 1:
            raise ValueError("iteration caps must be positive")

    def to_dict(self):
        return {"memory": self.memory, "c1": self.c1, "c2": self.c2,
                "max_iters": self.max_iters, "grad_tol": self.grad_tol,
                "max_linesearch": self.max_linesearch}


@dataclass
class TrainResult:
    w_final: np.ndarray
    iterations: int
    final_grad_norm: float
    objective_value: float
    converged: bool
    solution_time: float
    trajectory: list = field(default_factory=list)
    message: str = ""

    def to_dict(self):
        return {
            "w_final": self.w_final.tolist(),
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "objective_value": self.objective_value,
            "converged": self.converged,
            "solution_time": self.solution_time,
            "message": self.message,
        }


class IterationInfo(NamedTuple):
    """Passed to the callback after every accepted step."""

    iteration: int
    w: np.ndarray
    value: float
    grad: np.ndarray
    prev_w: np.ndarray
    prev_value: float
    prev_grad: np.ndarray
    direction: np.ndarray
    step: float


def random_unit(d, seed):
    v = np.random.default_rng(seed).standard_normal(d)
    return v / np.linalg.norm(v)


def initial_point(mu_pos, mu_neg, seed=0):
    """Unit vector along the part of ``mu_pos`` orthogonal to ``mu_neg``.

    Falls back to a seeded random unit vector when ``mu_neg`` is zero or the
    means are (nearly) parallel.
    """
    mu_pos = np.asarray(mu_pos, dtype=np.float64)
    mu_neg = np.asarray(mu_neg, dtype=np.float64)
    nn = float(mu_neg @ mu_neg)
    norm_pos = float(np.linalg.norm(mu_pos))
    if nn == 0.0 or norm_pos == 0.0:
        return random_unit(mu_pos.size, seed)
    w = mu_pos - (float(mu_neg @ mu_pos) / nn) * mu_neg
    # second projection pass removes cancellation residue
    w -= (float(mu_neg @ w) / nn) * mu_neg
    norm = float(np.linalg.norm(w))
    if norm < 1e-10 * norm_pos:
        return random_unit(mu_pos.size, seed)
    return w / norm


# ---------------------------------------------------------------------------
# Line search
# ---------------------------------------------------------------------------

def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic matching values and slopes at ``a`` and ``b``."""
    if a == b:
        return None
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if not rad >= 0.0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if math.isfinite(t) else None


def strong_wolfe_search(phi, f0, d0, alpha0, c1=1e-4, c2=0.9, max_evals=50):
    """Find ``alpha`` satisfying the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(value, slope, payload)``. Returns
    ``(alpha, value, slope, payload)`` or ``None`` when the evaluation
    budget runs out.
    """
    evals = 0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        nonlocal evals
        while evals < max_evals:
            width = hi - lo
            t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1 * abs(width)
            if t is None or not (left + margin <= t <= right - margin):
                t = lo + 0.5 * width
            if t == lo or t == hi:
                return None
            f_t, d_t, p_t = phi(t)
            evals += 1
            if f_t > f0 + c1 * t * d0 or f_t >= f_lo:
                hi, f_hi, d_hi = t, f_t, d_t
            else:
                if abs(d_t) <= -c2 * d0:
                    return t, f_t, d_t, p_t
                if d_t * (hi - lo) >= 0.0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = t, f_t, d_t
        return None

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    while evals < max_evals:
        f_a, d_a, p_a = phi(a)
        evals += 1
        if f_a > f0 + c1 * a * d0 or (a_prev > 0.0 and f_a >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f_a, d_a)
        if abs(d_a) <= -c2 * d0:
            return a, f_a, d_a, p_a
        if d_a >= 0.0:
            return zoom(a, f_a, d_a, a_prev, f_prev, d_prev)
        a_prev, f_prev, d_prev = a, f_a, d_a
        a = 2.0 * a
    return None


# ---------------------------------------------------------------------------
# L-BFGS
# ---------------------------------------------------------------------------

def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def _evaluate(fun, w):
    out = fun(w)
    value, grad = float(out[0]), np.asarray(out[1], dtype=np.float64)
    return value, grad


def lbfgs_minimize(fun, w0, cfg=None, callback=None):
    """Minimize ``fun`` (``w -> (value, gradient)``) from ``w0``.

    Stops when the gradient norm drops to ``cfg.grad_tol``, after
    ``cfg.max_iters`` iterations, or when the line search fails; in the
    last two cases the best (latest) iterate is returned with
    ``converged=False``. Curvature pairs with ``s.y <= 1e-10 |s||y|`` are
    skipped.
    """
    cfg = cfg or LbfgsConfig()
    t_start = time.perf_counter()
    x = np.array(w0, dtype=np.float64)
    f, g = _evaluate(fun, x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalError("non-finite objective at the starting point", x)
    gnorm = float(np.linalg.norm(g))
    pairs = deque(maxlen=cfg.memory)
    trajectory = [(0, f, gnorm)]
    message = "iteration cap reached"
    k = 0

    while gnorm > cfg.grad_tol and k < cfg.max_iters:
        if pairs:
            p = _two_loop(g, pairs)
            alpha0 = 1.0
        else:
            p = -g
            alpha0 = min(1.0, 1.0 / gnorm)
        d0 = float(g @ p)
        if not d0 < 0.0:
            pairs.clear()
            p = -g
            d0 = -gnorm * gnorm
            alpha0 = min(1.0, 1.0 / gnorm)

        def phi(alpha, x=x, p=p):
            xt = x + alpha * p
            ft, gt = _evaluate(fun, xt)
            if not (math.isfinite(ft) and np.all(np.isfinite(gt))):
                raise NumericalError(
                    f"non-finite objective during line search at iteration {k + 1}", x)
            return ft, float(gt @ p), (xt, gt)

        found = strong_wolfe_search(phi, f, d0, alpha0, cfg.c1, cfg.c2,
                                    cfg.max_linesearch)
        if found is None:
            message = "line search failed"
            break
        alpha, f_new, _, (x_new, g_new) = found

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * math.sqrt(float(s @ s) * float(y @ y)):
            pairs.append((s, y, 1.0 / sy))

        k += 1
        if callback is not None:
            callback(IterationInfo(k, x_new, f_new, g_new, x, f, g, p, alpha))
        x, f, g = x_new, f_new, g_new
        gnorm = math.sqrt(float(g @ g))
        trajectory.append((k, f, gnorm))

    converged = gnorm <= cfg.grad_tol
    if converged:
        message = "gradient tolerance reached"
    return TrainResult(x, k, gnorm, f, converged,
                       time.perf_counter() - t_start, trajectory, message)
