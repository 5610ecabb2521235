"""Tabular data behind the path plots and score histograms."""

import numpy as np

from .metrics import empirical_error, empirical_ranking_loss
from .moments import diff_moments, estimate_class_moments
from .objectives import f_hinge_pairwise, f_logistic, f_n01, f_nrank

__all__ = ["PATH_FUNCTIONS", "path_values", "score_histograms"]

PATH_FUNCTIONS = ("n01", "emp01", "logistic", "nrank", "emprank", "hinge")


def path_values(w_start, w_end, ds, functions=("n01", "emp01"), points=100,
                rep="auto"):
    """Evaluate unpenalized objectives along the segment ``w_start -> w_end``.

    Returns ``points`` dicts with keys ``t`` and one per requested function.
    The moment objectives are undefined at ``w = 0`` and report ``None``
    there.
    """
    w_start = np.asarray(w_start, dtype=np.float64)
    w_end = np.asarray(w_end, dtype=np.float64)
    if w_start.shape != w_end.shape or w_start.shape != (ds.d,):
        raise ValueError(
            f"endpoint shapes {w_start.shape}, {w_end.shape} vs data d={ds.d}")
    unknown = set(functions) - set(PATH_FUNCTIONS)
    if unknown:
        raise ValueError(f"unknown path functions {sorted(unknown)}")

    cm = dm = None
    if "n01" in functions or "nrank" in functions:
        cm = estimate_class_moments(ds, rep)
        dm = diff_moments(cm)

    def smooth(fn, w, moments):
        if not np.any(w):
            return None
        return fn(w, moments).value

    evaluators = {
        "n01": lambda w: smooth(f_n01, w, cm),
        "nrank": lambda w: smooth(f_nrank, w, dm),
        "emp01": lambda w: empirical_error(w, ds),
        "emprank": lambda w: empirical_ranking_loss(w, ds),
        "logistic": lambda w: f_logistic(w, ds).value,
        "hinge": lambda w: f_hinge_pairwise(w, ds).value,
    }
    rows = []
    for t in np.linspace(0.0, 1.0, points):
        w = (1.0 - t) * w_start + t * w_end
        row = {"t": float(t)}
        for name in functions:
            row[name] = evaluators[name](w)
        rows.append(row)
    return rows


def score_histograms(w, ds, bins=50, max_pairs=100_000, seed=0):
    """Histograms of ``w.x+``, ``w.x-`` and pair differences ``w.(x+_i - x-_j)``.

    The pair population uses every pair when there are at most
    ``max_pairs`` of them, else a seeded uniform sample of that size.
    Each row also carries the population's sample mean and standard
    deviation for overlaying a normal fit.
    """
    ds.require_both_classes()
    s = ds.scores(np.asarray(w, dtype=np.float64))
    s_pos, s_neg = s[ds.y == 1], s[ds.y == -1]
    if s_pos.size * s_neg.size <= max_pairs:
        pairs = (s_pos[:, None] - s_neg[None, :]).ravel()
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, s_pos.size, size=max_pairs)
        j = rng.integers(0, s_neg.size, size=max_pairs)
        pairs = s_pos[i] - s_neg[j]

    rows = []
    for name, values in (("pos", s_pos), ("neg", s_neg), ("pair", pairs)):
        counts, edges = np.histogram(values, bins=bins)
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        for b in range(bins):
            rows.append({"population": name, "bin": b,
                         "left": float(edges[b]), "right": float(edges[b + 1]),
                         "count": int(counts[b]), "fit_mean": mean,
                         "fit_std": std})
    return rows
