"""End-to-end training: normalize, estimate moments, pick a start, run L-BFGS."""

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .dataset import apply_scale, normalize_features
from .errors import DataError
from .moments import diff_moments, estimate_class_moments
from .objectives import (OBJECTIVE_IDS, HingeObjective, LogisticObjective,
                         N01Objective, NrankObjective)
from .optimizer import LbfgsConfig, initial_point, lbfgs_minimize, random_unit

__all__ = ["Model", "default_lambda", "build_objective", "fit"]

MOMENT_LAMBDA = 0.001


def default_lambda(objective, ds):
    """0.001 for the moment objectives, ``1/n`` for logistic and
    ``1/sqrt(n+ n-)`` for pairwise hinge."""
    if objective in ("n01", "nrank"):
        return MOMENT_LAMBDA
    if objective == "logistic":
        return 1.0 / ds.n
    if objective == "hinge":
        return 1.0 / math.sqrt(ds.n_pos * ds.n_neg)
    raise ValueError(f"unknown objective {objective!r}")


@dataclass
class Model:
    w: np.ndarray
    scale: np.ndarray
    objective: str
    lam: float
    result: object = None
    moment_time: float = 0.0
    train_meta: dict = None

    @property
    def d(self):
        return self.w.size

    def transform(self, ds):
        if ds.d != self.d:
            raise DataError(f"model has d={self.d}, data has d={ds.d}")
        return apply_scale(ds, self.scale)

    def scores(self, ds):
        return self.transform(ds).scores(self.w)

    def to_json(self):
        meta = dict(self.train_meta or {})
        if self.result is not None:
            r = self.result
            meta.update(iterations=r.iterations,
                        final_grad_norm=r.final_grad_norm,
                        objective_value=r.objective_value,
                        converged=r.converged,
                        solution_time=r.solution_time,
                        message=r.message)
        meta["moment_time"] = self.moment_time
        return {"d": self.d, "w": self.w.tolist(), "scale": self.scale.tolist(),
                "objective": self.objective, "lambda": self.lam,
                "train_meta": meta}

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        w = np.asarray(doc["w"], dtype=np.float64)
        scale = np.asarray(doc.get("scale") or np.ones(w.size), dtype=np.float64)
        if w.size != doc.get("d", w.size) or scale.size != w.size:
            raise DataError("model file has inconsistent dimensions")
        meta = doc.get("train_meta") or {}
        return cls(w, scale, doc["objective"], float(doc["lambda"]),
                   moment_time=float(meta.get("moment_time", 0.0)),
                   train_meta=meta)


def build_objective(objective, ds, lam, moments=None, rep="auto"):
    """Return ``(objective, moments, moment_time)`` for data already in the
    training feature space. ``moments`` (a ClassMoments) replaces the
    empirical estimate for the moment objectives."""
    if objective not in OBJECTIVE_IDS:
        raise ValueError(f"unknown objective {objective!r}; "
                         f"choose from {', '.join(OBJECTIVE_IDS)}")
    if objective in ("n01", "nrank"):
        t0 = time.perf_counter()
        cm = moments if moments is not None else estimate_class_moments(ds, rep)
        if objective == "n01":
            obj = N01Objective(cm, lam)
        else:
            obj = NrankObjective(diff_moments(cm), lam)
        return obj, cm, time.perf_counter() - t0
    if objective == "logistic":
        return LogisticObjective(ds, lam), None, 0.0
    return HingeObjective(ds, lam), None, 0.0


def fit(ds, objective, lam=None, cfg=None, moments=None, rep="auto",
        normalize=True, seed=0, callback=None):
    """Train a linear classifier on ``ds``.

    ``moments`` are given in the original feature space (e.g. the exact
    generating moments of synthetic data) and are rescaled along with the
    features. Moment objectives start from the mean-orthogonalized point,
    baselines from a seeded random unit vector.
    """
    ds.require_both_classes()
    if normalize:
        ds, scale = normalize_features(ds)
    else:
        scale = np.ones(ds.d)
    if moments is not None and normalize:
        moments = moments.rescaled(scale)
    if lam is None:
        lam = default_lambda(objective, ds)

    obj, cm, moment_time = build_objective(objective, ds, lam, moments, rep)
    if cm is not None:
        w0 = initial_point(cm.mu_pos, cm.mu_neg, seed)
    else:
        w0 = random_unit(ds.d, seed)
    result = lbfgs_minimize(obj, w0, cfg or LbfgsConfig(), callback)
    return Model(result.w_final, scale, objective, lam, result, moment_time,
                 {"normalized": bool(normalize), "seed": seed,
                  "n": ds.n, "n_pos": ds.n_pos, "n_neg": ds.n_neg})
