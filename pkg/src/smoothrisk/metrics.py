"""Evaluation measures, the cross-validated benchmark harness and the
per-evaluation cost probe."""

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import (Dataset, SyntheticSpec, flip_labels,
                      gen_synthetic, kfold_indices, load_libsvm,
                      sample_gaussian_classes)
from .errors import DataError
from .moments import ClassMoments, estimate_class_moments, diff_moments
from .objectives import (OBJECTIVE_IDS, HingeObjective, LogisticObjective,
                         N01Objective, NrankObjective)
from .optimizer import LbfgsConfig
from .training import fit

__all__ = [
    "empirical_error",
    "accuracy",
    "ranking_inversions",
    "empirical_ranking_loss",
    "auc",
    "RunRecord",
    "BenchmarkConfig",
    "EvalReport",
    "summarize",
    "run_benchmark",
    "records_to_csv",
    "records_from_csv",
    "timings_to_csv",
    "eval_cost_probe",
]

MAX_REDRAWS = 10


def empirical_error(w, ds):
    """Fraction of examples with ``y * w.x < 0``; a zero score is correct."""
    if ds.n < 1:
        raise DataError("empirical error of an empty dataset")
    s = ds.scores(np.asarray(w, dtype=np.float64))
    return int(np.count_nonzero(ds.y * s < 0.0)) / ds.n


def accuracy(w, ds):
    return 1.0 - empirical_error(w, ds)


def ranking_inversions(s_pos, s_neg):
    """Counts ``(#{s+ < s-}, #{s+ == s-})`` over all pairs in O(n log n)."""
    s_pos = np.asarray(s_pos, dtype=np.float64)
    neg_sorted = np.sort(np.asarray(s_neg, dtype=np.float64))
    right = np.searchsorted(neg_sorted, s_pos, side="right")
    left = np.searchsorted(neg_sorted, s_pos, side="left")
    inversions = int(np.sum(neg_sorted.size - right))
    ties = int(np.sum(right - left))
    return inversions, ties


def empirical_ranking_loss(w, ds, ties="strict", scores=None):
    """Fraction of positive/negative pairs ranked the wrong way round.

    ``ties="strict"`` counts tied pairs as correctly ranked (strict
    inequality); ``ties="half"`` charges them 1/2, the usual AUC convention.
    """
    ds.require_both_classes()
    s = ds.scores(np.asarray(w, dtype=np.float64)) if scores is None else scores
    inv, tie = ranking_inversions(s[ds.y == 1], s[ds.y == -1])
    if ties == "strict":
        count = inv
    elif ties == "half":
        count = inv + 0.5 * tie
    else:
        raise ValueError(f"unknown ties policy {ties!r}")
    return count / (ds.n_pos * ds.n_neg)


def auc(w, ds, ties="strict", scores=None):
    return 1.0 - empirical_ranking_loss(w, ds, ties, scores)


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

RUN_FIELDS = ("objective", "repeat", "fold", "seed", "n_train", "n_test",
              "lambda", "accuracy", "auc", "iterations", "converged",
              "final_grad_norm")
TIMING_FIELDS = ("objective", "repeat", "fold", "moment_time", "solution_time")


@dataclass
class RunRecord:
    objective: str
    repeat: int
    fold: int
    seed: int
    n_train: int
    n_test: int
    lam: float
    accuracy: float
    auc: float
    iterations: int
    converged: bool
    final_grad_norm: float
    moment_time: float = 0.0
    solution_time: float = 0.0


@dataclass
class BenchmarkConfig:
    """``data`` is a LIBSVM path, a Dataset, or a SyntheticSpec.

    ``protocol="kfold"`` runs ``repeats`` rounds of ``k``-fold CV;
    ``"holdout"`` runs ``repeats`` random ``train_frac`` splits.
    ``outlier_frac`` flips that share of training labels in every fold.
    ``moments="exact"`` trains the moment objectives on the generating
    moments (synthetic data only). ``lam=None`` applies the per-objective
    default.
    """

    objectives: tuple = ("n01",)
    data: object = None
    k: int = 5
    repeats: int = 4
    seed: int = 0
    lam: float = None
    protocol: str = "kfold"
    train_frac: float = 0.8
    normalize: bool = True
    outlier_frac: float = 0.0
    moments: str = "empirical"
    representation: str = "auto"
    auc_ties: str = "strict"
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    name: str = ""

    def __post_init__(self):
        if isinstance(self.objectives, str):
            self.objectives = tuple(o.strip() for o in self.objectives.split(","))
        self.objectives = tuple(self.objectives)
        for o in self.objectives:
            if o not in OBJECTIVE_IDS:
                raise ValueError(f"unknown objective {o!r}")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.protocol not in ("kfold", "holdout"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.moments not in ("empirical", "exact"):
            raise ValueError(f"unknown moments source {self.moments!r}")
        if self.auc_ties not in ("strict", "half"):
            raise ValueError(f"unknown ties policy {self.auc_ties!r}")
        if self.representation not in ("auto", "explicit", "implicit"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError("train_frac must lie in (0, 1)")
        if isinstance(self.lbfgs, dict):
            self.lbfgs = LbfgsConfig(**self.lbfgs)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        data = doc.get("data")
        if isinstance(data, dict):
            doc["data"] = SyntheticSpec(**data)
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        return cls(**doc)

    def to_dict(self):
        data = self.data
        if isinstance(data, SyntheticSpec):
            data = data.to_dict()
        elif isinstance(data, tuple):
            data = f"<in-memory dataset n={data[0].n} d={data[0].d} with moments>"
        elif isinstance(data, Dataset):
            data = f"<in-memory dataset n={data.n} d={data.d}>"
        return {"objectives": list(self.objectives), "data": data, "k": self.k,
                "repeats": self.repeats, "seed": self.seed, "lambda": self.lam,
                "protocol": self.protocol, "train_frac": self.train_frac,
                "normalize": self.normalize, "outlier_frac": self.outlier_frac,
                "moments": self.moments, "representation": self.representation,
                "auc_ties": self.auc_ties, "lbfgs": self.lbfgs.to_dict(),
                "name": self.name}


@dataclass
class EvalReport:
    objective: str
    dataset: str
    records: list

    @property
    def runs(self):
        return len(self.records)

    def summary(self):
        return summarize(self.records, self.objective, self.dataset)


def _mean_std(values):
    a = np.asarray(values, dtype=np.float64)
    std = float(np.std(a, ddof=1)) if a.size > 1 else 0.0
    return float(np.mean(a)), std


def summarize(records, objective=None, dataset=""):
    """Mean and sample standard deviation over per-run records."""
    if objective is not None:
        records = [r for r in records if r.objective == objective]
    if not records:
        raise ValueError("no records to summarize")
    mean_acc, std_acc = _mean_std([r.accuracy for r in records])
    mean_auc, std_auc = _mean_std([r.auc for r in records])
    return {
        "objective": records[0].objective,
        "dataset": dataset,
        "runs": len(records),
        "mean_acc": mean_acc,
        "std_acc": std_acc,
        "mean_auc": mean_auc,
        "std_auc": std_auc,
        "mean_iters": float(np.mean([r.iterations for r in records])),
        "moment_time": float(np.mean([r.moment_time for r in records])),
        "solution_time": float(np.mean([r.solution_time for r in records])),
    }


def _fold_ok(train, test):
    return (train.n_pos >= 2 and train.n_neg >= 2
            and test.n_pos >= 1 and test.n_neg >= 1)


def _draw_folds(ds, cfg, repeat):
    """Index folds for one repeat, redrawn with derived seeds when a fold
    lacks a class."""
    for attempt in range(MAX_REDRAWS):
        seed = cfg.seed + 1000 * repeat + attempt
        if cfg.protocol == "kfold":
            folds = kfold_indices(ds.n, cfg.k, seed)
        else:
            perm = np.random.default_rng(seed).permutation(ds.n)
            n_train = int(np.floor(cfg.train_frac * ds.n + 0.5))
            folds = [(np.sort(perm[:n_train]), np.sort(perm[n_train:]))]
        if all(_fold_ok(ds.subset(tr), ds.subset(te)) for tr, te in folds):
            return seed, folds
    raise DataError(
        f"repeat {repeat}: no class-balanced split after {MAX_REDRAWS} attempts")


def _resolve_data(cfg):
    data = cfg.data
    if isinstance(data, Dataset):
        return data, None, cfg.name or "dataset"
    if isinstance(data, SyntheticSpec):
        ds, exact = gen_synthetic(data)
        return ds, exact, cfg.name or f"synthetic(d={data.d},n={data.n})"
    if isinstance(data, tuple) and len(data) == 2:
        return data[0], data[1], cfg.name or "dataset"
    if isinstance(data, str):
        return load_libsvm(data), None, cfg.name or data
    raise ValueError("BenchmarkConfig.data must be a path, Dataset or SyntheticSpec")


def run_benchmark(cfg):
    """Cross-validated comparison of ``cfg.objectives`` on shared splits.

    Returns a dict mapping objective id to its EvalReport.
    """
    ds, exact, name = _resolve_data(cfg)
    ds.require_both_classes(2)
    if cfg.moments == "exact":
        if exact is None:
            raise DataError("exact moments requested for non-synthetic data")
        exact_cm = exact if isinstance(exact, ClassMoments) else ClassMoments.from_exact(exact)
    else:
        exact_cm = None

    records = []
    for repeat in range(cfg.repeats):
        seed, folds = _draw_folds(ds, cfg, repeat)
        for fold, (tr, te) in enumerate(folds):
            train, test = ds.subset(tr), ds.subset(te)
            if cfg.outlier_frac > 0:
                train, _ = flip_labels(train, cfg.outlier_frac, seed + 7919 * (fold + 1))
                if train.n_pos < 2 or train.n_neg < 2:
                    raise DataError("label flipping emptied a training class")
            for objective in cfg.objectives:
                model = fit(train, objective, lam=cfg.lam, cfg=cfg.lbfgs,
                            moments=exact_cm if objective in ("n01", "nrank") else None,
                            rep=cfg.representation, normalize=cfg.normalize,
                            seed=seed + fold)
                s = model.scores(test)
                err = int(np.count_nonzero(test.y * s < 0.0)) / test.n
                r = model.result
                records.append(RunRecord(
                    objective, repeat, fold, seed, train.n, test.n, model.lam,
                    1.0 - err,
                    auc(None, test, cfg.auc_ties, scores=s),
                    r.iterations, r.converged, r.final_grad_norm,
                    model.moment_time, r.solution_time))
    return {o: EvalReport(o, name, [r for r in records if r.objective == o])
            for o in cfg.objectives}


def records_to_csv(records):
    """Per-run CSV without timings, so reruns with one seed match byte for byte."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_FIELDS)
    for r in records:
        writer.writerow([r.objective, r.repeat, r.fold, r.seed, r.n_train,
                         r.n_test, repr(float(r.lam)), repr(float(r.accuracy)),
                         repr(float(r.auc)), r.iterations, int(r.converged),
                         repr(float(r.final_grad_norm))])
    return buf.getvalue()


def records_from_csv(text, timings=None):
    rows = list(csv.DictReader(io.StringIO(text)))
    times = {}
    if timings is not None:
        for t in csv.DictReader(io.StringIO(timings)):
            key = (t["objective"], int(t["repeat"]), int(t["fold"]))
            times[key] = (float(t["moment_time"]), float(t["solution_time"]))
    out = []
    for row in rows:
        key = (row["objective"], int(row["repeat"]), int(row["fold"]))
        mt, st = times.get(key, (0.0, 0.0))
        out.append(RunRecord(row["objective"], int(row["repeat"]), int(row["fold"]),
                             int(row["seed"]), int(row["n_train"]), int(row["n_test"]),
                             float(row["lambda"]), float(row["accuracy"]),
                             float(row["auc"]), int(row["iterations"]),
                             bool(int(row["converged"])),
                             float(row["final_grad_norm"]), mt, st))
    return out


def timings_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMING_FIELDS)
    for r in records:
        writer.writerow([r.objective, r.repeat, r.fold, repr(r.moment_time),
                         repr(r.solution_time)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Evaluation cost probe
# ---------------------------------------------------------------------------

def _probe_objective(objective, ds):
    if objective in ("n01", "nrank"):
        cm = estimate_class_moments(ds, "explicit")
        if objective == "n01":
            return N01Objective(cm, 0.001)
        return NrankObjective(diff_moments(cm), 0.001)
    if objective == "logistic":
        return LogisticObjective(ds, 1.0 / ds.n)
    return HingeObjective(ds, 1.0 / np.sqrt(ds.n_pos * ds.n_neg))


def eval_cost_probe(objective, sizes, d=50, n_evals=100, trials=5, seed=0):
    """Mean wall time of one value+gradient evaluation at each ``n``.

    Moments are estimated outside the timed region. Each size is timed
    ``trials`` times and the fastest mean is kept to damp scheduler noise.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal(d)
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    eye = np.eye(d)
    table = []
    for n in sizes:
        n_pos = n // 2
        ds = sample_gaussian_classes(n_pos, n - n_pos, mu, -mu, eye, eye,
                                     np.random.default_rng(seed + n))
        obj = _probe_objective(objective, ds)
        obj(w)
        best = float("inf")
        for _ in range(trials):
            t0 = time.perf_counter()
            for _ in range(n_evals):
                obj(w)
            best = min(best, (time.perf_counter() - t0) / n_evals)
        table.append({"objective": objective, "n": n, "d": d, "seconds": best})
    return table
