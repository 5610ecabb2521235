"""Smooth surrogates of the 0-1 loss and the ranking loss for linear
classifiers, built from per-class Gaussian moments."""

__version__ = "0.1.0"

from .dataset import (Dataset, ExactMoments, SyntheticSpec, gen_synthetic,
                      load_libsvm, parse_libsvm)
from .errors import DataError, NumericalError, ParseError
from .metrics import (BenchmarkConfig, accuracy, auc, empirical_error,
                      empirical_ranking_loss, eval_cost_probe, run_benchmark)
from .moments import ClassMoments, diff_moments, estimate_class_moments
from .objectives import f_hinge_pairwise, f_logistic, f_n01, f_nrank
from .optimizer import LbfgsConfig, lbfgs_minimize
from .training import Model, fit

__all__ = [
    "Dataset", "ExactMoments", "SyntheticSpec", "gen_synthetic",
    "load_libsvm", "parse_libsvm",
    "DataError", "NumericalError", "ParseError",
    "BenchmarkConfig", "accuracy", "auc", "empirical_error",
    "empirical_ranking_loss", "eval_cost_probe", "run_benchmark",
    "ClassMoments", "diff_moments", "estimate_class_moments",
    "f_hinge_pairwise", "f_logistic", "f_n01", "f_nrank",
    "LbfgsConfig", "lbfgs_minimize", "Model", "fit",
]
