"""Smooth ranking surrogate against the pairwise hinge loss.

Both target AUC. The hinge needs a sort over all n scores per evaluation;
the moment surrogate needs two d x d products. We grow n at fixed d and
watch the training times diverge while AUC stays level. The moment time
is included in the surrogate's column.
"""
from smoothrisk import BenchmarkConfig, SyntheticSpec, run_benchmark

print(f"{'n':>7}{'nrank AUC':>11}{'hinge AUC':>11}{'nrank s':>10}{'hinge s':>10}")
for n in (2_000, 8_000, 32_000):
    cfg = BenchmarkConfig(objectives=("nrank", "hinge"),
                          data=SyntheticSpec(d=8, n=n, prior_pos=0.2, seed=3),
                          protocol="holdout", repeats=2, outlier_frac=0.05,
                          lam=0.0, seed=0)
    reports = run_benchmark(cfg)
    a, b = reports["nrank"].summary(), reports["hinge"].summary()
    t_a = a["moment_time"] + a["solution_time"]
    print(f"{n:>7}{a['mean_auc']:>11.4f}{b['mean_auc']:>11.4f}"
          f"{t_a:>10.4f}{b['solution_time']:>10.4f}")
