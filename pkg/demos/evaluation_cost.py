"""Per-evaluation cost as the training set grows.

With moments precomputed, one value+gradient evaluation of the smooth
surrogates costs O(d^2) regardless of n. Logistic loss is O(nd) and the
sorted pairwise hinge O(n log n + nd).
"""
from smoothrisk.metrics import eval_cost_probe

sizes = [1_000, 10_000, 100_000]
for objective in ("n01", "nrank", "logistic", "hinge"):
    table = eval_cost_probe(objective, sizes, d=50, n_evals=20, trials=3)
    times = "  ".join(f"{row['seconds'] * 1e6:9.1f} us" for row in table)
    print(f"{objective:<9}{times}   x{table[-1]['seconds'] / table[0]['seconds']:.1f}")
