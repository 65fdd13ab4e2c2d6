"""Restarting k-means: METAMAX against plain serial restarts.

Run with ``python notebooks/kmeans_restarts.py``.
"""

# %% setup
import numpy as np

from metamax.benchmarks import bundled_dataset
from metamax.harness import config_from_dict, run_experiment

data = bundled_dataset()
print("dataset:", data.M, "points in", data.d, "dimensions")

# %% both initializations, both strategies
for init in ("uniform", "pp"):
    config = config_from_dict(
        {
            "benchmark": {"kind": "clustering", "clusters": 50, "init": init},
            "strategies": ["metamax", "serial"],
            "budget": 2_000,
            "runs": 10,
            "seed": 7,
        }
    )
    result = run_experiment(config)
    for name, curve in result.curves.items():
        # without a known optimum the curves hold the best value, here minus the cost
        print(f"{init:<8} {name:<8} mean best cost at T: {-curve.mean[-1]:.2f}")

# %% a single Lloyd run never increases the cost
from metamax.searchers import ClusteringObjective, KMeansSearcher

obj = ClusteringObjective(data, 50)
s = KMeansSearcher(obj, np.random.default_rng(0))
costs = []
while not s.terminated:
    costs.append(obj.shift - s.step().values[0])
print("Lloyd steps:", len(costs), "first cost:", round(costs[0], 2), "last cost:", round(costs[-1], 2))
