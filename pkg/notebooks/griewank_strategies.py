"""Multi-start strategies on the modified Griewank function.

Run with ``python notebooks/griewank_strategies.py``. Cells are marked with
``# %%`` so the file also opens as a notebook in editors that support it.
"""

# %% setup
import numpy as np

from metamax.harness import config_from_dict, run_experiment

RUNS = 30
BUDGET = 5_000

# %% the objective: a product of cosines minus a quadratic, maximum 1 at 0
from metamax.benchmarks import griewank_mod

xs = np.linspace(-1, 1, 9)
print("f(x, 0) on a coarse grid:")
print(np.round([griewank_mod([x, 0.0]) for x in xs], 4))

# %% every strategy on the 2-dimensional function
config = config_from_dict(
    {
        "benchmark": {"kind": "griewank_mod", "dim": 2},
        "strategies": ["metamax_k", "metamax", "unif", "thrasc", "rand", "luby", "ee_unif", "ee_luby"],
        "k": 20,
        "budget": BUDGET,
        "runs": RUNS,
        "seed": 1,
    }
)
result = run_experiment(config)

# %% mean error at a few checkpoints
marks = [100, 1_000, BUDGET]
print(f"{'strategy':<12}" + "".join(f"{m:>12}" for m in marks))
for name, curve in result.curves.items():
    idx = [int(np.searchsorted(curve.checkpoints, m)) for m in marks]
    print(f"{name:<12}" + "".join(f"{curve.mean[i]:>12.3e}" for i in idx))

# %% the growing pool starts a new instance every round
tr = result.traces["metamax"][0]
last = tr.rounds[-1]
print("metamax rounds:", last.r, "instances:", last.r, "total steps:", last.total_steps)
