"""How fast METAMAX adds instances compared with the total step count.

The ratio r ln t_r / t_r stays in a narrow band, so the number of instances
grows like t / ln t. Run with ``python notebooks/instance_growth.py``.
"""

# %% setup
import numpy as np

from metamax.benchmarks import BenchmarkSpec, make_benchmark
from metamax.harness import instance_growth_report
from metamax.strategies import StrategyConfig, run_strategy

make = make_benchmark(BenchmarkSpec("griewank_mod", {"dim": 2}))

# %% a few long runs
traces = []
for seed in range(3):
    obj, factory = make(seed)
    traces.append(run_strategy(StrategyConfig("metamax", T=30_000), obj, factory, np.random.default_rng(seed)))

# %% the ratio along each run
report = instance_growth_report(traces, tail=1_000)
lo, hi = report.band
print(f"ratio band for t_r >= 1000: {lo:.3f} .. {hi:.3f}")
for t_target in (1_000, 3_000, 10_000):
    ratios = [ratio for _, _, t, _, ratio in report.rows if t >= t_target][:1]
    if ratios:
        print(f"t_r ~ {t_target}: ratio {ratios[0]:.3f}")
