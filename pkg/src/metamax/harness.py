"""Experiment orchestration: configuration, seeding, batched runs,
aggregation into error curves, instance-growth reports, theory probes and
CSV output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .benchmarks import BenchmarkSpec, SyntheticCurve, SyntheticFactory, SyntheticObjective, benchmark_keys, make_benchmark
from .core import InvariantViolation, RunTrace
from .hull import HFunction
from .strategies import (
    GROWING_KINDS,
    STRATEGY_KINDS,
    BudgetRun,
    MetaMax,
    MetaMaxInf,
    MetaMaxK,
    StrategyConfig,
    run_strategy,
)

__all__ = [
    "CI99_Z",
    "AggregateCurve",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "GrowthReport",
    "ProbeResult",
    "TheoryProbe",
    "aggregate",
    "default_checkpoints",
    "emit_csv",
    "instance_growth_report",
    "load_config",
    "parse_config",
    "read_rounds_csv",
    "run_experiment",
    "run_seed",
    "theory_probe",
    "verify_theorems",
]

log = logging.getLogger(__name__)

CI99_Z = 2.576
GROWTH_TAIL = 1_000


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


# ---------------------------------------------------------------------------
# configuration


def default_checkpoints(T: int, count: int = 50) -> np.ndarray:
    """``count`` log-spaced evaluation counts from 10 to ``T`` (duplicates
    after rounding dropped)."""
    if T <= 10:
        return np.arange(1, T + 1, dtype=np.int64)
    grid = np.unique(np.round(np.geomspace(10, T, count)).astype(np.int64))
    grid[-1] = T
    return grid


@dataclass
class ExperimentConfig:
    benchmark: BenchmarkSpec
    strategies: list
    runs: int = 10
    budget: int = 10_000
    seed: int = 0
    checkpoints: Optional[Sequence[int]] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be at least 1")
        if not self.strategies:
            raise ConfigError("no strategies given")
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ConfigError(f"strategy names must be unique, got {names} (set a label)")
        for s in self.strategies:
            if s.T != self.budget:
                raise ConfigError(f"strategy {s.name} has budget {s.T}, experiment has {self.budget}")
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.budget)
        cp = np.asarray(self.checkpoints, dtype=np.int64)
        if cp.ndim != 1 or cp.size == 0:
            raise ConfigError("checkpoints must be a non-empty list")
        if np.any(np.diff(cp) <= 0):
            raise ConfigError("checkpoints must be strictly increasing")
        if cp[0] < 1 or cp[-1] > self.budget:
            raise ConfigError(f"checkpoints must lie in [1, {self.budget}]")
        self.checkpoints = cp


_TOP_KEYS = {"benchmark", "strategies", "runs", "budget", "seed", "checkpoints", "out", "k", "h", "thrasc_s", "thrasc_delta"}
_STRATEGY_KEYS = {"kind", "K", "k", "h", "thrasc_s", "thrasc_delta", "label"}


def parse_h(value) -> HFunction:
    """``"time_varying"`` or ``"exponential:<alpha>"`` (or a dict with
    ``kind`` and ``alpha``)."""
    if isinstance(value, HFunction):
        return value
    if isinstance(value, dict):
        unknown = set(value) - {"kind", "alpha"}
        if unknown:
            raise ConfigError(f"unknown h keys {sorted(unknown)}")
        kind, alpha = value.get("kind", "time_varying"), value.get("alpha")
    else:
        kind, _, alpha = str(value).partition(":")
        alpha = float(alpha) if alpha else None
    try:
        if kind == "time_varying":
            return HFunction.time_varying()
        if kind == "exponential":
            return HFunction.exponential(alpha)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad h {value!r}: {exc}") from None
    raise ConfigError(f"unknown h kind {kind!r}")


def _strategy(item, budget: int, defaults: dict) -> StrategyConfig:
    spec = {"kind": item} if isinstance(item, str) else dict(item)
    unknown = set(spec) - _STRATEGY_KEYS
    if unknown:
        raise ConfigError(f"unknown strategy keys {sorted(unknown)}")
    merged = {**defaults, **spec}
    K = merged.get("K", merged.get("k", 100))
    try:
        return StrategyConfig(
            kind=merged["kind"],
            T=budget,
            K=int(K),
            h=parse_h(merged.get("h", "time_varying")),
            thrasc_s=int(merged.get("thrasc_s", 100)),
            thrasc_delta=float(merged.get("thrasc_delta", 0.01)),
            label=merged.get("label"),
        )
    except KeyError:
        raise ConfigError("strategy entry without kind") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _flat_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_flat(text: str) -> dict:
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        value = value.strip()
        if key == "strategies" and not value.startswith("["):
            raw[key] = [v.strip() for v in value.split(",") if v.strip()]
        elif key == "checkpoints" and not value.startswith("["):
            raw[key] = [int(v) for v in value.split(",") if v.strip()]
        else:
            raw[key] = _flat_value(value)
    # flat files keep benchmark parameters at top level
    bench = raw.get("benchmark")
    if isinstance(bench, str):
        if bench not in ("griewank_mod", "clustering", "synthetic", "subprocess"):
            raise ConfigError(f"unknown benchmark {bench!r}")
        params = {k: raw.pop(k) for k in list(raw) if k in benchmark_keys(bench) and k not in _TOP_KEYS}
        raw["benchmark"] = {"kind": bench, **params}
    return raw


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from JSON or flat ``key = value``
    text. Unknown keys are errors. ``overrides`` replaces top-level keys."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        raw = _parse_flat(text)
    return config_from_dict(raw, overrides)


def config_from_dict(raw: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "benchmark" and isinstance(v, str):
            old = raw.get("benchmark")
            old_kind = old.get("kind") if isinstance(old, dict) else old
            raw[k] = old if old_kind == v else {"kind": v}
        else:
            raw[k] = v
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    bench = raw.get("benchmark")
    if bench is None:
        raise ConfigError("config needs a benchmark")
    if isinstance(bench, str):
        bench = {"kind": bench}
    bench = dict(bench)
    kind = bench.pop("kind", None)
    params = bench.pop("params", {})
    params.update(bench)
    try:
        spec = BenchmarkSpec(kind, params)
        unknown = set(params) - benchmark_keys(kind)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    if unknown:
        raise ConfigError(f"unknown {kind} parameters {sorted(unknown)}")
    try:
        budget = int(raw.get("budget", 10_000))
        runs = int(raw.get("runs", 10))
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    defaults = {k: raw[k] for k in ("k", "h", "thrasc_s", "thrasc_delta") if k in raw}
    items = raw.get("strategies", ["metamax"])
    if isinstance(items, (str, dict)):
        items = [items]
    strategies = [_strategy(it, budget, defaults) for it in items]
    return ExperimentConfig(
        benchmark=spec,
        strategies=strategies,
        runs=runs,
        budget=budget,
        seed=seed,
        checkpoints=raw.get("checkpoints"),
        out=raw.get("out"),
    )


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, overrides)


# ---------------------------------------------------------------------------
# running and aggregation


def run_seed(base: int, strategy_index: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base, strategy_index, run_index])


@dataclass
class AggregateCurve:
    """Per-checkpoint error statistics of one strategy.

    ``error`` is ``known_max - best`` when the optimum is known, otherwise
    the raw best value. ``std`` and ``halfwidth`` are NaN (absent) where
    fewer than two runs contribute.
    """

    strategy: str
    checkpoints: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    halfwidth: np.ndarray
    runs: np.ndarray
    is_error: bool = True


def aggregate(strategy: str, samples: np.ndarray, checkpoints, is_error: bool = True) -> AggregateCurve:
    """Aggregate a ``(runs, checkpoints)`` matrix; NaN entries (checkpoint
    before a run's first step) are left out."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    ok = ~np.isnan(samples)
    runs = ok.sum(axis=0)
    mean = np.full(samples.shape[1], np.nan)
    std = np.full(samples.shape[1], np.nan)
    for j in range(samples.shape[1]):
        col = samples[ok[:, j], j]
        if col.size:
            mean[j] = col.mean()
        if col.size > 1:
            std[j] = col.std(ddof=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        half = np.where(runs > 1, CI99_Z * std / np.sqrt(runs), np.nan)
    return AggregateCurve(strategy, np.asarray(checkpoints), mean, std, half, runs, is_error)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict
    curves: dict
    invalid: dict
    known_max: Optional[float] = None


def run_experiment(
    config: ExperimentConfig,
    check_invariants: bool = False,
    progress: Optional[Callable[[str, int], None]] = None,
) -> ExperimentResult:
    """Run every strategy ``config.runs`` times and aggregate the traces.

    Run ``j`` of strategy ``i`` draws all randomness from
    ``SeedSequence([seed, i, j])``: one child seeds the benchmark (start
    points, searcher streams), the other the strategy's own choices.
    Invalid runs are left out of the curves and counted in ``invalid``.
    """
    make = make_benchmark(config.benchmark)
    traces: dict = {}
    curves: dict = {}
    invalid: dict = {}
    known_max = None
    for si, strat in enumerate(config.strategies):
        kept = []
        bad = 0
        for ri in range(config.runs):
            bench_ss, strat_ss = run_seed(config.seed, si, ri).spawn(2)
            objective, factory = make(bench_ss)
            known_max = objective.known_max
            tr = run_strategy(
                strat,
                objective,
                factory,
                np.random.default_rng(strat_ss),
                check_invariants=check_invariants,
                seed=(config.seed, si, ri),
            )
            tr.run = ri
            if tr.valid:
                kept.append(tr)
            else:
                bad += 1
                log.warning("%s run %d invalid: %s", strat.name, ri, tr.failure)
            if progress is not None:
                progress(strat.name, ri)
        traces[strat.name] = kept
        invalid[strat.name] = bad
        if kept:
            samples = np.vstack([tr.best_at(config.checkpoints, known_max) for tr in kept])
            curves[strat.name] = aggregate(strat.name, samples, config.checkpoints, known_max is not None)
    return ExperimentResult(config, traces, curves, invalid, known_max)


# ---------------------------------------------------------------------------
# instance growth


@dataclass
class GrowthReport:
    """Rows ``(strategy, run, t_r, r, r ln t_r / t_r)`` and, per run, the
    ratio's range over rounds with ``t_r >= tail``."""

    rows: list
    tail_min: dict
    tail_max: dict
    tail: int = GROWTH_TAIL

    @property
    def band(self) -> tuple:
        lo = min(self.tail_min.values(), default=math.nan)
        hi = max(self.tail_max.values(), default=math.nan)
        return lo, hi


def _growth_rows(name: str, run, pairs, tail: int, report: GrowthReport):
    lo, hi = math.inf, -math.inf
    for r, t in pairs:
        if t <= 1:
            continue  # ln 1 = 0: ratio undefined
        ratio = r * math.log(t) / t
        report.rows.append((name, run, t, r, ratio))
        if t >= tail:
            lo, hi = min(lo, ratio), max(hi, ratio)
    if lo <= hi:
        report.tail_min[(name, run)] = lo
        report.tail_max[(name, run)] = hi


def instance_growth_report(traces: Sequence[RunTrace], tail: int = GROWTH_TAIL) -> GrowthReport:
    """Ratio ``r ln t_r / t_r`` of instance count to total steps for runs of
    a growing-pool strategy (where the pool size equals the round index)."""
    report = GrowthReport([], {}, {}, tail)
    for k, tr in enumerate(traces):
        kind = getattr(tr, "kind", "") or tr.strategy.split(":")[0]
        if kind not in GROWING_KINDS:
            raise ValueError(f"instance growth needs METAMAX or METAMAX(inf) runs, got {tr.strategy!r}")
        run = getattr(tr, "run", k)
        _growth_rows(tr.strategy, run, ((rec.r, rec.total_steps) for rec in tr.rounds), tail, report)
    return report


def read_rounds_csv(path) -> dict:
    """``{(strategy, run): [(round, total_steps), ...]}`` from rounds.csv."""
    out: dict = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"strategy", "run", "round", "total_steps"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: not a rounds.csv file (need columns {sorted(need)})")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["strategy"], int(row["run"]))
                out.setdefault(key, []).append((int(row["round"]), int(row["total_steps"])))
            except (TypeError, ValueError):
                raise ValueError(f"{path}: line {lineno}: malformed row") from None
    return out


def growth_report_from_rounds(rounds: dict, tail: int = GROWTH_TAIL) -> GrowthReport:
    report = GrowthReport([], {}, {}, tail)
    for (name, run), pairs in sorted(rounds.items()):
        if name.split(":")[0] not in GROWING_KINDS:
            raise ValueError(f"instance growth needs METAMAX or METAMAX(inf) runs, got {name!r}")
        _growth_rows(name, run, pairs, tail, report)
    return report


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def _write(path: Path, header: list, rows: list):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in sorted(rows, key=lambda r: r[: len(header) - 1]):
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


CURVES_HEADER = ["strategy", "checkpoint_evals", "mean_error", "std", "ci99_halfwidth", "runs"]
TRACES_HEADER = ["strategy", "run", "eval_count", "best_value"]
ROUNDS_HEADER = ["strategy", "run", "round", "leader", "leader_steps", "total_steps", "best_value"]


def emit_csv(curves: dict, traces: dict, path, checkpoints=None) -> list:
    """Write ``curves.csv``, ``traces.csv`` and ``rounds.csv`` into the
    directory ``path``; returns the written paths.

    Traces are sampled at ``checkpoints`` (default: the strategy's curve
    checkpoints, or every step when there is no curve); ``best_value`` is
    the raw best-so-far value. Rounds are written for runs that have round
    records (the METAMAX variants).
    """
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from None
    curve_rows = []
    for name, c in curves.items():
        for j, cp in enumerate(c.checkpoints):
            curve_rows.append((name, int(cp), c.mean[j], c.std[j], c.halfwidth[j], int(c.runs[j])))
    trace_rows = []
    round_rows = []
    for name, runs in traces.items():
        if checkpoints is not None:
            cps = np.asarray(checkpoints)
        elif name in curves:
            cps = curves[name].checkpoints
        else:
            cps = None
        for k, tr in enumerate(runs):
            run = getattr(tr, "run", k)
            if cps is None:
                pairs = zip(tr.evals.tolist(), tr.best.tolist())
            else:
                pairs = zip(np.asarray(cps).tolist(), tr.best_at(cps).tolist())
            trace_rows.extend((name, run, e, b) for e, b in pairs)
            for rec in tr.rounds:
                round_rows.append(
                    (name, run, rec.r, rec.leader, rec.leader_steps, rec.total_steps, rec.best_value - tr.shift)
                )
    files = [out / "curves.csv", out / "traces.csv", out / "rounds.csv"]
    _write(files[0], CURVES_HEADER, curve_rows)
    _write(files[1], TRACES_HEADER, trace_rows)
    _write(files[2], ROUNDS_HEADER, round_rows)
    return files


# ---------------------------------------------------------------------------
# theory probes on synthetic curves


@dataclass
class TheoryProbe:
    """What a synthetic METAMAX(K) run says about the optimal set.

    ``optimal`` holds the ids whose limit equals the largest limit, ``delta``
    the margin to the best suboptimal limit (inf if all are optimal),
    ``usage`` the per-round share of steps taken by optimal instances,
    ``epsilon`` the per-round relative gap ``1 - max f_i / f_r`` over
    instances below the leader, ``round_sizes`` the number of instances
    stepped per round; ``k0`` is the optimal count, ``groups`` the sizes of
    the suboptimal limit groups and ``k_max`` the largest of them.
    """

    limits: list
    optimal: list
    delta: float
    k0: int
    groups: list
    k_max: int
    usage: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epsilon: np.ndarray = field(default_factory=lambda: np.zeros(0))
    round_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if len(self.optimal) < len(self.limits) and not self.delta > 0:
            raise ValueError("margin must be positive when some instance is suboptimal")

    @property
    def final_usage(self) -> float:
        return float(self.usage[-1]) if self.usage.size else math.nan

    @property
    def grouped_share_bound(self) -> float:
        """``k_max / (K - k0 + k_max)``, the limiting optimal share."""
        K = len(self.limits)
        return self.k_max / (K - self.k0 + self.k_max) if self.groups else 1.0


def probe_setup(limits: Sequence[float]) -> TheoryProbe:
    limits = [float(v) for v in limits]
    top = max(limits)
    optimal = [i for i, v in enumerate(limits) if v == top]
    rest = [v for v in limits if v != top]
    delta = top - max(rest) if rest else math.inf
    groups = sorted((rest.count(v) for v in sorted(set(rest), reverse=True)), reverse=True)
    return TheoryProbe(limits, optimal, delta, len(optimal), groups, max(groups, default=0))


def theory_probe(
    limits: Sequence[float],
    h: HFunction,
    rounds: int,
    seed=0,
    rate: float = 1.0,
    check_invariants: bool = True,
) -> TheoryProbe:
    """Run METAMAX(K) on curves ``limit * (1 - exp(-rate n))`` for
    ``rounds`` rounds and record the optimal-set statistics per round."""
    probe = probe_setup(limits)
    obj = SyntheticObjective()
    fac = SyntheticFactory(obj, curves=[SyntheticCurve(v, rate) for v in probe.limits])
    obj.known_max = max(probe.limits)
    run = BudgetRun(obj, 2**62, fac)
    m = MetaMaxK(run, len(probe.limits), h, np.random.default_rng(seed), check_invariants)
    m.initialize()
    opt = probe.optimal
    usage = np.empty(rounds)
    eps = np.empty(rounds)
    sizes = np.empty(rounds, dtype=np.int64)
    for r in range(rounds):
        rec = m.round()
        n, f = m._n, m._f
        usage[r] = sum(n[i] for i in opt) / m.total_steps
        fr = f[rec.leader]
        below = [v for v in f if v != fr]
        eps[r] = 1.0 - max(below) / fr if below else math.nan
        sizes[r] = len(rec.selected)
    probe.usage, probe.epsilon, probe.round_sizes = usage, eps, sizes
    return probe


@dataclass
class ProbeResult:
    name: str
    passed: bool
    detail: str


def _synthetic_pool(rng: np.random.Generator, K: int):
    obj = SyntheticObjective()
    curves = [SyntheticCurve(float(v), float(r)) for v, r in zip(rng.uniform(0.2, 1.0, K), rng.uniform(0.05, 2.0, K))]
    fac = SyntheticFactory(obj, curves=curves)
    obj.known_max = max(c.limit for c in curves)
    return obj, fac


def probe_leader_bounds(runs: int = 20, rounds: int = 2_000, seed: int = 0) -> ProbeResult:
    """Leader step bounds of METAMAX on growing pools of random curves."""
    for j in range(runs):
        rng = np.random.default_rng([seed, j])
        obj = SyntheticObjective()
        fac = SyntheticFactory(obj, limits=[1.0, 0.8, 0.5], probs=[0.05, 0.25, 0.7], rates=(0.05, 2.0), seed=rng)
        run_strategy(StrategyConfig("metamax", T=2**62), obj, fac, rng, check_invariants=True, max_rounds=rounds)
    return ProbeResult("leader_bounds", True, f"{runs} runs x {rounds} rounds, no violation")


def probe_fixed_pool_coverage(runs: int = 20, rounds: int = 2_000, K: int = 20, seed: int = 0) -> ProbeResult:
    """Least-stepped instance of METAMAX(K) after kK rounds has >= k steps."""
    for j in range(runs):
        rng = np.random.default_rng([seed, j])
        obj, fac = _synthetic_pool(rng, K)
        run_strategy(StrategyConfig("metamax_k", T=2**62, K=K), obj, fac, rng, check_invariants=True, max_rounds=rounds)
    return ProbeResult("fixed_pool_coverage", True, f"{runs} runs x {rounds} rounds, K={K}, no violation")


def probe_optimal_share(runs: int = 5, rounds: int = 10_000, seed: int = 0) -> ProbeResult:
    worst = min(
        theory_probe((1.0, 1.0, 0.5, 0.5), HFunction.exponential(0.25), rounds, seed=[seed, j]).final_usage
        for j in range(runs)
    )
    return ProbeResult("optimal_share", worst >= 0.45, f"smallest optimal share {worst:.4f} (need >= 0.45)")


def probe_grouped_share(runs: int = 5, rounds: int = 10_000, seed: int = 0) -> ProbeResult:
    limits = (1.0, 0.6, 0.6, 0.6, 0.3)
    bound = probe_setup(limits).grouped_share_bound - 0.05
    worst = min(theory_probe(limits, HFunction.exponential(0.9), rounds, seed=[seed, j]).final_usage for j in range(runs))
    return ProbeResult("grouped_share", worst >= bound, f"smallest optimal share {worst:.4f} (need >= {bound:.4f})")


def growing_synthetic_run(kind: str, h: HFunction, rounds: int, q: float = 0.1, low: float = 0.5, seed=0):
    """A growing-pool run where each new curve has limit 1 with probability
    ``q`` and ``low`` otherwise; returns ``(strategy, objective, snapshots)``
    with step counts saved at the midpoint round."""
    obj = SyntheticObjective()
    fac = SyntheticFactory(obj, limits=[1.0, low], probs=[q, 1.0 - q], seed=np.random.default_rng([seed, 1]))
    run = BudgetRun(obj, 2**62, fac)
    cls = MetaMax if kind == "metamax" else MetaMaxInf
    m = cls(run, h, np.random.default_rng([seed, 2]))
    mid = rounds // 2
    snap = None
    lead_mid = None
    while m.r < rounds:
        m.round()
        if m.r == mid:
            snap = list(m._n)
            lead_mid = m._f[m.leader]
    return m, obj, snap, lead_mid


def probe_good_leader(kind: str = "metamax_inf", rounds: int = 100_000, seed: int = 0, alpha: float = 0.5) -> ProbeResult:
    """Suboptimal instances stop being stepped: once the leader is within
    Delta/2 of the optimum at the midpoint, no suboptimal instance started
    by then takes another step."""
    low = 0.5
    m, obj, snap, lead_mid = growing_synthetic_run(kind, HFunction.exponential(alpha), rounds, low=low, seed=seed)
    delta = 1.0 - low
    if not 1.0 - lead_mid < delta / 2:
        return ProbeResult(f"good_leader[{kind}]", False, "no Delta/2-optimal leader by the midpoint")
    moved = [
        i
        for i in range(len(snap))
        if obj.curves[i].limit < 1.0 and m._n[i] != snap[i]
    ]
    return ProbeResult(
        f"good_leader[{kind}]",
        not moved,
        f"{len(moved)} suboptimal instances stepped in the second half of {rounds} rounds",
    )


def low_instance_bound(delta: float, f_star: float, alpha: float) -> int:
    return math.ceil(math.log((2 * f_star - delta) / delta) / math.log(1 / alpha))


def probe_low_instances(kind: str = "metamax_inf", rounds: int = 20_000, seed: int = 0, alpha: float = 0.5) -> ProbeResult:
    """Per round, at most ceil(ln((2f* - D)/D) / ln(1/alpha)) instances with
    value <= f* - D are stepped once the leader is D/2-close to f*."""
    low = 0.5
    delta = 1.0 - low
    bound = low_instance_bound(delta, 1.0, alpha)
    obj = SyntheticObjective()
    fac = SyntheticFactory(obj, limits=[1.0, low], probs=[0.1, 0.9], seed=np.random.default_rng([seed, 1]))
    run = BudgetRun(obj, 2**62, fac)
    cls = MetaMax if kind == "metamax" else MetaMaxInf
    m = cls(run, HFunction.exponential(alpha), np.random.default_rng([seed, 2]))
    worst = 0
    active_rounds = 0
    while m.r < rounds:
        close = 1.0 - m._f[m.leader] < delta / 2 if m.leader is not None else False
        before = list(m._f)
        rec = m.round()
        if close:
            active_rounds += 1
            # estimates at selection time, including the fresh instance at 0
            low_sel = sum(1 for i in rec.selected if (before[i] if i < len(before) else 0.0) <= 1.0 - delta)
            worst = max(worst, low_sel)
    ok = worst <= bound and active_rounds > 0
    return ProbeResult(
        f"low_instances[{kind}]", ok, f"at most {worst} low instances per round over {active_rounds} rounds (bound {bound})"
    )


def verify_theorems(quick: bool = False) -> list:
    """Run the synthetic theory-probe suite. Invariant violations raise
    :class:`~metamax.core.InvariantViolation`; statistical checks return
    failed results."""
    scale = 5 if quick else 1
    results = [
        probe_leader_bounds(runs=20 // scale, rounds=2_000),
        probe_fixed_pool_coverage(runs=20 // scale, rounds=2_000),
        probe_optimal_share(runs=5 // scale or 1),
        probe_grouped_share(runs=5 // scale or 1),
    ]
    # catch-up makes METAMAX steps grow quadratically in the round count
    probe_rounds = {"metamax_inf": (20_000, 5_000), "metamax": (4_000, 2_000)}
    for kind in GROWING_KINDS:
        r_lead, r_low = probe_rounds[kind]
        results.append(probe_good_leader(kind, rounds=r_lead // scale))
        results.append(probe_low_instances(kind, rounds=r_low // scale))
    return results
