"""Objectives and searcher factories used by the experiments.

A factory is a zero-argument callable returning a fresh searcher; every
call yields an independently seeded instance.
"""

from __future__ import annotations

import logging
import math
import shlex
import subprocess
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import EvaluationError, Objective, StepResult
from .searchers import ClusteringObjective, Dataset, KMeansSearcher, SpsaParams, SpsaSearcher

__all__ = [
    "BenchmarkSpec",
    "DatasetError",
    "KMeansFactory",
    "SpsaFactory",
    "SubprocessObjective",
    "SyntheticCurve",
    "SyntheticFactory",
    "SyntheticObjective",
    "SyntheticSearcher",
    "bundled_dataset",
    "griewank_mod",
    "griewank_objective",
    "griewank_shift",
    "load_dataset",
    "make_benchmark",
    "make_gaussian_mixture",
    "subprocess_objective",
    "synthetic_step",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# modified Griewank


def griewank_mod(x) -> float:
    """``prod_l cos(2 pi x_l / sqrt(l)) - sum_l 4 pi^2 x_l^2 / 100`` on [-1, 1]^d."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("griewank_mod expects a non-empty vector")
    if np.any(np.abs(x) > 1.0):
        raise ValueError(f"griewank_mod is defined on [-1, 1]^d, got {x}")
    l = np.arange(1, x.size + 1)
    return float(np.prod(np.cos(2.0 * np.pi * x / np.sqrt(l))) - np.sum(4.0 * np.pi**2 * x**2 / 100.0))


def griewank_shift(d: int) -> float:
    """Offset lifting griewank_mod to non-negative values on [-1, 1]^d."""
    return 1.0 + 4.0 * np.pi**2 * d / 100.0


def griewank_objective(d: int) -> Objective:
    # the box is checked by Objective; skip griewank_mod's own check
    w = 2.0 * np.pi / np.sqrt(np.arange(1, d + 1))
    c = 4.0 * np.pi**2 / 100.0

    def f(x):
        return float(np.cos(w * x).prod() - c * x.dot(x))

    return Objective(f, -np.ones(d), np.ones(d), known_max=1.0, shift=griewank_shift(d), name=f"griewank_mod{d}")


class SpsaFactory:
    """SPSA instances with uniform random starts.

    Starting points come from one per-run stream; each instance's
    perturbation stream is spawned from the run seed when it first needs it.
    """

    def __init__(self, objective: Objective, params: SpsaParams, seed):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        start_ss, self._inst_ss = ss.spawn(2)
        self._start = np.random.default_rng(start_ss)
        self.objective = objective
        self.params = params
        self._span = objective.upper - objective.lower

    def _spawn(self) -> np.random.Generator:
        return np.random.default_rng(self._inst_ss.spawn(1)[0])

    def __call__(self) -> SpsaSearcher:
        obj = self.objective
        x0 = obj.lower + self._span * self._start.random(obj.dimension)
        return SpsaSearcher(obj, self.params, x0=x0, rng_factory=self._spawn)


# ---------------------------------------------------------------------------
# clustering data


class DatasetError(ValueError):
    pass


def load_dataset(path) -> Dataset:
    """Read a numeric matrix, one row per line, comma or whitespace separated.

    Blank lines are ignored. A first line made only of non-numeric tokens is
    taken as a header and skipped with a warning.
    """
    path = Path(path)
    rows = []
    width = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            tokens = text.replace(",", " ").split()
            try:
                row = [float(t) for t in tokens]
            except ValueError:
                if not rows and width is None and all(_not_number(t) for t in tokens):
                    log.warning("%s: skipping header line %d", path, lineno)
                    width = -1
                    continue
                raise DatasetError(f"{path}: line {lineno}: non-numeric token") from None
            if width in (None, -1):
                width = len(row)
            elif len(row) != width:
                raise DatasetError(f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    data = Dataset(np.array(rows))
    log.info("%s: %d rows x %d columns", path, data.M, data.d)
    return data


def _not_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return True
    return False


def make_gaussian_mixture(
    n_points: int = 2000, n_centers: int = 10, dim: int = 2, spread: float = 10.0, scale: float = 0.7, seed: int = 2012
) -> np.ndarray:
    """Points from ``n_centers`` isotropic Gaussians with uniform random
    means in ``[0, spread]^dim``; clusters are equally sized."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, spread, size=(n_centers, dim))
    labels = np.arange(n_points) % n_centers
    return means[labels] + scale * rng.standard_normal((n_points, dim))


BUNDLED_DATASET = "gmm2000.txt"


def bundled_dataset() -> Dataset:
    """The 2000-point, 10-component mixture shipped with the package."""
    ref = resources.files("metamax").joinpath("data", BUNDLED_DATASET)
    with resources.as_file(ref) as p:
        return load_dataset(p)


class KMeansFactory:
    def __init__(self, objective: ClusteringObjective, seed, init: str = "pp", weighting: str = "squared"):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._ss = ss
        self.objective = objective
        self.init = init
        self.weighting = weighting

    def __call__(self) -> KMeansSearcher:
        rng = np.random.default_rng(self._ss.spawn(1)[0])
        return KMeansSearcher(self.objective, rng, self.init, self.weighting)


# ---------------------------------------------------------------------------
# synthetic convergence curves


@dataclass(frozen=True)
class SyntheticCurve:
    """Best-value trajectory ``limit * (1 - exp(-rate * n))``."""

    limit: float
    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def value(self, n: int) -> float:
        return self.limit * -math.expm1(-self.rate * n)


def synthetic_step(curve: SyntheticCurve, n: int) -> float:
    if n < 1:
        raise ValueError("synthetic steps are numbered from 1")
    return curve.value(n)


class SyntheticObjective(Objective):
    """Evaluates the point ``(curve index, step)`` on a registered curve."""

    def __init__(self, curves: Sequence[SyntheticCurve] = ()):
        self.curves = list(curves)
        limits = [c.limit for c in self.curves]
        known = max(limits) if limits else None
        super().__init__(self._value, [0.0, 0.0], [np.inf, np.inf], known_max=known, name="synthetic")

    def _value(self, x) -> float:
        return self.curves[int(x[0])].value(int(x[1]))

    def add(self, curve: SyntheticCurve) -> int:
        self.curves.append(curve)
        return len(self.curves) - 1

    def evaluate(self, x) -> float:
        # hot path: the point is an (int, int) pair by construction
        i, n = x
        if not (0 <= i < len(self.curves)) or n < 0:
            raise ValueError(f"synthetic point {x} outside the box")
        self.eval_count += 1
        return self.curves[i].value(n) + self.shift


class SyntheticSearcher:
    """Deterministic searcher following one curve, one evaluation per step."""

    terminated = False

    def __init__(self, objective: SyntheticObjective, index: int):
        self.objective = objective
        self.index = index
        self.n = 0

    @property
    def curve(self) -> SyntheticCurve:
        return self.objective.curves[self.index]

    def next_cost(self) -> int:
        return 1

    def step(self) -> StepResult:
        self.n += 1
        x = (self.index, self.n)
        return StepResult([x], [self.objective.evaluate(x)], 1)


class SyntheticFactory:
    """Instances over a fixed curve list (call ``i`` gets curve ``i mod K``)
    or, with ``limits`` given, curves drawn at random per instance: the
    limit from ``limits`` with probabilities ``probs`` and the rate uniform
    in ``rates``."""

    def __init__(
        self,
        objective: SyntheticObjective,
        curves: Optional[Sequence[SyntheticCurve]] = None,
        limits: Optional[Sequence[float]] = None,
        probs: Optional[Sequence[float]] = None,
        rates: tuple = (0.5, 2.0),
        seed=None,
    ):
        if (curves is None) == (limits is None):
            raise ValueError("give exactly one of curves or limits")
        self.objective = objective
        self.fixed = list(curves) if curves is not None else None
        if self.fixed is not None:
            for c in self.fixed:
                objective.add(c)
        self.limits = None if limits is None else np.asarray(limits, dtype=float)
        self.probs = probs
        self.rates = rates
        self.rng = np.random.default_rng(seed)
        self.calls = 0

    def __call__(self) -> SyntheticSearcher:
        i = self.calls
        self.calls += 1
        if self.fixed is not None:
            return SyntheticSearcher(self.objective, i % len(self.fixed))
        limit = float(self.rng.choice(self.limits, p=self.probs))
        rate = float(self.rng.uniform(*self.rates))
        return SyntheticSearcher(self.objective, self.objective.add(SyntheticCurve(limit, rate)))


# ---------------------------------------------------------------------------
# external objective


class SubprocessObjective(Objective):
    """Runs ``command`` once per evaluation.

    The child reads ``x_1 ... x_d`` (17 significant digits) on one line of
    standard input and must print one finite decimal on standard output.
    """

    def __init__(
        self,
        command,
        lower: Sequence[float],
        upper: Sequence[float],
        timeout: float = 600.0,
        known_max: Optional[float] = None,
        shift: float = 0.0,
    ):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        super().__init__(self._value, lower, upper, known_max=known_max, shift=shift, name="subprocess")

    def _value(self, x) -> float:
        return subprocess_objective(self.command, x, self.timeout)


def subprocess_objective(command, x, timeout: float = 600.0) -> float:
    """Evaluate ``x`` with one invocation of an external program."""
    cmd = shlex.split(command) if isinstance(command, str) else list(command)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    request = " ".join(format(v, ".17g") for v in x) + "\n"
    try:
        proc = subprocess.run(cmd, input=request, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        raise EvaluationError(f"{cmd[0]}: no answer within {timeout} s") from None
    except OSError as exc:
        raise EvaluationError(f"{cmd[0]}: cannot run ({exc})") from None
    if proc.returncode != 0:
        raise EvaluationError(f"{cmd[0]}: exit status {proc.returncode}")
    lines = proc.stdout.splitlines()
    if not lines:
        raise EvaluationError(f"{cmd[0]}: empty response")
    try:
        value = float(lines[0].strip())
    except ValueError:
        raise EvaluationError(f"{cmd[0]}: cannot parse response {lines[0]!r}") from None
    if not math.isfinite(value):
        raise EvaluationError(f"{cmd[0]}: non-finite response {lines[0]!r}")
    return value


# ---------------------------------------------------------------------------
# benchmark specs


@dataclass
class BenchmarkSpec:
    """What to optimize and with which local searcher.

    ``kind`` is one of ``griewank_mod``, ``clustering``, ``synthetic`` or
    ``subprocess``; ``params`` holds the kind-specific settings (see
    :func:`make_benchmark`).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("griewank_mod", "clustering", "synthetic", "subprocess"):
            raise ValueError(f"unknown benchmark kind {self.kind!r}")
        if self.kind == "griewank_mod" and int(self.params.get("dim", 2)) < 1:
            raise ValueError("griewank_mod needs dim >= 1")
        if self.kind == "clustering" and int(self.params.get("clusters", 10)) < 1:
            raise ValueError("clustering needs at least one cluster")


_BENCH_KEYS = {
    "griewank_mod": {"dim", "spsa_a", "spsa_phi"},
    "clustering": {"dataset", "clusters", "init", "weighting", "best_cost"},
    "synthetic": {"curves", "limits", "probs", "rates"},
    "subprocess": {"command", "dim", "lower", "upper", "timeout", "known_max", "shift", "spsa_a", "spsa_phi"},
}


def benchmark_keys(kind: str) -> set:
    return _BENCH_KEYS[kind]


def make_benchmark(spec: BenchmarkSpec):
    """Return ``make(seed) -> (objective, factory)`` for one run each.

    Loading a dataset happens once here, not per run.
    """
    p = dict(spec.params)
    unknown = set(p) - _BENCH_KEYS[spec.kind]
    if unknown:
        raise ValueError(f"unknown {spec.kind} parameters: {sorted(unknown)}")
    if spec.kind == "griewank_mod":
        d = int(p.get("dim", 2))
        params = SpsaParams(a=float(p.get("spsa_a", 0.05)), phi=float(p.get("spsa_phi", 0.1)))

        def make(seed):
            obj = griewank_objective(d)
            return obj, SpsaFactory(obj, params, seed)

        return make
    if spec.kind == "clustering":
        src = p.get("dataset", "bundled")
        data = bundled_dataset() if src == "bundled" else load_dataset(src)
        n_clusters = int(p.get("clusters", 10))
        init = p.get("init", "pp")
        weighting = p.get("weighting", "squared")
        best = p.get("best_cost")

        def make(seed):
            obj = ClusteringObjective(data, n_clusters, best_cost=best)
            return obj, KMeansFactory(obj, seed, init, weighting)

        return make
    if spec.kind == "synthetic":
        curves = p.get("curves")
        if curves is not None:
            curves = [c if isinstance(c, SyntheticCurve) else SyntheticCurve(*c) for c in curves]

        def make(seed):
            obj = SyntheticObjective()
            if curves is not None:
                fac = SyntheticFactory(obj, curves=curves)
                obj.known_max = max(c.limit for c in curves)
            else:
                fac = SyntheticFactory(
                    obj, limits=p["limits"], probs=p.get("probs"), rates=tuple(p.get("rates", (0.5, 2.0))), seed=seed
                )
                obj.known_max = float(max(p["limits"]))
            return obj, fac

        return make
    # subprocess
    d = int(p.get("dim", 2))
    lower = p.get("lower", [0.0] * d)
    upper = p.get("upper", [1.0] * d)
    params = SpsaParams(a=float(p.get("spsa_a", 0.5)), phi=float(p.get("spsa_phi", 0.1)))

    def make(seed):
        obj = SubprocessObjective(
            p["command"],
            lower,
            upper,
            timeout=float(p.get("timeout", 600.0)),
            known_max=p.get("known_max"),
            shift=float(p.get("shift", 0.0)),
        )
        return obj, SpsaFactory(obj, params, seed)

    return make
