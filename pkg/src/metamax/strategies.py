"""Multi-start strategies: the three METAMAX variants and the baselines.

Every strategy spends an evaluation budget ``T`` by stepping local-search
instances produced by a factory. A searcher step is atomic: a step that
would push the objective's evaluation count past ``T`` is not started.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    ContractViolation,
    EvaluationError,
    InstanceState,
    InvariantViolation,
    Objective,
    RoundRecord,
    RunTrace,
    StepResult,
)
from .hull import HFunction, NoActiveInstances, StepIndex, dedup_by_steps, hull_candidates

__all__ = [
    "STRATEGY_KINDS",
    "BudgetRun",
    "FactoryError",
    "MetaMax",
    "MetaMaxInf",
    "MetaMaxK",
    "StrategyConfig",
    "ThrascState",
    "explore_exploit_run",
    "luby_length",
    "run_strategy",
    "thrasc_select",
    "thrasc_U",
    "unif_select",
]

STRATEGY_KINDS = (
    "metamax_k",
    "metamax_inf",
    "metamax",
    "unif",
    "thrasc",
    "rand",
    "luby",
    "ee_unif",
    "ee_luby",
    "serial",
)
GROWING_KINDS = ("metamax_inf", "metamax")


class FactoryError(RuntimeError):
    """The searcher factory could not build a new instance."""


@dataclass
class StrategyConfig:
    kind: str
    T: int = 10_000
    K: int = 100
    h: HFunction = field(default_factory=HFunction.time_varying)
    thrasc_s: int = 100
    thrasc_delta: float = 0.01
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.T < 1:
            raise ValueError("budget T must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.kind.startswith("ee_") and self.T < 2:
            raise ValueError("explore-and-exploit needs T >= 2")
        if self.thrasc_s < 1 or not 0 < self.thrasc_delta < 1:
            raise ValueError("THRASC needs s >= 1 and 0 < delta < 1")

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.label}" if self.label else self.kind


# ---------------------------------------------------------------------------
# budget and trace bookkeeping


class BudgetRun:
    """Steps instances against an evaluation budget and records the trace.

    ``limit`` may be lowered temporarily (explore phases); it never exceeds
    ``T``.
    """

    def __init__(self, objective: Objective, T: int, factory: Callable):
        self.objective = objective
        self.T = T
        self.limit = T
        self.factory = factory
        self.states: list = []
        self.evals: list = []
        self.best: list = []
        self.best_value = -math.inf
        self.best_point = None
        self.exhausted = False

    def new_instance(self) -> InstanceState:
        try:
            searcher = self.factory()
        except EvaluationError:
            raise
        except Exception as exc:  # noqa: BLE001 - surfaced as an invalid run
            raise FactoryError(f"factory failed: {exc}") from exc
        st = InstanceState(len(self.states), searcher)
        self.states.append(st)
        return st

    def can_step(self, st: InstanceState) -> bool:
        return self.objective.eval_count + st.next_cost() <= self.limit

    def step(self, st: InstanceState) -> Optional[StepResult]:
        """Step ``st`` once; None (and nothing spent) if the budget is short."""
        obj = self.objective
        before = obj.eval_count
        if before + st.searcher.next_cost() > self.limit:
            self.exhausted = True
            return None
        res = st.advance()
        after = obj.eval_count
        if after - before != res.evals:
            raise ContractViolation(f"instance {st.id} reported {res.evals} evaluations, spent {after - before}")
        if st.best_value > self.best_value:
            self.best_value = st.best_value
            self.best_point = st.best_point
        self.evals.append(after)
        self.best.append(self.best_value)
        return res

    def trace(self, strategy: str = "", seed=None, rounds=None) -> RunTrace:
        return RunTrace(
            np.asarray(self.evals, dtype=np.int64),
            np.asarray(self.best, dtype=float),
            shift=self.objective.shift,
            seed=seed,
            strategy=strategy,
            rounds=list(rounds or []),
            best_point=self.best_point,
        )


# ---------------------------------------------------------------------------
# METAMAX family


class _PoolStrategy:
    """Instance pool with the step counts and values the corner rule reads
    every round, mirrored in plain lists (cheaper than numpy scalars).

    Growing pools select through a :class:`~metamax.hull.StepIndex`; fixed
    pools rebuild the hull from the lists each round.
    """

    tie_break = "smallest"
    indexed = False
    leader_by_steps = False

    def __init__(self, run: BudgetRun, h: HFunction, rng=None, check_invariants: bool = False):
        self.run = run
        self.h = h
        self.rng = rng
        self.check_invariants = check_invariants
        self.r = 0
        self.leader: Optional[int] = None
        self.rounds: list = []
        self.total_steps = 0
        self._n: list = []
        self._f: list = []
        self._active: list = []
        self._any_terminated = False
        self._index = StepIndex() if self.indexed else None
        # leader bookkeeping over stepped instances: the largest value, the
        # smallest id holding it and a lazy heap of (steps, id) among holders
        self._top_value = -math.inf
        self._top_min = -1
        self._top_heap: list = []
        self._n_max = 0

    @property
    def states(self) -> list:
        return self.run.states

    @property
    def size(self) -> int:
        return len(self._n)

    def _add(self) -> InstanceState:
        st = self.run.new_instance()
        self._n.append(st.n)
        self._f.append(st.best_value)
        if self._index is not None:
            self._index.set(st.id, st.n, st.best_value)
        else:
            self._active.append(st.id)
        return st

    def _step(self, i: int) -> bool:
        st = self.run.states[i]
        if self.run.step(st) is None:
            return False
        n, f = st.n, st.best_value
        self._n[i] = n
        self._f[i] = f
        self.total_steps += 1
        if n > self._n_max:
            self._n_max = n
        if f > self._top_value:
            self._top_value = f
            self._top_min = i
            self._top_heap = [(n, i)]
        elif f == self._top_value:
            if i < self._top_min:
                self._top_min = i
            if self.leader_by_steps:
                heapq.heappush(self._top_heap, (n, i))
        if st.status != "active":
            self._any_terminated = True
            if self._index is not None:
                self._index.remove(i)
            else:
                self._active.remove(i)
        elif self._index is not None:
            self._index.set(i, n, f)
        return True

    def _select(self, h: HFunction) -> list:
        if self._index is not None:
            return self._index.select(h, self.tie_break, self.rng)
        ids = self._active
        if not ids:
            raise NoActiveInstances("all instances have terminated")
        if not self._any_terminated:
            n, f = self._n, self._f
        else:
            n = [self._n[i] for i in ids]
            f = [self._f[i] for i in ids]
        pos = hull_candidates(n, f, h)
        pos = dedup_by_steps(pos, n, self.tie_break, self.rng)
        if not self._any_terminated:
            return pos
        return [ids[p] for p in pos]

    def _update_leader(self) -> None:
        """Largest value, smallest index on ties."""
        self.leader = self._top_min

    def _record(self, selected) -> RoundRecord:
        L = self.leader
        rec = RoundRecord(
            self.r,
            tuple(selected),
            L,
            self._n[L],
            self.total_steps,
            self._f[L],
            self.run.objective.eval_count,
        )
        self.rounds.append(rec)
        return rec

    def steps(self) -> np.ndarray:
        return np.array(self._n, dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array(self._f, dtype=float)


class MetaMaxK(_PoolStrategy):
    """METAMAX over a fixed pool of ``K`` instances.

    Call :meth:`initialize` once (one step per instance), then
    :meth:`round` repeatedly. Instances sharing a step count among the
    selected corners are thinned to one chosen at random.
    """

    tie_break = "random"

    def __init__(self, run: BudgetRun, K: int, h: HFunction, rng, check_invariants: bool = False):
        super().__init__(run, h, rng, check_invariants)
        self.K = K

    def initialize(self) -> bool:
        for _ in range(self.K):
            self._add()
        for i in range(self.K):
            if not self._step(i):
                return False
        self._update_leader()
        return True

    def round(self) -> Optional[RoundRecord]:
        """One round; None when the budget ran out or every instance ended."""
        h = self.h.for_round(self.total_steps)
        try:
            selected = self._select(h)
        except NoActiveInstances:
            return None
        for i in selected:
            if not self._step(i):
                return None
        self.r += 1
        self._update_leader()
        if self.check_invariants and not self._any_terminated and self.r % self.K == 0:
            k = self.r // self.K
            if min(self._n) < k:
                raise InvariantViolation(f"round {self.r}: least-stepped instance has fewer than {k} steps")
        return self._record(selected)


class MetaMaxInf(_PoolStrategy):
    """METAMAX with one new instance per round (n = 0, estimate 0)."""

    indexed = True

    def __init__(self, run: BudgetRun, h: HFunction, rng=None, check_invariants: bool = False):
        super().__init__(run, h, rng, check_invariants)

    def _begin_round(self):
        h = self.h.for_round(self.total_steps)
        self._add()
        return self._select(h)

    def round(self) -> Optional[RoundRecord]:
        selected = self._begin_round()
        for i in selected:
            if not self._step(i):
                return None
        self.r += 1
        self._update_leader()
        return self._record(selected)


class MetaMax(MetaMaxInf):
    """METAMAX with smallest-index thinning and leader catch-up.

    When a new leader takes over it is stepped until it has exactly one
    step more than the previous leader, so the leader always holds the
    most steps. Terminated leaders cannot catch up; once that happens the
    step-count guarantees no longer apply and are not checked.
    """

    leader_by_steps = True

    def _leader_by_steps(self) -> int:
        """Largest value, then fewest steps, then smallest index."""
        n, heap = self._n, self._top_heap
        # entries go stale when their instance is stepped again
        while heap[0][0] != n[heap[0][1]]:
            heapq.heappop(heap)
        return heap[0][1]

    def round(self) -> Optional[RoundRecord]:
        selected = self._begin_round()
        for i in selected:
            if not self._step(i):
                return None
        self.r += 1
        prev = self.leader
        L = self._leader_by_steps()
        if prev is not None and L != prev:
            extra = self._n[prev] - self._n[L] + 1
            if extra < 1 and not self._any_terminated:
                raise ContractViolation(
                    f"round {self.r}: catch-up count {extra} for new leader {L} (previous {prev})"
                )
            for _ in range(max(extra, 0)):
                if self.run.states[L].status != "active":
                    break
                if not self._step(L):
                    return None
            # catching up cannot change the leader: its value can only grow
        self.leader = L
        if self.check_invariants and not self._any_terminated:
            self._check_round()
        return self._record(selected)

    def _check_round(self):
        r, nL, t = self.r, self._n[self.leader], self.total_steps
        if not r <= nL < 2 * r:
            raise InvariantViolation(f"round {r}: leader has {nL} steps, outside [{r}, {2 * r})")
        if nL < (math.sqrt(2 * t + 7) - 1) / 2:
            raise InvariantViolation(f"round {r}: leader has {nL} steps with {t} steps in total")
        if nL < self._n_max:
            raise InvariantViolation(f"round {r}: leader does not hold the most steps")


# ---------------------------------------------------------------------------
# baselines


def unif_select(t: int, K: int) -> int:
    if K < 1:
        raise ValueError("K must be at least 1")
    return t % K


def luby_length(i: int) -> int:
    """Length of the ``i``-th run in Luby's universal restart schedule."""
    if i < 1:
        raise ValueError("Luby indices start at 1")
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1


def thrasc_U(mu, n, alpha: float):
    """Upper confidence bound ``mu + (alpha + sqrt(2 n mu alpha + alpha^2)) / n``."""
    return mu + (alpha + np.sqrt(2.0 * n * mu * alpha + alpha * alpha)) / n


class ThrascState:
    """Threshold Ascent bookkeeping: how many of the ``s`` largest rewards
    seen so far each instance produced.

    Every objective evaluation is one reward sample, so ``counts`` holds
    the number of samples per instance and ``mu = S / counts`` is a
    frequency.
    """

    def __init__(self, K: int, s: int, T: int, delta: float):
        self.K = K
        self.s = s
        self.alpha = math.log(2.0 * T * K / delta)
        self.counts = np.zeros(K)
        self.S = np.zeros(K)
        self._heap: list = []
        self._seq = 0

    def add(self, i: int, reward: float):
        self.counts[i] += 1
        item = (reward, -self._seq, i)
        self._seq += 1
        if len(self._heap) < self.s:
            heapq.heappush(self._heap, item)
            self.S[i] += 1
        elif reward > self._heap[0][0]:
            _, _, j = heapq.heapreplace(self._heap, item)
            self.S[j] -= 1
            self.S[i] += 1


def thrasc_select(state: ThrascState) -> int:
    if np.any(state.counts == 0):
        raise ContractViolation("THRASC selection before every instance was tried")
    u = thrasc_U(state.S / state.counts, state.counts, state.alpha)
    return int(np.argmax(u))


def _run_unif(run: BudgetRun, K: int, states: Optional[list] = None) -> list:
    pool = states if states is not None else [run.new_instance() for _ in range(K)]
    t = 0
    while True:
        st = pool[unif_select(t, K)]
        if st.active:
            if not run.step(st):
                break
        elif not any(s.active for s in pool):
            break
        t += 1
    return pool


def _run_thrasc(run: BudgetRun, K: int, s: int, delta: float):
    pool = [run.new_instance() for _ in range(K)]
    ts = ThrascState(K, s, run.T, delta)

    def pull(st) -> bool:
        res = run.step(st)
        if res is None:
            return False
        for v in res.values:
            ts.add(st.id, v)
        return True

    for st in pool:
        if not pull(st):
            return
    while True:
        u = thrasc_U(ts.S / ts.counts, ts.counts, ts.alpha)
        u[[not st.active for st in pool]] = -np.inf
        if not np.isfinite(u).any():
            return
        if not pull(pool[int(np.argmax(u))]):
            return


def _run_rand(run: BudgetRun):
    # every first step costs at least one evaluation
    while run.objective.eval_count < run.limit:
        st = run.new_instance()
        if not run.step(st):
            run.states.pop()
            return


def _run_luby(run: BudgetRun) -> list:
    pool = []
    i = 1
    while True:
        st = run.new_instance()
        pool.append(st)
        for _ in range(luby_length(i)):
            if not st.active:
                break
            if not run.step(st):
                return pool
        i += 1


def _run_serial(run: BudgetRun):
    while True:
        st = run.new_instance()
        while st.active:
            if not run.step(st):
                return


def explore_exploit_run(explorer: str, T: int, run: BudgetRun, K: int = 100) -> tuple:
    """Spend ``floor(T / 2)`` evaluations exploring (``"unif"`` over ``K``
    instances or ``"luby"``), then step only the explored instance with the
    best value (smallest index on ties). If it terminates the rest of the
    budget goes to fresh instances run one after another.

    Returns ``(exploited instance id, evaluations spent exploring)``.
    """
    if T < 2:
        raise ValueError("explore-and-exploit needs T >= 2")
    run.limit = T // 2
    if explorer == "unif":
        pool = _run_unif(run, K)
    elif explorer == "luby":
        pool = _run_luby(run)
    else:
        raise ValueError(f"unknown explorer {explorer!r}")
    explored = run.objective.eval_count
    run.limit = T
    run.exhausted = False
    touched = [st for st in pool if st.n > 0]
    if not touched:
        _run_serial(run)
        return None, explored
    best = max(touched, key=lambda st: (st.best_value, -st.id))
    while best.active:
        if not run.step(best):
            return best.id, explored
    _run_serial(run)
    return best.id, explored


def run_strategy(
    config: StrategyConfig,
    objective: Objective,
    factory: Callable,
    rng: Optional[np.random.Generator] = None,
    check_invariants: bool = False,
    seed=None,
    max_rounds: Optional[int] = None,
) -> RunTrace:
    """Drive one strategy until the budget is spent; return its trace.

    METAMAX variants also return their per-round records in
    ``trace.rounds``; for them ``max_rounds`` optionally stops the run
    after that many rounds. An evaluation or factory failure ends the run
    early with ``trace.valid = False``.
    """
    limit = math.inf if max_rounds is None else max_rounds
    rng = rng if rng is not None else np.random.default_rng(seed)
    run = BudgetRun(objective, config.T, factory)
    strat = None
    kind = config.kind
    try:
        if kind == "metamax_k":
            strat = MetaMaxK(run, config.K, config.h, rng, check_invariants)
            if strat.initialize():
                while strat.r < limit and strat.round() is not None:
                    pass
        elif kind in GROWING_KINDS:
            cls = MetaMax if kind == "metamax" else MetaMaxInf
            strat = cls(run, config.h, rng, check_invariants)
            while strat.r < limit and strat.round() is not None:
                pass
        elif kind == "unif":
            _run_unif(run, config.K)
        elif kind == "thrasc":
            _run_thrasc(run, config.K, config.thrasc_s, config.thrasc_delta)
        elif kind == "rand":
            _run_rand(run)
        elif kind == "luby":
            _run_luby(run)
        elif kind == "serial":
            _run_serial(run)
        else:
            explore_exploit_run(kind[3:], config.T, run, config.K)
    except (EvaluationError, FactoryError) as exc:
        trace = run.trace(config.name, seed, strat.rounds if strat else None)
        trace.kind = kind
        trace.valid = False
        trace.failure = str(exc)
        return trace
    trace = run.trace(config.name, seed, strat.rounds if strat else None)
    trace.kind = kind
    return trace
