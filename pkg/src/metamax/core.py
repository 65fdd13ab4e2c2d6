"""Shared domain types: objectives with evaluation accounting, instance
bookkeeping and run traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ContractViolation",
    "EvaluationError",
    "InvariantViolation",
    "Objective",
    "InstanceState",
    "StepResult",
    "RoundRecord",
    "RunTrace",
    "evaluate",
    "record_best",
]


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition (a bookkeeping bug)."""


class InvariantViolation(AssertionError):
    """A runtime-checked theorem or invariant failed."""


class EvaluationError(RuntimeError):
    """The objective could not produce a value for a point."""


class Objective:
    """A box-constrained function to be maximized.

    ``evaluate`` returns ``func(x) + shift`` and counts every call. The shift
    makes reported values non-negative, which the growing-pool strategies
    need because a fresh instance starts from an estimate of 0.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], float],
        lower: Sequence[float],
        upper: Sequence[float],
        known_max: Optional[float] = None,
        shift: float = 0.0,
        name: str = "objective",
    ):
        self.func = func
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d and of equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("empty box: lower > upper")
        self.dimension = self.lower.size
        self.known_max = known_max
        self.shift = float(shift)
        self.name = name
        self.eval_count = 0

    def check_point(self, x) -> np.ndarray:
        if type(x) is not np.ndarray or x.dtype != np.float64:
            x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"{self.name}: point has shape {x.shape}, expected ({self.dimension},)"
            )
        if (x < self.lower).any() or (x > self.upper).any():
            raise ValueError(f"{self.name}: point {x} lies outside the box")
        return x

    def evaluate(self, x) -> float:
        x = self.check_point(x)
        value = float(self.func(x))
        self.eval_count += 1
        if math.isnan(value):
            raise EvaluationError(f"{self.name}: NaN value at {x}")
        return value + self.shift

    def raw(self, shifted_value: float) -> float:
        """Undo the non-negativity shift."""
        return shifted_value - self.shift

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


def evaluate(objective: Objective, x) -> float:
    return objective.evaluate(x)


@dataclass(slots=True)
class StepResult:
    """What one searcher step reports back to the strategy."""

    points: list
    values: list
    evals: int
    terminated: bool = False


@dataclass(slots=True)
class InstanceState:
    """One local-search instance as seen by a multi-start strategy.

    ``n`` counts searcher steps, ``best_value`` is the largest (shifted)
    value the instance has produced. A fresh instance has ``n == 0`` and
    ``best_value == 0``.
    """

    id: int
    searcher: Any = None
    n: int = 0
    best_value: float = 0.0
    best_point: Optional[np.ndarray] = None
    status: str = "active"

    @property
    def active(self) -> bool:
        return self.status == "active"

    def next_cost(self) -> int:
        return self.searcher.next_cost()

    def advance(self) -> StepResult:
        """Take one step with the searcher and fold its values into the best."""
        if not self.active:
            raise ContractViolation(f"instance {self.id} is terminated")
        res = self.searcher.step()
        values = res.values
        k = 0
        for j in range(1, len(values)):
            if values[j] > values[k]:
                k = j
        v = values[k]
        if self.n == 0 or v > self.best_value:
            self.best_value = v
            self.best_point = res.points[k]
        self.n += 1
        if res.terminated:
            self.status = "terminated"
        return res


def record_best(state: InstanceState, x, v: float) -> InstanceState:
    """Count one step for ``state`` and keep the first maximizer seen."""
    if state.status != "active":
        raise ContractViolation(f"record_best on terminated instance {state.id}")
    if state.n == 0 or v > state.best_value:
        state.best_value = v
        state.best_point = x
    state.n += 1
    return state


@dataclass(frozen=True)
class RoundRecord:
    r: int
    selected: tuple
    leader: int
    leader_steps: int
    total_steps: int
    best_value: float
    evals: int


@dataclass
class RunTrace:
    """Best-so-far values after each searcher step of one run.

    ``best`` holds raw (unshifted) values. Errors are computed against the
    shifted values so an exact hit of the optimum reports exactly 0.
    """

    evals: np.ndarray
    best_shifted: np.ndarray
    shift: float = 0.0
    seed: Any = None
    strategy: str = ""
    kind: str = ""
    run: int = 0
    rounds: list = field(default_factory=list)
    valid: bool = True
    failure: Optional[str] = None
    best_point: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.evals)

    @property
    def best(self) -> np.ndarray:
        return self.best_shifted - self.shift

    @property
    def final_best(self) -> float:
        return float(self.best[-1]) if len(self.evals) else float("nan")

    def error(self, known_max: float) -> np.ndarray:
        return (known_max + self.shift) - self.best_shifted

    def best_at(self, checkpoints, known_max: Optional[float] = None) -> np.ndarray:
        """Best value among evaluations ``<= c`` for each checkpoint ``c``
        (or the error against ``known_max``); NaN before the first step."""
        checkpoints = np.asarray(checkpoints)
        idx = np.searchsorted(self.evals, checkpoints, side="right") - 1
        out = np.full(checkpoints.shape, np.nan)
        ok = idx >= 0
        vals = self.best if known_max is None else self.error(known_max)
        out[ok] = vals[idx[ok]]
        return out
