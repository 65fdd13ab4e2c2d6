import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metamax.benchmarks import griewank_objective
from metamax.core import (
    ContractViolation,
    EvaluationError,
    InstanceState,
    Objective,
    RunTrace,
    StepResult,
    evaluate,
    record_best,
)


def test_evaluate_griewank_origin():
    obj = griewank_objective(2)
    v = evaluate(obj, [0.0, 0.0])
    assert v == 1.0 + obj.shift
    assert obj.raw(v) == pytest.approx(1.0, abs=1e-15)  # one rounding in the shift
    assert obj.eval_count == 1


def test_evaluate_same_point_twice():
    obj = griewank_objective(3)
    x = [0.1, -0.2, 0.3]
    assert evaluate(obj, x) == evaluate(obj, x)
    assert obj.eval_count == 2


def test_evaluate_griewank_1d_half():
    obj = griewank_objective(1)
    want = math.cos(math.pi) - 4 * math.pi**2 * 0.25 / 100
    assert obj.raw(evaluate(obj, [0.5])) == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(-1.09870, abs=1e-5)


def test_shifted_values_non_negative():
    obj = griewank_objective(2)
    rng = np.random.default_rng(0)
    assert min(obj.evaluate(rng.uniform(-1, 1, 2)) for _ in range(1000)) >= 0


@pytest.mark.parametrize("x", [[0.0], [0.0, 0.0, 0.0], [[0.0, 0.0]]])
def test_evaluate_rejects_wrong_dimension(x):
    obj = griewank_objective(2)
    with pytest.raises(ValueError):
        evaluate(obj, x)
    assert obj.eval_count == 0


def test_evaluate_rejects_outside_box():
    obj = griewank_objective(2)
    with pytest.raises(ValueError):
        evaluate(obj, [1.5, 0.0])
    assert obj.eval_count == 0


def test_nan_value_is_an_evaluation_error():
    obj = Objective(lambda x: float("nan"), [0.0], [1.0])
    with pytest.raises(EvaluationError):
        obj.evaluate([0.5])


def test_objective_box_validation():
    with pytest.raises(ValueError):
        Objective(lambda x: 0.0, [1.0], [0.0])
    with pytest.raises(ValueError):
        Objective(lambda x: 0.0, [0.0, 0.0], [1.0])


def _state(best, n=1):
    return InstanceState(0, n=n, best_value=best, best_point="p0")


def test_record_best_improves():
    s = record_best(_state(0.5), "p1", 0.7)
    assert (s.best_value, s.best_point, s.n) == (0.7, "p1", 2)


def test_record_best_keeps_first_maximizer_on_tie():
    s = record_best(_state(0.5), "p1", 0.5)
    assert (s.best_value, s.best_point, s.n) == (0.5, "p0", 2)


def test_record_best_worse_value():
    s = record_best(_state(0.5), "p1", 0.3)
    assert (s.best_value, s.best_point, s.n) == (0.5, "p0", 2)


def test_record_best_first_step_takes_any_value():
    s = record_best(InstanceState(0), "p", 0.0)
    assert (s.best_value, s.best_point, s.n) == (0.0, "p", 1)


def test_record_best_on_terminated_instance():
    s = _state(0.5)
    s.status = "terminated"
    with pytest.raises(ContractViolation):
        record_best(s, "p1", 0.9)


class _Replay:
    """Searcher replaying a fixed list of per-step value batches."""

    def __init__(self, batches, stop_after=None):
        self.batches = list(batches)
        self.k = 0
        self.stop_after = stop_after

    def next_cost(self):
        return len(self.batches[self.k])

    def step(self):
        vals = self.batches[self.k]
        self.k += 1
        pts = [(self.k, j) for j in range(len(vals))]
        return StepResult(pts, vals, len(vals), terminated=self.k == self.stop_after)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=3), min_size=1, max_size=30))
def test_best_value_is_prefix_max(batches):
    s = InstanceState(0, _Replay(batches))
    seen = []
    for k, b in enumerate(batches):
        s.advance()
        seen.extend(b)
        assert s.best_value == max(seen)
        assert s.n == k + 1
        # the best point is the first one attaining the maximum
        flat = [(i + 1, j) for i, bb in enumerate(batches[: k + 1]) for j in range(len(bb))]
        assert s.best_point == flat[seen.index(max(seen))]


def test_terminated_instance_is_frozen():
    s = InstanceState(0, _Replay([[1.0], [2.0], [3.0]], stop_after=2))
    s.advance()
    s.advance()
    assert not s.active
    snapshot = (s.n, s.best_value, s.best_point)
    with pytest.raises(ContractViolation):
        s.advance()
    assert (s.n, s.best_value, s.best_point) == snapshot


def test_run_trace_error_is_exact_at_optimum():
    tr = RunTrace(np.array([1, 2, 3]), np.array([0.5, 1.5, 2.0]), shift=1.0)
    np.testing.assert_array_equal(tr.best, [-0.5, 0.5, 1.0])
    np.testing.assert_array_equal(tr.error(1.0), [1.5, 0.5, 0.0])
    assert tr.final_best == 1.0


def test_run_trace_best_at_checkpoints():
    tr = RunTrace(np.array([3, 6, 9]), np.array([1.0, 2.0, 4.0]))
    out = tr.best_at([1, 3, 5, 9, 20])
    np.testing.assert_array_equal(out[1:], [1.0, 1.0, 4.0, 4.0])
    assert math.isnan(out[0])
    np.testing.assert_array_equal(tr.best_at([6], known_max=5.0), [3.0])
