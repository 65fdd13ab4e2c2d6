import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metamax.core import ContractViolation, Objective
from metamax.searchers import (
    ClusteringObjective,
    Dataset,
    KMeansSearcher,
    KmeansState,
    SpsaParams,
    SpsaSearcher,
    assign_points,
    kmeans_cost,
    kmeans_init_pp,
    kmeans_init_uniform,
    lloyd_step,
    spsa_gains,
    spsa_gradient,
)

from oracles import full_cost, lloyd_oracle

# ---------------------------------------------------------------------------
# SPSA


def test_spsa_gain_examples():
    p = SpsaParams(a=0.05, phi=0.1)
    a0, phi0 = spsa_gains(p, 0)
    assert phi0 == 0.1
    assert a0 == pytest.approx(0.05 / 61**0.602, rel=1e-15)
    # high-precision reference value
    assert a0 == pytest.approx(0.0042092182398134123, rel=1e-14)
    gains = np.array([spsa_gains(p, t) for t in range(200)])
    assert np.all(np.diff(gains, axis=0) < 0)
    with pytest.raises(ValueError):
        spsa_gains(p, -1)
    with pytest.raises(ValueError):
        SpsaParams(a=0.0, phi=0.1)


def test_spsa_1d_linear_exact():
    obj = Objective(lambda x: 3.5 * x[0], [-5.0], [5.0])
    for b in (1.0, -1.0):
        g = spsa_gradient(obj, np.array([0.3]), 0.2, np.array([b]))[0]
        assert g[0] == pytest.approx(3.5, rel=1e-14)


def test_spsa_2d_linear_expectation():
    rng = np.random.default_rng(3)
    c = np.array([0.7, -1.3])
    obj = Objective(lambda x: float(c @ x), [-5, -5], [5, 5])
    g = np.array([spsa_gradient(obj, np.zeros(2), 0.1, rng.integers(0, 2, 2) * 2.0 - 1)[0] for _ in range(20_000)])
    se = g.std(axis=0, ddof=1) / math.sqrt(len(g))
    assert np.all(np.abs(g.mean(axis=0) - c) <= 3 * se)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 0.5), st.sampled_from([-1.0, 1.0]))
def test_spsa_1d_quadratic_exact(m, x0, phi, b):
    obj = Objective(lambda x: -((x[0] - m) ** 2), [-2.0], [2.0])
    g = spsa_gradient(obj, np.array([x0]), phi, np.array([b]))[0][0]
    assert abs(g - (-2 * (x0 - m))) <= 1e-12


def test_spsa_step_costs_and_box():
    obj = Objective(lambda x: -float(np.sum((x - 2.0) ** 2)), [-1, -1, -1], [1, 1, 1])
    s = SpsaSearcher(obj, SpsaParams(a=5.0, phi=0.5), np.random.default_rng(0))
    x0 = s.state.x.copy()
    assert s.next_cost() == 1
    first = s.step()
    assert first.evals == 1 and obj.eval_count == 1
    for _ in range(200):
        assert s.next_cost() == 3
        res = s.step()
        assert res.evals == 3 and len(res.points) == 3
        for p in res.points:
            assert np.all(p >= -1) and np.all(p <= 1)
    assert obj.eval_count == 1 + 3 * 200
    # the iterate moved toward (2, 2, 2) from its start
    assert obj.func(s.state.x) > obj.func(x0)


def test_spsa_lazy_rng_factory():
    obj = Objective(lambda x: float(x[0]), [0.0], [1.0])
    made = []

    def factory():
        made.append(1)
        return np.random.default_rng(0)

    s = SpsaSearcher(obj, SpsaParams(0.1, 0.1), x0=[0.5], rng_factory=factory)
    s.step()
    assert not made
    s.step()
    assert made == [1]


# ---------------------------------------------------------------------------
# k-means


def _state(points, centers):
    labels, cost = assign_points(points, centers)
    return KmeansState(centers.astype(float), labels, cost)


def test_lloyd_fixed_point_terminates():
    pts = np.array([[0.0], [1.0], [10.0], [11.0]])
    st0 = _state(pts, np.array([[0.5], [10.5]]))
    new = lloyd_step(st0, Dataset(pts))
    np.testing.assert_array_equal(new.centers, st0.centers)
    assert new.cost == st0.cost and new.terminated
    with pytest.raises(ContractViolation):
        lloyd_step(new, Dataset(pts))


def test_lloyd_hand_example():
    pts = np.array([[0.0], [1.0], [10.0], [11.0]])
    new = lloyd_step(_state(pts, np.array([[0.0], [11.0]])), Dataset(pts))
    np.testing.assert_allclose(new.centers.ravel(), [0.5, 10.5])
    assert new.cost == pytest.approx(1.0, abs=1e-12)


def test_lloyd_empty_cluster_keeps_center():
    pts = np.array([[0.0], [1.0]])
    st0 = KmeansState(np.array([[0.5], [100.0]]), np.array([0, 0]), 0.5)
    new = lloyd_step(st0, Dataset(pts))
    assert new.centers[1, 0] == 100.0


def test_assignment_ties_to_smallest_index():
    pts = np.array([[0.0]])
    labels, cost = assign_points(pts, np.array([[1.0], [-1.0]]))
    assert labels[0] == 0 and cost == 1.0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lloyd_matches_oracle_and_is_monotone(seed):
    rng = np.random.default_rng(seed)
    M, d = int(rng.integers(2, 30)), int(rng.integers(1, 4))
    N = int(rng.integers(1, min(M, 5) + 1))
    pts = rng.normal(size=(M, d))
    data = Dataset(pts)
    st0 = _state(pts, kmeans_init_uniform(data, N, rng))
    for _ in range(20):
        c_o, lab_o, cost_o = lloyd_oracle(pts, st0.centers, st0.assignment)
        new = lloyd_step(st0, data)
        assert new.cost <= st0.cost
        if cost_o <= st0.cost:  # otherwise the rounding guard kept the old state
            np.testing.assert_allclose(new.centers, c_o, rtol=1e-12, atol=1e-12)
            assert new.cost == pytest.approx(cost_o, rel=1e-9, abs=1e-12)
        # reported cost agrees with a from-scratch recomputation
        assert new.cost == pytest.approx(full_cost(pts, new.centers), rel=1e-9, abs=1e-12)
        assert kmeans_cost(pts, new.centers, new.assignment) == pytest.approx(new.cost, rel=1e-9, abs=1e-12)
        st0 = new
        if st0.terminated:
            break


def test_init_uniform():
    pts = np.arange(12.0).reshape(6, 2)
    data = Dataset(pts)
    rng = np.random.default_rng(0)
    all_c = kmeans_init_uniform(data, 6, rng)
    assert sorted(map(tuple, all_c)) == sorted(map(tuple, pts))
    c = kmeans_init_uniform(data, 3, rng)
    assert len({tuple(r) for r in c}) == 3 and all(tuple(r) in set(map(tuple, pts)) for r in c)
    with pytest.raises(ValueError):
        kmeans_init_uniform(data, 7, rng)


def test_init_uniform_chi_square():
    data = Dataset(np.arange(10.0)[:, None])
    rng = np.random.default_rng(1)
    counts = np.bincount([int(kmeans_init_uniform(data, 1, rng)[0, 0]) for _ in range(10_000)], minlength=10)
    chi2 = float(((counts - 1000) ** 2 / 1000).sum())
    assert chi2 < 21.666  # 99% quantile, 9 degrees of freedom


def test_init_pp_examples():
    rng = np.random.default_rng(2)
    data = Dataset(np.array([[0.0], [0.0], [10.0]]))
    for _ in range(200):
        c = kmeans_init_pp(data, 2, rng)
        if c[0, 0] == 0.0:
            assert c[1, 0] == 10.0
    same = Dataset(np.ones((5, 2)))
    c = kmeans_init_pp(same, 3, rng)
    assert c.shape == (3, 2)
    # N = 1: a single uniformly drawn row
    a = kmeans_init_pp(data, 1, np.random.default_rng(9))
    b = data.points[np.random.default_rng(9).integers(3)]
    np.testing.assert_array_equal(a[0], b)
    with pytest.raises(ValueError):
        kmeans_init_pp(data, 4, rng)


def test_init_pp_distribution():
    # given first center row 0, the next is drawn with weights d^2 = (1, 4, 9)
    # for rows 1, 2, 3
    pts = np.array([[0.0], [1.0], [2.0], [3.0]])
    data = Dataset(pts)
    rng = np.random.default_rng(4)
    seconds = []
    while len(seconds) < 6000:
        c = kmeans_init_pp(data, 2, rng)
        if c[0, 0] == 0.0:
            seconds.append(int(c[1, 0]))
    freq = np.bincount(seconds, minlength=4)[1:] / len(seconds)
    np.testing.assert_allclose(freq, np.array([1, 4, 9]) / 14, atol=0.025)


def test_init_pp_linear_weighting():
    pts = np.array([[0.0], [1.0], [2.0], [3.0]])
    data = Dataset(pts)
    rng = np.random.default_rng(5)
    seconds = []
    while len(seconds) < 6000:
        c = kmeans_init_pp(data, 2, rng, weighting="linear")
        if c[0, 0] == 0.0:
            seconds.append(int(c[1, 0]))
    freq = np.bincount(seconds, minlength=4)[1:] / len(seconds)
    np.testing.assert_allclose(freq, np.array([1, 2, 3]) / 6, atol=0.025)


def test_kmeans_searcher_values_and_termination():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(5, 0.1, (20, 2))])
    obj = ClusteringObjective(Dataset(pts), 2)
    s = KMeansSearcher(obj, np.random.default_rng(1))
    costs = []
    while not s.terminated:
        res = s.step()
        assert res.evals == 1
        costs.append(obj.shift - res.values[0])
        assert res.values[0] >= 0
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert obj.eval_count == len(costs)


def test_clustering_objective_validation():
    with pytest.raises(ValueError):
        ClusteringObjective(Dataset(np.zeros((2, 1))), 3)
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]))
