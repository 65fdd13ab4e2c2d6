"""Local searchers driven by the multi-start strategies.

A searcher owns its state and random stream and exposes two methods:
``next_cost()``, the number of objective evaluations its next step will
spend, and ``step()``, which returns a :class:`~metamax.core.StepResult`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ContractViolation, Objective, StepResult

__all__ = [
    "ClusteringObjective",
    "Dataset",
    "KMeansSearcher",
    "KmeansState",
    "SpsaParams",
    "SpsaSearcher",
    "SpsaState",
    "assign_points",
    "kmeans_cost",
    "kmeans_init_pp",
    "kmeans_init_uniform",
    "lloyd_step",
    "spsa_gains",
    "spsa_gradient",
    "spsa_step",
]

LLOYD_TOL = 1e-9


# ---------------------------------------------------------------------------
# SPSA


@dataclass(frozen=True)
class SpsaParams:
    a: float
    phi: float
    A: float = 60.0
    alpha: float = 0.602
    gamma: float = 0.101

    def __post_init__(self):
        if self.a <= 0 or self.phi <= 0:
            raise ValueError("SPSA gain scale and perturbation scale must be positive")


def spsa_gains(params: SpsaParams, t: int) -> tuple:
    """Step size ``a_t`` and perturbation size ``phi_t`` at iteration ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    a_t = params.a / (params.A + t + 1) ** params.alpha
    phi_t = params.phi / (t + 1) ** params.gamma
    return a_t, phi_t


def spsa_gradient(objective: Objective, x: np.ndarray, phi_t: float, b: np.ndarray):
    """Simultaneous-perturbation gradient estimate at ``x`` along ``b``.

    Returns ``(g, x_plus, v_plus, x_minus, v_minus)``. Probe points are
    clamped to the box; the quotient keeps the nominal ``2 * phi_t``.
    """
    x_plus = np.clip(x + phi_t * b, objective.lower, objective.upper)
    x_minus = np.clip(x - phi_t * b, objective.lower, objective.upper)
    v_plus = objective.evaluate(x_plus)
    v_minus = objective.evaluate(x_minus)
    g = (v_plus - v_minus) / (2.0 * phi_t * b)
    return g, x_plus, v_plus, x_minus, v_minus


@dataclass
class SpsaState:
    x: np.ndarray
    rng: Optional[np.random.Generator]
    params: SpsaParams
    t: int = 0
    started: bool = False
    rng_factory: Optional[Callable[[], np.random.Generator]] = None


def spsa_step(state: SpsaState, objective: Objective) -> StepResult:
    """Advance ``state`` in place by one SPSA step.

    The first step only evaluates the starting point. Every later step
    probes ``x +- phi_t * B``, moves uphill ``x + a_t * g`` (clamped) and
    evaluates the new iterate: three evaluations.
    """
    if not state.started:
        v = objective.evaluate(state.x)
        state.started = True
        return StepResult([state.x], [v], 1)
    if state.rng is None:
        state.rng = state.rng_factory()
    a_t, phi_t = spsa_gains(state.params, state.t)
    b = state.rng.integers(0, 2, size=state.x.size) * 2.0 - 1.0
    g, xp, vp, xm, vm = spsa_gradient(objective, state.x, phi_t, b)
    state.x = np.clip(state.x + a_t * g, objective.lower, objective.upper)
    state.t += 1
    v = objective.evaluate(state.x)
    return StepResult([xp, xm, state.x], [vp, vm, v], 3)


class SpsaSearcher:
    """SPSA started from ``x0`` (a uniform random point of the box if None).

    The perturbation stream is either ``rng`` or, to keep one-step
    instances cheap, created by ``rng_factory`` on the first gradient step.
    """

    def __init__(
        self,
        objective: Objective,
        params: SpsaParams,
        rng: Optional[np.random.Generator] = None,
        x0=None,
        rng_factory: Optional[Callable[[], np.random.Generator]] = None,
    ):
        if rng is None and rng_factory is None:
            raise ValueError("SpsaSearcher needs rng or rng_factory")
        if x0 is None:
            if rng is None:
                raise ValueError("a random start needs rng")
            x0 = objective.sample_uniform(rng)
        self.objective = objective
        self.state = SpsaState(objective.check_point(x0).copy(), rng, params, rng_factory=rng_factory)
        self.terminated = False

    def next_cost(self) -> int:
        return 3 if self.state.started else 1

    def step(self) -> StepResult:
        return spsa_step(self.state, self.objective)


# ---------------------------------------------------------------------------
# k-means


@dataclass
class Dataset:
    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.size == 0:
            raise ValueError("dataset must be a non-empty 2-d array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("dataset contains non-finite values")

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def assign_points(points: np.ndarray, centers: np.ndarray):
    """Nearest-center labels (ties to the smallest index) and the cost."""
    # one (M, N) pass per coordinate beats a full (M, N, d) difference tensor
    d2 = None
    for j in range(points.shape[1]):
        t = np.subtract.outer(points[:, j], centers[:, j])
        np.square(t, out=t)
        if d2 is None:
            d2 = t
        else:
            d2 += t
    labels = d2.argmin(axis=1)
    cost = float(np.take_along_axis(d2, labels[:, None], 1).sum())
    return labels, cost


def kmeans_cost(points: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    diff = points - centers[labels]
    return float(np.einsum("md,md->", diff, diff))


class ClusteringObjective(Objective):
    """Negated k-means cost of a flattened center matrix.

    The shift ``TSS + M * max_j |x_j - mean|^2`` bounds the cost of any
    centers inside the data's convex hull, so shifted values stay >= 0.
    """

    def __init__(self, data: Dataset, n_clusters: int, best_cost: Optional[float] = None):
        if n_clusters < 1:
            raise ValueError("need at least one cluster")
        if data.M < n_clusters:
            raise ValueError(f"{data.M} points cannot form {n_clusters} clusters")
        self.data = data
        self.n_clusters = n_clusters
        pts = data.points
        mu = pts.mean(axis=0)
        r2 = np.einsum("md,md->m", pts - mu, pts - mu)
        shift = float(r2.sum() + data.M * r2.max())
        lo, hi = np.tile(pts.min(axis=0), n_clusters), np.tile(pts.max(axis=0), n_clusters)
        known = None if best_cost is None else -float(best_cost)
        super().__init__(self._value, lo, hi, known_max=known, shift=shift, name="kmeans")

    def _value(self, flat: np.ndarray) -> float:
        centers = flat.reshape(self.n_clusters, self.data.d)
        return -assign_points(self.data.points, centers)[1]

    def partition(self, centers: np.ndarray):
        """Labels and cost of ``centers``; counts as one evaluation."""
        if centers.shape != (self.n_clusters, self.data.d):
            raise ValueError(f"centers have shape {centers.shape}")
        labels, cost = assign_points(self.data.points, centers)
        self.eval_count += 1
        return labels, cost


@dataclass
class KmeansState:
    centers: np.ndarray
    assignment: np.ndarray
    cost: float
    terminated: bool = False


def kmeans_init_uniform(data: Dataset, N: int, rng: np.random.Generator) -> np.ndarray:
    """``N`` distinct rows chosen uniformly without replacement."""
    if data.M < N:
        raise ValueError(f"cannot pick {N} centers from {data.M} points")
    idx = rng.choice(data.M, size=N, replace=False)
    return data.points[idx].copy()


def kmeans_init_pp(
    data: Dataset, N: int, rng: np.random.Generator, weighting: str = "squared"
) -> np.ndarray:
    """k-means++ seeding.

    The first center is a uniform row; each later one is drawn with weight
    equal to the squared distance (``weighting="linear"``: the distance) to
    the closest chosen center. If every weight is zero the next center is
    uniform over the rows not chosen yet.
    """
    if data.M < N:
        raise ValueError(f"cannot pick {N} centers from {data.M} points")
    if weighting not in ("squared", "linear"):
        raise ValueError(f"unknown weighting {weighting!r}")
    pts = data.points
    chosen = [int(rng.integers(data.M))]
    d2 = np.einsum("md,md->m", pts - pts[chosen[0]], pts - pts[chosen[0]])
    while len(chosen) < N:
        w = d2 if weighting == "squared" else np.sqrt(d2)
        cum = np.cumsum(w)
        total = cum[-1]
        if total > 0:
            # inverse-CDF draw; zero-weight rows have empty intervals
            nxt = min(int(np.searchsorted(cum, rng.random() * total, side="right")), data.M - 1)
        else:
            free = np.setdiff1d(np.arange(data.M), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        diff = pts - pts[nxt]
        np.minimum(d2, np.einsum("md,md->m", diff, diff), out=d2)
    return pts[chosen].copy()


def lloyd_step(
    state: KmeansState, data: Dataset, tol: float = LLOYD_TOL, objective=None
) -> KmeansState:
    """One Lloyd iteration: move centers to the means of their current
    clusters, then reassign every point to its nearest center.

    Empty clusters keep their center. A step whose cost decrease is below
    ``tol`` terminates the state; a step that would raise the cost (float
    rounding at a fixed point) is discarded.
    """
    if state.terminated:
        raise ContractViolation("lloyd_step on a terminated k-means state")
    pts = data.points
    k = state.centers.shape[0]
    labels = state.assignment
    sums = np.stack([np.bincount(labels, pts[:, j], minlength=k) for j in range(pts.shape[1])], axis=1)
    counts = np.bincount(labels, minlength=k)
    centers = state.centers.copy()
    nonempty = counts > 0
    centers[nonempty] = sums[nonempty] / counts[nonempty, None]
    if objective is not None:
        labels, cost = objective.partition(centers)
    else:
        labels, cost = assign_points(pts, centers)
    if cost > state.cost:
        return KmeansState(state.centers, state.assignment, state.cost, True)
    return KmeansState(centers, labels, cost, state.cost - cost < tol)


class KMeansSearcher:
    """k-means from a random seeding; one step is one cost evaluation.

    The first step seeds the centers and evaluates them; each later step
    is a Lloyd iteration. Reported values are the shifted negated cost.
    """

    def __init__(
        self,
        objective: ClusteringObjective,
        rng: np.random.Generator,
        init: str = "pp",
        weighting: str = "squared",
        tol: float = LLOYD_TOL,
    ):
        if init not in ("pp", "uniform"):
            raise ValueError(f"unknown k-means init {init!r}")
        self.objective = objective
        self.rng = rng
        self.init = init
        self.weighting = weighting
        self.tol = tol
        self.state: Optional[KmeansState] = None
        self.terminated = False

    def next_cost(self) -> int:
        return 1

    def step(self) -> StepResult:
        obj = self.objective
        data = obj.data
        if self.state is None:
            if self.init == "pp":
                centers = kmeans_init_pp(data, obj.n_clusters, self.rng, self.weighting)
            else:
                centers = kmeans_init_uniform(data, obj.n_clusters, self.rng)
            labels, cost = obj.partition(centers)
            self.state = KmeansState(centers, labels, cost)
        else:
            self.state = lloyd_step(self.state, data, self.tol, objective=obj)
            self.terminated = self.state.terminated
        value = obj.shift - self.state.cost
        return StepResult([self.state.centers.ravel()], [value], 1, self.terminated)
