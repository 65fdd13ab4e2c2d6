"""Upper-convex-hull selection of local-search instances.

Each instance is mapped to the point ``(h(n), f)`` where ``n`` is its step
count and ``f`` its best value. An instance is worth a step when, for some
positive scale ``c``, its optimistic estimate ``f + c * h(n)`` is strictly
the largest. Those are exactly the corners of the upper convex hull of the
instance points together with the anchor ``(0, max f)``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ContractViolation

__all__ = [
    "ANCHOR",
    "HFunction",
    "HullPoint",
    "NoActiveInstances",
    "StepIndex",
    "dedup_by_steps",
    "h_value",
    "hull_candidates",
    "select_metamax",
    "upper_hull_corners",
]

COLLINEAR_RTOL = 1e-12

# Below this pool size plain Python beats numpy's per-call overhead.
_SMALL_POOL = 96


_MISSING = object()


class NoActiveInstances(RuntimeError):
    """Every instance has terminated; nothing can be selected."""


@dataclass(frozen=True)
class HFunction:
    """Decreasing weight ``h`` with ``h(0) = 1``.

    ``kind="exponential"`` is ``alpha ** n``; ``kind="time_varying"`` is
    ``exp(-n / sqrt(t))`` where ``t`` is the total number of steps taken so
    far. A time-varying function with ``t=None`` is a template that
    :meth:`for_round` turns into a concrete function.
    """

    kind: str = "time_varying"
    alpha: Optional[float] = None
    t: Optional[float] = None

    def __post_init__(self):
        if self.kind == "exponential":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"decay must lie in (0, 1), got {self.alpha}")
        elif self.kind == "time_varying":
            if self.t is not None and self.t < 1:
                raise ValueError(f"time-varying h needs t >= 1, got {self.t}")
        else:
            raise ValueError(f"unknown h kind {self.kind!r}")

    @classmethod
    def exponential(cls, alpha: float) -> "HFunction":
        return cls("exponential", alpha=alpha)

    @classmethod
    def time_varying(cls, t: Optional[float] = None) -> "HFunction":
        return cls("time_varying", t=t)

    def for_round(self, total_steps: int) -> "HFunction":
        """Concrete ``h`` for a round that starts after ``total_steps`` steps.
        ``t`` is floored at 1 so the very first round is well defined."""
        if self.kind == "exponential":
            return self
        return HFunction("time_varying", t=float(max(total_steps, 1)))

    def _log_rate(self) -> float:
        if self.kind == "exponential":
            return math.log(self.alpha)
        if self.t is None:
            raise ValueError("time-varying h used without a step total; call for_round")
        return -1.0 / math.sqrt(self.t)

    def log(self, n):
        """``log h(n)``; exact, never underflows."""
        return self._log_rate() * np.asarray(n, dtype=float)

    def __call__(self, n):
        if np.ndim(n) == 0:
            return math.exp(self._log_rate() * n)
        return np.exp(self.log(n))

    def inverse(self, y: float) -> float:
        """Real-valued ``n`` with ``h(n) = y``, for ``0 < y <= 1``."""
        return math.log(y) / self._log_rate()


def h_value(h: HFunction, n: int) -> float:
    if n == 0:
        return 1.0
    return h(n)


@dataclass(frozen=True)
class HullPoint:
    x: float
    y: float
    instance_id: Optional[int] = None


ANCHOR = None


def _upper_chain(xs: Sequence[float], ys: Sequence[float]) -> list:
    """Indices of strict upper-hull vertices of points already sorted by x
    ascending with distinct x. Collinear interior points are dropped."""
    hull: list = []
    hx: list = []
    hy: list = []
    tol = COLLINEAR_RTOL
    for k, cx, cy in zip(range(len(xs)), xs, ys):
        while len(hull) >= 2:
            ax, ay = hx[-2], hy[-2]
            t1 = (hx[-1] - ax) * (cy - ay)
            t2 = (hy[-1] - ay) * (cx - ax)
            # b survives only on a strict clockwise turn a -> b -> c
            if t1 - t2 >= -tol * (abs(t1) + abs(t2)):
                hull.pop()
                hx.pop()
                hy.pop()
            else:
                break
        hull.append(k)
        hx.append(cx)
        hy.append(cy)
    return hull


def upper_hull_corners(points: Sequence[HullPoint]) -> set:
    """Ids of points that are strict vertices of the upper convex hull.

    Points are swept by x ascending (y descending at equal x); at a shared x
    only the highest point can be a vertex. The anchor (``instance_id`` is
    None) takes part in the hull but is never reported.
    """
    if not points:
        raise ContractViolation("upper_hull_corners needs at least one point")
    pts = sorted(points, key=lambda p: (p.x, -p.y))
    xs, ys, ids = [], [], []
    for p in pts:
        if xs and p.x == xs[-1]:
            continue
        xs.append(p.x)
        ys.append(p.y)
        ids.append(p.instance_id)
    return {ids[k] for k in _upper_chain(xs, ys) if ids[k] is not None}


def _frontier_small(n, f):
    # highest value per step count, then keep those beating every smaller n
    top: dict = {}
    for a, b in zip(n, f):
        if a not in top or b > top[a]:
            top[a] = b
    fn, ff = [], []
    best = -math.inf
    for a in sorted(top):
        b = top[a]
        if b > best:
            best = b
            fn.append(a)
            ff.append(b)
    return fn, ff


def _frontier_large(n, f):
    n = np.asarray(n)
    f = np.asarray(f, dtype=float)
    order = np.lexsort((-f, n))
    fs = f[order]
    prev = np.empty_like(fs)
    prev[0] = -np.inf
    np.maximum.accumulate(fs[:-1], out=prev[1:])
    keep = order[fs > prev]
    return n[keep].tolist(), f[keep].tolist()


def hull_candidates(n, f, h: HFunction) -> list:
    """Positions ``i`` (into ``n``/``f``) selected by the corner rule, before
    collapsing instances that share a step count.

    Only instances with a strictly larger value than every instance with
    fewer or equal steps can be corners; the hull is built over that
    frontier. Positions with an identical ``(n, f)`` pair are all returned.
    """
    size = len(n)
    if size == 0:
        raise NoActiveInstances("no candidate instances")
    if size < _SMALL_POOL:
        fn, ff = _frontier_small(n, f)
    else:
        fn, ff = _frontier_large(n, f)
    verts = [(fn[k], ff[k]) for k in _chain_frontier(fn, ff, h)]
    if size < _SMALL_POOL:
        # frontier step counts are distinct, so a dict lookup suffices
        vmap = dict(verts)
        return [i for i in range(size) if vmap.get(n[i], _MISSING) == f[i]]
    n_arr = np.asarray(n)
    f_arr = np.asarray(f, dtype=float)
    mask = np.zeros(size, dtype=bool)
    for vn, vf in verts:
        mask |= (n_arr == vn) & (f_arr == vf)
    return np.flatnonzero(mask).tolist()


def _chain_frontier(fn: list, ff: list, h: HFunction) -> list:
    """Indices into a frontier (step counts ascending, values strictly
    increasing) of the strict hull vertices."""
    lr = h._log_rate()
    base = fn[0]
    exp = math.exp
    xs, ys, ks = [], [], []
    last = -1.0
    # sweep by h ascending, i.e. steps descending; x is h relative to the
    # least-stepped point so it cannot underflow to 0 there
    for k in range(len(fn) - 1, -1, -1):
        x = exp(lr * (fn[k] - base))
        if x == last:
            # h underflowed; only the higher point (earlier in sweep) can be a corner
            continue
        last = x
        xs.append(x)
        ys.append(ff[k])
        ks.append(k)
    return [ks[j] for j in _upper_chain(xs, ys)]


class StepIndex:
    """Selection state for large or growing pools.

    Keeps one max-heap of ``(value, id)`` per step count with lazy deletion,
    so a round costs O(D log D) in the number D of distinct step counts
    instead of a pass over every instance. Gives the same selection as
    :func:`hull_candidates` followed by :func:`dedup_by_steps`.
    """

    def __init__(self):
        self._heaps: dict = {}
        self._cur: dict = {}

    def __len__(self) -> int:
        return len(self._cur)

    def set(self, i: int, n: int, f: float) -> None:
        """Insert instance ``i`` or move it to ``(n, f)``."""
        self._cur[i] = (n, f)
        heap = self._heaps.get(n)
        if heap is None:
            self._heaps[n] = [(-f, i)]
        else:
            heapq.heappush(heap, (-f, i))

    def remove(self, i: int) -> None:
        self._cur.pop(i, None)

    def _group_tops(self) -> list:
        cur = self._cur
        tops = []
        for n in sorted(self._heaps):
            heap = self._heaps[n]
            while heap:
                negf, i = heap[0]
                if cur.get(i) == (n, -negf):
                    break
                heapq.heappop(heap)
            if not heap:
                del self._heaps[n]
                continue
            tops.append((n, -heap[0][0], heap[0][1]))
        return tops

    def _tied(self, n: int, f: float) -> list:
        heap = self._heaps[n]
        cur = self._cur
        popped = []
        while heap and heap[0][0] == -f:
            popped.append(heapq.heappop(heap))
        for e in popped:
            heapq.heappush(heap, e)
        return sorted({i for _, i in popped if cur.get(i) == (n, f)})

    def select(self, h: HFunction, tie_break: str = "smallest", rng=None) -> list:
        if not self._cur:
            raise NoActiveInstances("no active instances")
        fn, ff, fi = [], [], []
        best = -math.inf
        for n, f, i in self._group_tops():
            if f > best:
                best = f
                fn.append(n)
                ff.append(f)
                fi.append(i)
        ks = _chain_frontier(fn, ff, h)
        if tie_break == "smallest":
            return sorted(fi[k] for k in ks)
        if tie_break != "random":
            raise ValueError(f"unknown tie_break {tie_break!r}")
        out = []
        for k in ks:
            g = self._tied(fn[k], ff[k])
            out.append(g[int(rng.random() * len(g))] if len(g) > 1 else g[0])
        return sorted(out)


def dedup_by_steps(positions, n, tie_break: str = "smallest", rng=None) -> list:
    """Keep one position per distinct step count.

    ``tie_break="random"`` picks uniformly with ``rng``; ``"smallest"``
    keeps the first position (positions are assumed in index order).
    """
    if tie_break not in ("smallest", "random"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    if len({n[p] for p in positions}) == len(positions):
        return sorted(positions)
    groups: dict = {}
    for p in positions:
        groups.setdefault(n[p], []).append(p)
    out = []
    for g in groups.values():
        if len(g) == 1 or tie_break == "smallest":
            out.append(g[0])
        else:
            # rng.random() is several times cheaper than rng.integers() per call
            out.append(g[int(rng.random() * len(g))])
    out.sort()
    return out


def select_metamax(states, h: HFunction, tie_break: str = "smallest", rng=None) -> list:
    """Ids of active instances to step this round.

    Terminated instances are left out of the point set entirely. Among
    selected instances sharing a step count exactly one is kept, at random
    (``tie_break="random"``, needs ``rng``) or the smallest id.
    """
    active = sorted((s for s in states if s.active), key=lambda s: s.id)
    if not active:
        raise NoActiveInstances("all instances have terminated")
    n = [s.n for s in active]
    f = [s.best_value for s in active]
    pos = hull_candidates(n, f, h)
    pos = dedup_by_steps(pos, n, tie_break, rng)
    return sorted(active[p].id for p in pos)
