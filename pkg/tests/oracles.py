"""Independent reference implementations used by the tests.

None of these call into the code under test beyond plain data types.
"""

from __future__ import annotations

import functools
import math

import numpy as np


@functools.lru_cache(maxsize=None)
def luby_oracle(i: int) -> int:
    """Luby's run length by direct memoized recursion on the definition."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    if i == (1 << k) - 1:
        return 1 << (k - 1)
    return luby_oracle(i - (1 << (k - 1)) + 1)


def winning_intervals(n, f, hvals) -> dict:
    """For every distinct ``(n, f)`` pair, the open interval ``(lo, hi)`` of
    scales ``c > 0`` for which ``f + c * h`` strictly beats every instance
    with a different pair. Empty intervals have ``lo >= hi``."""
    keys = sorted(set(zip(n, f)))
    hk = {}
    for a, b, hv in zip(n, f, hvals):
        hk[(a, b)] = hv
    out = {}
    for ki in keys:
        fi, hi_ = ki[1], hk[ki]
        lo, hi = 0.0, math.inf
        for kj in keys:
            if kj == ki:
                continue
            fj, hj = kj[1], hk[kj]
            dh = hi_ - hj
            if dh == 0.0:
                if not fi > fj:
                    lo, hi = math.inf, 0.0
                continue
            bound = (fj - fi) / dh
            if dh > 0:
                lo = max(lo, bound)
            else:
                hi = min(hi, bound)
        out[ki] = (lo, hi)
    return out


def exact_corner_positions(n, f, hvals) -> set:
    """Positions whose pair has a non-empty winning interval."""
    iv = winning_intervals(n, f, hvals)
    win = {k for k, (lo, hi) in iv.items() if lo < hi}
    return {i for i, k in enumerate(zip(n, f)) if k in win}


def csweep_positions(n, f, hvals, grid) -> set:
    """Brute-force sweep: at each scale ``c`` in ``grid`` find the unique
    strict winner of ``f + c * h`` (ignoring exact duplicates of the same
    ``(n, f)`` pair) and collect the positions sharing its pair."""
    n = np.asarray(n)
    f = np.asarray(f, dtype=float)
    h = np.asarray(hvals, dtype=float)
    pairs = list(zip(n.tolist(), f.tolist()))
    uniq = {p: k for k, p in enumerate(dict.fromkeys(pairs))}
    key = np.array([uniq[p] for p in pairs])
    vals = f[None, :] + grid[:, None] * h[None, :]
    top = vals.max(axis=1)
    arg = vals.argmax(axis=1)
    ties = vals == top[:, None]
    other = ties & (key[None, :] != key[arg][:, None])
    ok = ~other.any(axis=1)
    won = set(key[arg[ok]].tolist())
    return {i for i in range(len(pairs)) if key[i] in won}


def is_grid_boundary(n, f, hvals, grid, rtol: float = 1e-9) -> bool:
    """True when the sweep cannot resolve the configuration: some winning
    interval is nearly empty, narrower than two grid steps, or outside the
    grid's range."""
    step = grid[1] / grid[0]
    for lo, hi in winning_intervals(n, f, hvals).values():
        if lo >= hi:
            # empty; only a near-touching pair of bounds is ambiguous
            if 0.0 < hi < math.inf and lo / hi < 1.0 + rtol:
                return True
            continue
        if lo == 0.0:
            if hi != math.inf and hi < grid[0] * step * step:
                return True
            continue
        if hi == math.inf:
            if lo > grid[-1] / (step * step):
                return True
            continue
        ratio = hi / lo
        if 1.0 - rtol < ratio < step * step:
            return True
    return False


def lloyd_oracle(points: np.ndarray, centers: np.ndarray, labels: np.ndarray):
    """One unguarded Lloyd iteration by loops over clusters: means of the
    current clusters (empty ones keep their center), then a full
    nearest-center reassignment with ties to the smallest index."""
    new = centers.copy()
    for k in range(centers.shape[0]):
        members = points[labels == k]
        if len(members):
            new[k] = members.mean(axis=0)
    d2 = ((points[:, None, :] - new[None, :, :]) ** 2).sum(axis=2)
    lab = d2.argmin(axis=1)
    cost = float(d2[np.arange(len(points)), lab].sum())
    return new, lab, cost


def full_cost(points: np.ndarray, centers: np.ndarray) -> float:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum())
