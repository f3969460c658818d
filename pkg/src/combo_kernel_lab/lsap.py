"""Rectangular linear sum assignment.

:func:`solve_lsap` is the Hungarian method in its shortest-augmenting-path
form with dual potentials, O(n^3) on the square padding of the input.
:func:`brute_force_lsap` enumerates every injective matching and exists to
check it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonFiniteCost, TooLarge, ValidationError

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def _as_cost_matrix(c) -> np.ndarray:
    arr = np.asarray(c, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"cost matrix must be 2-d and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    return arr


def _assignment(arr: np.ndarray, pairs) -> Assignment:
    pairs = tuple(sorted(pairs))
    # fsum is order independent, so equal pair sets give bit-equal totals
    return Assignment(pairs, math.fsum(float(arr[r, c]) for r, c in pairs))


def solve_lsap(c) -> Assignment:
    """Minimum-cost matching of every row (or column, whichever side is
    smaller) to a distinct partner on the other side."""
    arr = _as_cost_matrix(c)
    rows, cols = arr.shape
    n = max(rows, cols)
    # zero-cost dummies: exactly n - min(rows, cols) of them are always used
    a = [[0.0] * n for _ in range(n)]
    for i in range(rows):
        a[i][:cols] = arr[i].tolist()

    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match_col = [0] * (n + 1)  # match_col[j] = row (1-based) assigned to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1

    pairs = []
    for j in range(1, n + 1):
        r, col = match_col[j] - 1, j - 1
        if r < rows and col < cols:
            pairs.append((r, col))
    return _assignment(arr, pairs)


def brute_force_lsap(c) -> Assignment:
    arr = _as_cost_matrix(c)
    rows, cols = arr.shape
    if min(rows, cols) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force limited to min dimension {BRUTE_FORCE_LIMIT}")
    best = None
    if rows <= cols:
        candidates = (tuple(enumerate(p)) for p in itertools.permutations(range(cols), rows))
    else:
        candidates = (
            tuple((r, j) for j, r in enumerate(p))
            for p in itertools.permutations(range(rows), cols)
        )
    for pairs in candidates:
        cand = _assignment(arr, pairs)
        if best is None or cand.total_cost < best.total_cost:
            best = cand
    return best
