"""Small dense linear-algebra helpers shared across modules."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def pivoted_rank(matrix: np.ndarray, tol: float = 1e-9) -> int:
    """Numerical rank via Gaussian elimination with partial pivoting.

    A pivot whose magnitude is at most ``tol`` counts as zero, so nearly
    dependent rows do not inflate the rank.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2:
        raise ValueError("pivoted_rank expects a 2-D matrix")
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(a[rank:, col])))
        if abs(a[pivot, col]) <= tol:
            continue
        if pivot != rank:
            a[[rank, pivot]] = a[[pivot, rank]]
        a[rank] = a[rank] / a[rank, col]
        for r in range(rank + 1, rows):
            if a[r, col] != 0.0:
                a[r] = a[r] - a[r, col] * a[rank]
        rank += 1
    return rank


def greedy_independent_rows(
    rows: Iterable[Sequence[float]], target: int, tol: float = 1e-9
) -> list[int]:
    """Scan rows in order, keeping each row that increases the span's rank.

    Returns the indices of the kept rows, stopping once ``target`` rows are
    found.  Duplicate rows are skipped cheaply before the rank test, so the
    scan stays fast on large populations with few distinct rows.
    """
    kept: list[int] = []
    basis: list[np.ndarray] = []
    seen: set[bytes] = set()
    for index, row in enumerate(rows):
        vec = np.asarray(row, dtype=float)
        key = vec.tobytes()
        if key in seen:
            continue
        seen.add(key)
        residual = vec.copy()
        for b in basis:
            residual -= np.dot(residual, b) * b
        norm = float(np.linalg.norm(residual))
        if norm > tol:
            basis.append(residual / norm)
            kept.append(index)
            if len(kept) == target:
                break
    return kept
