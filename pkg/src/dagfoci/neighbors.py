"""Exact Euclidean nearest neighbours with seeded uniform tie-breaking.

Every row gets one neighbour among the rows at the minimal squared distance
(self excluded).  The candidates are sorted by row index and row ``j`` takes
``candidates[key[j] % len(candidates)]`` where ``key`` is a vector of
non-negative 63-bit integers drawn from ``numpy.random.default_rng(seed)``.
Because the rule only depends on the candidate *set*, any exact search
(k-d tree, linear scan, compiled or not) yields the same answer for the
same seed.

Identical rows are collapsed before searching so heavily tied (discrete)
data costs no more than continuous data.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

SeedLike = Union[int, Sequence[int]]

# above this dimension the k-d tree degrades; use the exact linear scan
KDTREE_MAX_DIM = 10


def _select_backend():
    if os.environ.get("DAGFOCI_PURE", "") == "1" or _compiled is None:
        return _fallback
    return _compiled


_backend = _select_backend()


def backend_name() -> str:
    """``"compiled"`` or ``"python"``."""
    return "compiled" if _backend is _compiled else "python"


def use_backend(name: str) -> None:
    """Switch kernels at runtime (``"compiled"`` or ``"python"``)."""
    global _backend
    if name == "python":
        _backend = _fallback
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; rebuild the package")
        _backend = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class NeighborIndex:
    nn: np.ndarray
    metric: str = "euclidean"
    tie_rule: str = "uniform-seeded"


def tie_keys(n: int, seed: SeedLike) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, np.iinfo(np.int64).max, size=n, dtype=np.int64)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError("points must be a vector or an n x d matrix")
    if pts.shape[0] < 2:
        raise ValueError(f"need at least 2 points, got {pts.shape[0]}")
    if pts.shape[1] < 1:
        raise ValueError("points need at least one coordinate")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite values")
    return np.ascontiguousarray(pts)


def _group_rows(pts):
    """Collapse identical rows.

    Returns ``(unique, group, members, gstart, rank_in_group)`` or ``None``
    when every row is distinct.
    """
    n = pts.shape[0]
    first = np.argsort(pts[:, 0], kind="stable")
    col = pts[first, 0]
    if not np.any(col[1:] == col[:-1]):
        return None
    order = np.lexsort(pts.T[::-1])  # stable: equal rows stay in index order
    srt = pts[order]
    boundary = np.empty(n, dtype=bool)
    boundary[0] = True
    np.any(srt[1:] != srt[:-1], axis=1, out=boundary[1:])
    if boundary.all():
        return None
    gid_sorted = np.cumsum(boundary) - 1
    group = np.empty(n, dtype=np.intp)
    group[order] = gid_sorted
    starts = np.flatnonzero(boundary)
    gstart = np.append(starts, n).astype(np.intp)
    rank_in_group = np.empty(n, dtype=np.intp)
    rank_in_group[order] = np.arange(n) - starts[gid_sorted]
    unique = np.ascontiguousarray(srt[starts])
    return unique, group, order.astype(np.intp), gstart, rank_in_group


def nearest_neighbors(points, seed: SeedLike = 0) -> NeighborIndex:
    """Nearest other row of every row of ``points`` (n x d, or a vector)."""
    pts = _as_points(points)
    n, d = pts.shape
    keys = tie_keys(n, seed)
    search = _backend.kdtree_nearest if d <= KDTREE_MAX_DIM else _backend.scan_nearest
    grouped = _group_rows(pts)
    if grouped is None:
        unique = pts
        group = np.arange(n, dtype=np.intp)
        members = group
        gstart = np.arange(n + 1, dtype=np.intp)
        rank_in_group = np.zeros(n, dtype=np.intp)
    else:
        unique, group, members, gstart, rank_in_group = grouped
    if unique.shape[0] == 1:
        best = np.array([np.inf])
        offsets = np.zeros(2, dtype=np.intp)
        ties = np.zeros(0, dtype=np.intp)
    else:
        best, offsets, ties = search(unique)
    nn = _backend.resolve_ties(keys, group, members, gstart, rank_in_group, best, offsets, ties)
    return NeighborIndex(nn=np.asarray(nn, dtype=np.intp))
