"""Greedy forward selection of a Markov boundary with CODEC (FOCI).

Starting from the empty set, each step scores every remaining candidate by
``T_n(y, x_i | x_S)`` and admits the best one if its score is strictly
positive; otherwise selection stops.  The first step has nothing to
condition on and uses the unconditional coefficient.

Step ``t`` draws its neighbour tie-breaks from seed ``(seed, t)``, so every
trajectory value equals ``codec(y, x_i, x_S, seed=(seed, t))``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .codec import DegenerateResponseError, DegenerateStatisticError, RankStats, _seed_tuple
from .dataset import ColumnSelection, Dataset, DatasetError
from .neighbors import nearest_neighbors


@dataclass(frozen=True)
class Step:
    step: int
    chosen: int
    value: float


@dataclass(frozen=True)
class MarkovBoundaryEstimate:
    target: int
    selected: tuple
    trajectory: tuple = field(default=())
    # score of the best remaining candidate when selection stopped (None if exhausted/capped)
    stop_value: Optional[float] = None

    def as_set(self) -> frozenset:
        return frozenset(self.selected)


def foci_select(
    d: Dataset,
    sel: ColumnSelection,
    seed=0,
    max_size: Optional[int] = None,
    jobs: int = 1,
) -> MarkovBoundaryEstimate:
    sel.validate(d)
    if not sel.predictors:
        raise DatasetError("no candidate predictors")
    if max_size is not None and max_size < 0:
        raise ValueError("max_size must be non-negative")
    y = d.values[:, sel.target]
    stats = RankStats(y)
    if stats.spread_sum == 0:
        raise DegenerateResponseError(f"degenerate response: column {d.names[sel.target]!r} is constant")
    seed = _seed_tuple(seed)
    values = d.values
    selected: list = []
    trajectory: list = []
    remaining = list(sel.predictors)
    stop_value = None
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        while remaining and (max_size is None or len(selected) < max_size):
            t = len(selected)
            step_seed = seed + (t,)
            if selected:
                xs = values[:, selected]
                n_nn = nearest_neighbors(xs, step_seed + (0,)).nn
            else:
                xs = None
                n_nn = None

            def score(i):
                pts = values[:, [i]] if xs is None else np.hstack([xs, values[:, [i]]])
                m_nn = nearest_neighbors(pts, step_seed + (1,)).nn
                if n_nn is None:
                    return stats.unconditional(m_nn).t
                return stats.conditional(m_nn, n_nn, len(selected)).t

            try:
                scores = list(pool.map(score, remaining)) if pool else [score(i) for i in remaining]
            except DegenerateStatisticError:
                # the selected set already pins down every response rank
                break
            best = max(scores)
            if best <= 0:
                stop_value = best
                break
            # ties go to the smallest column index
            chosen = min(i for i, s in zip(remaining, scores) if s == best)
            selected.append(chosen)
            trajectory.append(Step(t, chosen, best))
            remaining.remove(chosen)
    finally:
        if pool is not None:
            pool.shutdown()
    return MarkovBoundaryEstimate(sel.target, tuple(selected), tuple(trajectory), stop_value)
