"""Orient candidate parent sets with data from a do-intervention on the target.

A do-intervention on ``Y`` cuts ``Y`` off from its parents but leaves its
children (and their other parents) attached, so the interventional boundary
of ``Y`` contains no parent.  Each observational candidate set ``S`` that
misses that boundary stays a parent candidate; otherwise ``S`` intersected
with the boundary is reported as children.

The interventional data must come from an environment where the target was
intervened on and none of its children were.  Neither can be checked from
the data, so both are recorded as assumptions in the result.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .codec import _seed_tuple
from .dag_foci import UNDETECTABLE, ParentalSets, dag_foci, parental_sets_dict, _estimate_dict, _named
from .dataset import ColumnSelection, Dataset, DatasetError
from .foci import MarkovBoundaryEstimate, foci_select
from .indep_test import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS

ASSUMPTIONS = (
    "interventional environment carries a do-intervention on the target",
    "no do-intervention on any child of the target",
)


@dataclass(frozen=True)
class InterventionalResult:
    refined_parents: Tuple[frozenset, ...]
    children: frozenset
    interventional_boundary: MarkovBoundaryEstimate
    observational: ParentalSets
    assumptions: Tuple[str, ...] = ASSUMPTIONS

    @property
    def verdict(self) -> str:
        return self.observational.verdict


def refine(observational: ParentalSets, intv_boundary: MarkovBoundaryEstimate) -> InterventionalResult:
    """Apply the orientation rule to every candidate set of ``observational``."""
    mb = intv_boundary.as_set()
    parents = []
    children = set()
    if observational.verdict != UNDETECTABLE:
        for s in observational.sets:
            hit = s & mb
            if hit:
                children |= hit
            elif s not in parents:
                parents.append(s)
    return InterventionalResult(tuple(parents), frozenset(children), intv_boundary, observational)


def dag_foci_interventional(
    obs: Dataset,
    intv: Dataset,
    target: int,
    n_perms: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed=0,
    jobs: int = 1,
    max_size=None,
) -> InterventionalResult:
    if obs.names != intv.names:
        raise DatasetError(f"schema mismatch: {list(obs.names)} vs {list(intv.names)}")
    seed = _seed_tuple(seed)
    observational = dag_foci(obs, target, n_perms=n_perms, alpha=alpha, seed=seed + (0,), jobs=jobs, max_size=max_size)
    boundary = foci_select(intv, ColumnSelection.all_others(intv, target), seed=seed + (1,), jobs=jobs, max_size=max_size)
    return refine(observational, boundary)


def interventional_dict(res: InterventionalResult, names) -> dict:
    return {
        "verdict": res.verdict,
        "refined_parents": [_named(s, names) for s in res.refined_parents],
        "children": _named(res.children, names),
        "interventional_boundary": _estimate_dict(res.interventional_boundary, names),
        "observational": parental_sets_dict(res.observational, names),
        "assumptions": list(res.assumptions),
    }
