"""Local parent discovery from Markov boundaries and marginal tests (DAG-FOCI).

Three stages:

1. FOCI estimates the boundary of the target ``Y`` and then, for every
   selected ``X_j``, the boundary of ``X_j`` over all other columns
   (``Y`` included).
2. Selected columns ``i`` and ``j`` are joined when each lies in the other's
   boundary.  A connected component becomes a candidate parent set when no
   pair inside it rejects marginal independence; singleton components always
   qualify, and the empty set is always a candidate.
3. One candidate with more than one member is reported as the parent set.
   If every candidate has at most one member, all candidates are reported.
   Otherwise the parents are declared undetectable.

Seeds: the first layer uses ``(seed, 0, target)``, the second layer
``(seed, 1, j)`` and the test of pair ``(i, j)`` uses ``(seed, 2, i, j)``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .codec import _seed_tuple
from .dataset import ColumnSelection, Dataset
from .foci import MarkovBoundaryEstimate, foci_select
from .indep_test import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS, PermutationTestResult, permutation_independence_test

UNIQUE = "unique"
SINGLETONS = "singletons"
UNDETECTABLE = "undetectable"
UNDETECTABLE_MESSAGE = "DAG-FOCI is not able to detect the parents"


class LayerError(ValueError):
    """Second-layer estimates do not match the first-layer selection."""


@dataclass(frozen=True)
class Layers:
    target: int
    boundary: MarkovBoundaryEstimate
    second: Dict[int, MarkovBoundaryEstimate]


@dataclass(frozen=True)
class ClusterGraph:
    vertices: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    components: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class CandidateCollection:
    sets: Tuple[frozenset, ...]
    tests: Dict[Tuple[int, int], PermutationTestResult] = field(default_factory=dict)
    # components that failed a pairwise test, kept for auditing
    rejected: Tuple[frozenset, ...] = ()


@dataclass(frozen=True)
class ParentalSets:
    verdict: str
    sets: Tuple[frozenset, ...]
    candidates: Optional[CandidateCollection] = None
    layers: Optional[Layers] = None
    graph: Optional[ClusterGraph] = None

    @property
    def message(self) -> Optional[str]:
        return UNDETECTABLE_MESSAGE if self.verdict == UNDETECTABLE else None

    @property
    def tests(self) -> Dict[Tuple[int, int], PermutationTestResult]:
        return {} if self.candidates is None else self.candidates.tests


def _select(d: Dataset, target: int, seed, max_size) -> MarkovBoundaryEstimate:
    sel = ColumnSelection.all_others(d, target)
    return foci_select(d, sel, seed=seed, max_size=max_size)


def stage_one(d: Dataset, target: int, seed=0, jobs: int = 1, max_size: Optional[int] = None) -> Layers:
    seed = _seed_tuple(seed)
    ColumnSelection.all_others(d, target).validate(d)
    first = _select(d, target, seed + (0, target), max_size)
    members = list(first.selected)

    def second(j):
        return _select(d, j, seed + (1, j), max_size)

    if jobs > 1 and len(members) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            found = list(pool.map(second, members))
    else:
        found = [second(j) for j in members]
    return Layers(target, first, dict(zip(members, found)))


def build_cluster_graph(layers: Layers) -> ClusterGraph:
    vertices = tuple(sorted(layers.boundary.selected))
    if set(layers.second) != set(vertices):
        raise LayerError(
            f"inconsistent layers: boundary {sorted(vertices)} but second layer keyed by {sorted(layers.second)}"
        )
    edges = []
    for a, i in enumerate(vertices):
        for j in vertices[a + 1:]:
            if i in layers.second[j].as_set() and j in layers.second[i].as_set():
                edges.append((i, j))
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: Dict[int, List[int]] = {}
    for v in vertices:
        groups.setdefault(find(v), []).append(v)
    components = tuple(tuple(g) for _, g in sorted(groups.items(), key=lambda kv: kv[1][0]))
    return ClusterGraph(vertices, tuple(edges), components)


def stage_two(
    g: ClusterGraph,
    d: Dataset,
    n_perms: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed=0,
    jobs: int = 1,
    tester: Optional[Callable] = None,
) -> CandidateCollection:
    """Admit every component whose pairs all pass the marginal test.

    ``tester(i, j)`` may replace the permutation test; it must return an
    object with a boolean ``reject`` attribute.
    """
    seed = _seed_tuple(seed)
    for v in g.vertices:
        if not 0 <= v < d.m:
            raise IndexError(f"vertex {v} outside dataset with {d.m} columns")
    pairs = [
        (comp[a], j)
        for comp in g.components
        if len(comp) > 1
        for a in range(len(comp))
        for j in comp[a + 1:]
    ]

    def run(pair):
        i, j = pair
        if tester is not None:
            return tester(i, j)
        return permutation_independence_test(
            d.values[:, i], d.values[:, j], n_perms=n_perms, alpha=alpha, seed=seed + (2, i, j)
        )

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    tests = dict(zip(pairs, results))
    sets = [frozenset()]
    rejected = []
    for comp in g.components:
        inner = [(comp[a], j) for a in range(len(comp)) for j in comp[a + 1:]]
        if any(tests[p].reject for p in inner):
            rejected.append(frozenset(comp))
        else:
            sets.append(frozenset(comp))
    return CandidateCollection(tuple(sets), tests, tuple(rejected))


def stage_three(c: CandidateCollection) -> ParentalSets:
    if frozenset() not in c.sets:
        raise ValueError("candidate collection must contain the empty set")
    multi = [s for s in c.sets if len(s) > 1]
    if len(multi) == 1:
        return ParentalSets(UNIQUE, (multi[0],), c)
    if not multi:
        return ParentalSets(SINGLETONS, tuple(c.sets), c)
    return ParentalSets(UNDETECTABLE, (), c)


def dag_foci(
    d: Dataset,
    target: int,
    n_perms: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed=0,
    jobs: int = 1,
    max_size: Optional[int] = None,
) -> ParentalSets:
    layers = stage_one(d, target, seed=seed, jobs=jobs, max_size=max_size)
    graph = build_cluster_graph(layers)
    cands = stage_two(graph, d, n_perms=n_perms, alpha=alpha, seed=seed, jobs=jobs)
    out = stage_three(cands)
    return ParentalSets(out.verdict, out.sets, cands, layers, graph)


def _estimate_dict(est: MarkovBoundaryEstimate, names) -> dict:
    return {
        "target": names[est.target],
        "selected": [names[i] for i in est.selected],
        "trajectory": [{"step": s.step, "chosen": names[s.chosen], "value": s.value} for s in est.trajectory],
        "stop_value": est.stop_value,
    }


def _named(s, names) -> list:
    return [names[i] for i in sorted(s)]


def parental_sets_dict(p: ParentalSets, names) -> dict:
    """JSON-ready report of a run with every intermediate estimate."""
    out = {
        "verdict": p.verdict,
        "message": p.message,
        "parent_sets": [_named(s, names) for s in p.sets],
    }
    if p.layers is not None:
        out["boundary"] = _estimate_dict(p.layers.boundary, names)
        out["second_layer"] = {names[j]: _estimate_dict(e, names) for j, e in sorted(p.layers.second.items())}
    if p.graph is not None:
        out["cluster_graph"] = {
            "edges": [[names[i], names[j]] for i, j in p.graph.edges],
            "components": [[names[i] for i in c] for c in p.graph.components],
        }
    if p.candidates is not None:
        out["candidates"] = [_named(s, names) for s in p.candidates.sets]
        out["rejected_components"] = [_named(s, names) for s in p.candidates.rejected]
        out["tests"] = [
            {
                "pair": [names[i], names[j]],
                "statistic": r.statistic,
                "p_value": r.p_value,
                "n_permutations": r.n_permutations,
                "alpha": r.alpha,
                "reject": r.reject,
            }
            for (i, j), r in sorted(p.candidates.tests.items())
        ]
    return out
