"""Scoring of parent-set estimates and the seeded multi-run benchmark driver.

Scoring rules for one run against the true parent set ``P``:

* An estimate is *non-unique* when the verdict is undetectable, or when the
  verdict is singletons with two or more non-empty sets.  Its Jaccard index
  is 0 and false/missing counts are taken against the union of the returned
  non-empty sets (empty for undetectable).
* Otherwise the single non-empty set ``S`` (or the empty set) is scored:
  ``jaccard(S, P)``, ``|S - P|`` false and ``|P - S|`` missing.  Exact
  recovery means ``S == P`` for a unique-interpretation run.

Run ``r`` at sample size ``n`` samples with seeds derived from
``SeedSequence(base_seed, spawn_key=(n, r))``, so adding grid points or runs
never changes existing ones.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .codec import codec_unconditional
from .dag_foci import SINGLETONS, UNDETECTABLE, ParentalSets, dag_foci
from .indep_test import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS
from .sem import DagSpec, codec_violation, ground_truth, sample

SCHEMA_VERSION = 1
DEFAULT_ALPHA_GRID = tuple(round(0.1 * k, 1) for k in range(11))


def jaccard(a, b) -> float:
    a, b = frozenset(a), frozenset(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


@dataclass(frozen=True)
class RunScore:
    jaccard: float
    false_count: int
    missing_count: int
    non_unique: bool
    exact: bool
    estimate: frozenset


def score_run(result: ParentalSets, truth) -> RunScore:
    truth = frozenset(truth)
    nonempty = [s for s in result.sets if s]
    non_unique = result.verdict == UNDETECTABLE or (result.verdict == SINGLETONS and len(nonempty) >= 2)
    est = frozenset().union(*nonempty) if nonempty else frozenset()
    false_count = len(est - truth)
    missing = len(truth - est)
    if non_unique:
        return RunScore(0.0, false_count, missing, True, False, est)
    return RunScore(jaccard(est, truth), false_count, missing, False, est == truth, est)


@dataclass(frozen=True)
class RunRecord:
    n: int
    run: int
    sample_seed: int
    result: Optional[ParentalSets]
    score: Optional[RunScore]
    error: Optional[str] = None


@dataclass(frozen=True)
class RunSummary:
    n: int
    runs: int
    exact_recovery_count: int
    non_unique_count: int
    false_positive_runs: int
    failed_runs: int
    mean_false: float
    mean_missing: float
    mean_jaccard: float
    per_run: Tuple[RunRecord, ...] = field(default=(), repr=False)


def run_seeds(base_seed: int, n: int, r: int) -> Tuple[int, tuple]:
    """(sample seed, algorithm seed) for run ``r`` at size ``n``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(n), int(r)))
    state = ss.generate_state(2, dtype=np.uint32)
    return int(state[0]), (int(state[1]),)


def _one_run(args) -> RunRecord:
    spec, target_idx, truth, n, r, base_seed, n_perms, alpha = args
    sample_seed, algo_seed = run_seeds(base_seed, n, r)
    try:
        d = sample(spec, n, seed=sample_seed)
        res = dag_foci(d, target_idx, n_perms=n_perms, alpha=alpha, seed=algo_seed)
    except Exception as exc:  # recorded, not fatal
        return RunRecord(n, r, sample_seed, None, None, f"{type(exc).__name__}: {exc}")
    return RunRecord(n, r, sample_seed, res, score_run(res, truth))


def summarize(n: int, records: Sequence[RunRecord]) -> RunSummary:
    ok = [rec.score for rec in records if rec.score is not None]
    k = len(ok)

    def mean(vals):
        return float(np.mean(vals)) if k else float("nan")

    return RunSummary(
        n=n,
        runs=len(records),
        exact_recovery_count=sum(s.exact for s in ok),
        non_unique_count=sum(s.non_unique for s in ok),
        false_positive_runs=sum(s.false_count > 0 for s in ok),
        failed_runs=len(records) - k,
        mean_false=mean([s.false_count for s in ok]),
        mean_missing=mean([s.missing_count for s in ok]),
        mean_jaccard=mean([s.jaccard for s in ok]),
        per_run=tuple(records),
    )


def benchmark(
    spec: DagSpec,
    target: str,
    n_grid: Sequence[int],
    runs: int,
    base_seed: int = 0,
    n_perms: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    jobs: int = 1,
) -> Dict[int, RunSummary]:
    if target not in spec.nodes:
        raise ValueError(f"unknown column {target!r}")
    if int(runs) < 1:
        raise ValueError("runs must be at least 1")
    t = spec.nodes.index(target)
    truth = ground_truth(spec).parents[t]
    tasks = [(spec, t, truth, int(n), r, base_seed, n_perms, alpha) for n in n_grid for r in range(int(runs))]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_one_run, tasks))
    else:
        records = [_one_run(a) for a in tasks]
    out = {}
    for n in n_grid:
        out[int(n)] = summarize(int(n), [rec for rec in records if rec.n == int(n)])
    return out


def codec_gap_sweep(alphas: Sequence[float] = DEFAULT_ALPHA_GRID, n: int = 10_000, seed: int = 0) -> List[tuple]:
    """Rows ``(alpha, T_n(Y, X3), max(T_n(Y, X1), T_n(Y, X2)))``."""
    rows = []
    for a in alphas:
        d = sample(codec_violation(a), n, seed=seed)
        y = d.column("Y")
        t3 = codec_unconditional(y, d.column("X3"), seed=seed).t
        t12 = max(codec_unconditional(y, d.column(c), seed=seed).t for c in ("X1", "X2"))
        rows.append((float(a), t3, t12))
    return rows


# Serialization -------------------------------------------------------------

def _sets(sets, names):
    return [[names[i] for i in sorted(s)] for s in sets]


def summary_document(
    summaries: Dict[int, RunSummary], spec: DagSpec, target: str, base_seed: int, n_perms: int, alpha: float
) -> dict:
    """One record per (n, run) plus an aggregate block per n."""
    names = spec.nodes
    truth = ground_truth(spec).parents[names.index(target)]
    records = []
    aggregate = []
    for n, s in sorted(summaries.items()):
        for rec in s.per_run:
            row = {"n": rec.n, "run": rec.run, "sample_seed": rec.sample_seed, "error": rec.error}
            if rec.score is not None:
                row.update(
                    verdict=rec.result.verdict,
                    parent_sets=_sets(rec.result.sets, names),
                    jaccard=rec.score.jaccard,
                    false=rec.score.false_count,
                    missing=rec.score.missing_count,
                    non_unique=rec.score.non_unique,
                    exact=rec.score.exact,
                )
            records.append(row)
        aggregate.append(
            {
                "n": n,
                "runs": s.runs,
                "exact_recovery": s.exact_recovery_count,
                "non_unique": s.non_unique_count,
                "false_positive_runs": s.false_positive_runs,
                "failed_runs": s.failed_runs,
                "mean_false": s.mean_false,
                "mean_missing": s.mean_missing,
                "mean_jaccard": s.mean_jaccard,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "target": target,
        "true_parents": [names[i] for i in sorted(truth)],
        "seed": base_seed,
        "n_perms": n_perms,
        "alpha": alpha,
        "records": records,
        "aggregate": aggregate,
    }


def plot_table(summaries: Dict[int, RunSummary]) -> str:
    """Tab-separated table with ``n`` on the x axis."""
    lines = ["n\texact_recovery\tnon_unique\tmean_false\tmean_missing\tmean_jaccard"]
    for n, s in sorted(summaries.items()):
        lines.append(
            f"{n}\t{s.exact_recovery_count}\t{s.non_unique_count}\t{s.mean_false:.4f}\t{s.mean_missing:.4f}\t{s.mean_jaccard:.4f}"
        )
    return "\n".join(lines) + "\n"


def sweep_table(rows) -> str:
    lines = ["alpha\tT_Y_X3\tmax_T_Y_X1_X2"]
    lines += [f"{a:g}\t{t3:.6f}\t{t12:.6f}" for a, t3, t12 in rows]
    return "\n".join(lines) + "\n"


def sweep_document(rows, n: int, seed: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "codec_gap_sweep",
        "seed": seed,
        "n": n,
        "grid_note": "alpha grid chosen by this tool",
        "rows": [{"alpha": a, "t_y_x3": t3, "max_t_y_x1_x2": t12} for a, t3, t12 in rows],
    }


def write_json(doc: dict, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
