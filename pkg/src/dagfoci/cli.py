"""``dagfoci`` command line.

Every subcommand prints a text report whose first line carries the seed and
schema version, and writes a JSON document with the same content to
``--out`` when given.  Option defaults can be overridden through environment
variables ``DAGFOCI_<SUBCOMMAND>_<OPTION>``, e.g. ``DAGFOCI_DAGFOCI_ALPHA``.

Exit status is 0 whenever the pipeline ran to completion, including the
"undetectable" verdict, and 1 on any input or runtime error.
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import click

from . import evaluation as ev
from .codec import DegenerateStatisticError, codec
from .dag_foci import SINGLETONS, UNDETECTABLE, UNDETECTABLE_MESSAGE, ParentalSets, dag_foci, parental_sets_dict
from .dataset import ColumnSelection, Dataset, DatasetError, filter_environment, load_csv, write_csv
from .equations import ExprError
from .foci import foci_select
from .interventional import ASSUMPTIONS, dag_foci_interventional, interventional_dict
from .sem import SpecError, builtin, do_intervene, load_spec, sample

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.05
    n_perms: int = 100
    seed: int = 0
    max_boundary: Optional[int] = None
    jobs: int = 1
    metric: str = "euclidean"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise click.BadParameter("alpha must lie strictly between 0 and 1", param_hint="--alpha")
        if self.n_perms < 1:
            raise click.BadParameter("must be at least 1", param_hint="--n-perms")
        if self.max_boundary is not None and self.max_boundary < 0:
            raise click.BadParameter("must be non-negative", param_hint="--max-boundary")
        if self.jobs < 1:
            raise click.BadParameter("must be at least 1", param_hint="--jobs")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_perms": self.n_perms,
            "seed": self.seed,
            "max_boundary": self.max_boundary,
            "metric": self.metric,
        }


def _default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _seed_option(f):
    return click.option("--seed", type=int, default=0, show_default=True, help="Master random seed.")(f)


def _common(f):
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write a JSON report here.")(f)
    f = click.option("--jobs", type=int, default=_default_jobs, help="Worker count (results do not depend on it).")(f)
    f = _seed_option(f)
    return f


def _algo(f):
    f = click.option("--max-boundary", type=int, default=None, help="Cap on every boundary size.")(f)
    f = click.option("--n-perms", type=int, default=100, show_default=True, help="Permutations per test.")(f)
    f = click.option("--alpha", type=float, default=0.05, show_default=True, help="Test level.")(f)
    return f


def _header(cmd: str, seed: int) -> str:
    return f"# dagfoci {cmd}  seed={seed}  schema_version={SCHEMA_VERSION}"


def _emit(lines, doc: dict, out: Optional[str]) -> None:
    click.echo("\n".join(lines))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def _doc(cmd: str, seed: int, **body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": cmd, "seed": seed, **body}


def _fmt(names, s) -> str:
    return "{" + ",".join(names[i] for i in sorted(s)) + "}"


def _load(path: str, env_column: Optional[str] = None) -> Dataset:
    return load_csv(path, env_column=env_column)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DatasetError, SpecError, ExprError, DegenerateStatisticError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc


@click.group(cls=_Group, context_settings={"auto_envvar_prefix": "DAGFOCI", "help_option_names": ["-h", "--help"]})
def main():
    """Local causal parent discovery with CODEC, FOCI and DAG-FOCI."""


@main.command("codec")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, help="Response column.")
@click.option("--z", "z", multiple=True, required=True, help="Predictor column (repeatable).")
@click.option("--given", multiple=True, help="Conditioning column (repeatable).")
@_common
def cmd_codec(data, target, z, given, seed, jobs, out):
    """Print the CODEC statistic T_n(target, z | given)."""
    d = _load(data)
    y = d.column(d.index(target))
    zz = d.columns([d.index(c) for c in z])
    xx = d.columns([d.index(c) for c in given]) if given else None
    val = codec(y, zz, xx, seed=seed)
    desc = f"T_n({target}, {','.join(z)}" + (f" | {','.join(given)})" if given else ")")
    lines = [
        _header("codec", seed),
        f"{desc} = {val.t:.6f}",
        f"numerator = {val.numerator:.6g}  denominator = {val.denominator:.6g}  n = {val.n_used}  conditioning_size = {val.conditioning_size}",
    ]
    doc = _doc(
        "codec", seed, target=target, z=list(z), given=list(given),
        t=val.t, numerator=val.numerator, denominator=val.denominator,
        n_used=val.n_used, conditioning_size=val.conditioning_size,
    )
    _emit(lines, doc, out)


@main.command("foci")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True)
@click.option("--max-boundary", type=int, default=None)
@_common
def cmd_foci(data, target, max_boundary, seed, jobs, out):
    """Greedy Markov-boundary selection for TARGET."""
    cfg = RunConfig(seed=seed, max_boundary=max_boundary, jobs=jobs)
    d = _load(data)
    t = d.index(target)
    est = foci_select(d, ColumnSelection.all_others(d, t), seed=seed, max_size=max_boundary, jobs=jobs)
    names = d.names
    lines = [_header("foci", seed), f"boundary: {_fmt(names, est.selected)}", "step\tchosen\tT_n"]
    lines += [f"{s.step}\t{names[s.chosen]}\t{s.value:.6f}" for s in est.trajectory]
    if est.stop_value is not None:
        lines.append(f"stopped: best remaining T_n = {est.stop_value:.6f}")
    doc = _doc(
        "foci", seed, config=cfg.to_dict(), target=target,
        selected=[names[i] for i in est.selected],
        trajectory=[{"step": s.step, "chosen": names[s.chosen], "value": s.value} for s in est.trajectory],
        stop_value=est.stop_value,
    )
    _emit(lines, doc, out)


def _parental_lines(p: ParentalSets, names) -> list:
    lines = []
    if p.verdict == UNDETECTABLE:
        lines.append(f"verdict: {UNDETECTABLE_MESSAGE}")
    elif p.verdict == SINGLETONS:
        lines.append("verdict: singletons (non-identifiable locally)")
        lines.append("parent candidates: " + " ".join(_fmt(names, s) for s in p.sets))
    else:
        lines.append("verdict: unique")
        lines.append(f"parents: {_fmt(names, p.sets[0])}")
    if p.layers is not None:
        lines.append(f"boundary: {_fmt(names, p.layers.boundary.selected)}")
        for j, e in sorted(p.layers.second.items()):
            lines.append(f"  boundary({names[j]}): {_fmt(names, e.selected)}")
    if p.graph is not None:
        lines.append("cluster components: " + " ".join(_fmt(names, c) for c in p.graph.components))
    for (i, j), r in sorted(p.tests.items()):
        flag = "reject" if r.reject else "keep"
        lines.append(f"  test {names[i]} ~ {names[j]}: T_n = {r.statistic:.4f}  p = {r.p_value:.4f}  {flag}")
    return lines


@main.command("dagfoci")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True)
@_algo
@_common
def cmd_dagfoci(data, target, alpha, n_perms, max_boundary, seed, jobs, out):
    """Estimate the parent sets of TARGET."""
    cfg = RunConfig(alpha=alpha, n_perms=n_perms, seed=seed, max_boundary=max_boundary, jobs=jobs)
    d = _load(data)
    res = dag_foci(d, d.index(target), n_perms=n_perms, alpha=alpha, seed=seed, jobs=jobs, max_size=max_boundary)
    lines = [_header("dagfoci", seed)] + _parental_lines(res, d.names)
    doc = _doc("dagfoci", seed, config=cfg.to_dict(), target=target, result=parental_sets_dict(res, d.names))
    _emit(lines, doc, out)


@main.command("intervene")
@click.argument("obs_data", type=click.Path(exists=True, dir_okay=False))
@click.argument("int_data", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--target", required=True)
@click.option("--env-column", default="env", show_default=True, help="Environment tag column for single-file input.")
@click.option("--obs-env", default=None, help="Observational environment tag.")
@click.option("--int-env", default=None, help="Environment with a do-intervention on the target.")
@_algo
@_common
def cmd_intervene(obs_data, int_data, target, env_column, obs_env, int_env, alpha, n_perms, max_boundary, seed, jobs, out):
    """Refine parent sets with data from a do-intervention on TARGET."""
    cfg = RunConfig(alpha=alpha, n_perms=n_perms, seed=seed, max_boundary=max_boundary, jobs=jobs)
    if int_data is not None:
        if obs_env or int_env:
            raise click.UsageError("give either two data files or --obs-env/--int-env, not both")
        obs, intv = _load(obs_data), _load(int_data)
    else:
        if not (obs_env and int_env):
            raise click.UsageError("single-file input needs --obs-env and --int-env")
        both = _load(obs_data, env_column=env_column)
        obs, intv = filter_environment(both, obs_env), filter_environment(both, int_env)
    if obs.names != intv.names:
        raise DatasetError(f"schema mismatch: {list(obs.names)} vs {list(intv.names)}")
    res = dag_foci_interventional(
        obs, intv, obs.index(target), n_perms=n_perms, alpha=alpha, seed=seed, jobs=jobs, max_size=max_boundary
    )
    names = obs.names
    lines = [_header("intervene", seed)]
    if res.verdict == UNDETECTABLE:
        lines.append(f"verdict: {UNDETECTABLE_MESSAGE}")
    lines.append("refined parents: " + (" ".join(_fmt(names, s) for s in res.refined_parents) or "(none)"))
    lines.append(f"children: {_fmt(names, res.children)}")
    lines.append(f"interventional boundary: {_fmt(names, res.interventional_boundary.selected)}")
    lines.append("observational run:")
    lines += ["  " + s for s in _parental_lines(res.observational, names)]
    lines += [f"assumption: {a}" for a in ASSUMPTIONS]
    doc = _doc("intervene", seed, config=cfg.to_dict(), target=target, result=interventional_dict(res, names))
    _emit(lines, doc, out)


def _resolve_spec(builtin_name, spec_path):
    if bool(builtin_name) == bool(spec_path):
        raise click.UsageError("give exactly one of --builtin or --spec")
    return builtin(builtin_name) if builtin_name else load_spec(spec_path)


@main.command("simulate")
@click.option("--builtin", "builtin_name", default=None, help="example1, example2, chain or codec_violation:ALPHA.")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON DAG spec.")
@click.option("--do", "do_nodes", multiple=True, help="Node to replace by an exogenous standard normal (repeatable).")
@click.option("--n", "n", type=int, default=1000, show_default=True)
@_seed_option
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default: standard output).")
def cmd_simulate(builtin_name, spec_path, do_nodes, n, seed, out):
    """Sample a dataset from a structural equation model."""
    spec = _resolve_spec(builtin_name, spec_path)
    for v in do_nodes:
        spec = do_intervene(spec, v)
    d = sample(spec, n, seed=seed)
    if out:
        write_csv(d, out)
        click.echo(f"{_header('simulate', seed)}\nwrote {d.n} rows x {d.m} columns to {out}")
    else:
        write_csv(d, click.get_text_stream("stdout"))


@main.command("benchmark")
@click.option("--builtin", "builtin_name", default=None)
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--target", default=None)
@click.option("--n", "n_grid", type=int, multiple=True, help="Sample size (repeatable).")
@click.option("--runs", type=int, default=100, show_default=True)
@click.option("--sweep", type=click.Choice(["codec-gap"]), default=None, help="Run the CODEC gap sweep instead.")
@click.option("--alphas", default=None, help="Comma-separated noise levels for the sweep (default 0,0.1,...,1).")
@click.option("--table", type=click.Path(dir_okay=False), default=None, help="Write the plot-data table here.")
@_algo
@_common
def cmd_benchmark(builtin_name, spec_path, target, n_grid, runs, sweep, alphas, table, alpha, n_perms, max_boundary, seed, jobs, out):
    """Seeded multi-run recovery study, or the CODEC gap sweep."""
    if sweep == "codec-gap":
        grid = ev.DEFAULT_ALPHA_GRID if alphas is None else tuple(float(a) for a in alphas.split(","))
        n = n_grid[0] if n_grid else 10_000
        rows = ev.codec_gap_sweep(grid, n=n, seed=seed)
        text = ev.sweep_table(rows)
        lines = [_header("benchmark --sweep codec-gap", seed), f"n = {n}", text.rstrip("\n")]
        if table:
            with open(table, "w", encoding="utf-8") as fh:
                fh.write(text)
        _emit(lines, ev.sweep_document(rows, n, seed), out)
        return
    if runs < 1:
        raise click.BadParameter("must be at least 1", param_hint="--runs")
    cfg = RunConfig(alpha=alpha, n_perms=n_perms, seed=seed, max_boundary=max_boundary, jobs=jobs)
    spec = _resolve_spec(builtin_name, spec_path)
    if target is None:
        raise click.UsageError("--target is required")
    if not n_grid:
        raise click.UsageError("give at least one --n")
    summaries = ev.benchmark(spec, target, list(n_grid), runs, base_seed=seed, n_perms=n_perms, alpha=alpha, jobs=jobs)
    text = ev.plot_table(summaries)
    lines = [_header("benchmark", seed), f"target = {target}", text.rstrip("\n")]
    failed = sum(s.failed_runs for s in summaries.values())
    if failed:
        lines.append(f"failed runs: {failed} (see JSON records)")
    if table:
        with open(table, "w", encoding="utf-8") as fh:
            fh.write(text)
    doc = ev.summary_document(summaries, spec, target, seed, n_perms, alpha)
    doc["config"] = cfg.to_dict()
    _emit(lines, doc, out)


if __name__ == "__main__":
    sys.exit(main())
