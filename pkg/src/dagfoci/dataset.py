"""Samples-by-variables data, CSV ingestion and environment slicing."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """An ``n x m`` real matrix with unique column names.

    ``environments`` optionally tags every row with an opaque label (for
    example the name of the intervention that produced it).
    """

    values: np.ndarray
    names: tuple
    environments: Optional[tuple] = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError("values must be a 2-D matrix")
        n, m = values.shape
        if n < 2 or m < 2:
            raise DatasetError(f"need at least 2 rows and 2 columns, got {n} x {m}")
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            r, c = bad[0]
            raise DatasetError(f"non-finite value at ({r}, {c})")
        names = tuple(str(s) for s in self.names)
        if len(names) != m:
            raise DatasetError(f"{len(names)} names for {m} columns")
        dup = _first_duplicate(names)
        if dup is not None:
            raise DatasetError(f"duplicate column name {dup!r}")
        envs = self.environments
        if envs is not None:
            envs = tuple(str(e) for e in envs)
            if len(envs) != n:
                raise DatasetError(f"{len(envs)} environment labels for {n} rows")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "environments", envs)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DatasetError(f"unknown column {name!r}") from None

    def column(self, key) -> np.ndarray:
        return self.values[:, self.index(key) if isinstance(key, str) else key]

    def columns(self, keys: Sequence) -> np.ndarray:
        idx = [self.index(k) if isinstance(k, str) else k for k in keys]
        return self.values[:, idx]

    def environment_tags(self) -> list:
        if self.environments is None:
            return []
        return sorted(set(self.environments))


@dataclass(frozen=True)
class ColumnSelection:
    target: int
    predictors: tuple

    def __post_init__(self):
        preds = tuple(int(p) for p in self.predictors)
        object.__setattr__(self, "predictors", preds)
        if self.target in preds:
            raise DatasetError("target cannot also be a predictor")
        if len(set(preds)) != len(preds):
            raise DatasetError("duplicate predictor")

    @classmethod
    def all_others(cls, d: Dataset, target: int) -> "ColumnSelection":
        return cls(target, tuple(j for j in range(d.m) if j != target))

    def validate(self, d: Dataset) -> None:
        for j in (self.target, *self.predictors):
            if not 0 <= j < d.m:
                raise DatasetError(f"column index {j} out of range for {d.m} columns")


def _first_duplicate(names):
    seen = set()
    for s in names:
        if s in seen:
            return s
        seen.add(s)
    return None


def load_csv(path, env_column: Optional[str] = None) -> Dataset:
    """Read a headed, comma-delimited file of numeric columns.

    ``env_column`` names a string column holding per-row environment tags;
    it is removed from the numeric matrix.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file (header row required)") from None
        dup = _first_duplicate(header)
        if dup is not None:
            raise DatasetError(f"{path}: duplicate column name {dup!r}")
        env_pos = None
        if env_column is not None:
            if env_column not in header:
                raise DatasetError(f"{path}: environment column {env_column!r} not found")
            env_pos = header.index(env_column)
        names = [h for i, h in enumerate(header) if i != env_pos]
        rows, envs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            vals = []
            for col, cell in enumerate(row):
                if col == env_pos:
                    envs.append(cell.strip())
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: cannot parse {cell!r} at (row {lineno - 2}, col {col})"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(f"non-finite value at ({lineno - 2}, {col})")
                vals.append(v)
            rows.append(vals)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(values, tuple(names), tuple(envs) if env_pos is not None else None)


def write_csv(d: Dataset, path, env_column: str = "env") -> None:
    """Write ``d`` so that :func:`load_csv` reads it back exactly.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(d, path, env_column)
        return
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        _write_rows(d, fh, env_column)


def _write_rows(d: Dataset, fh, env_column: str) -> None:
    w = csv.writer(fh, lineterminator="\n")
    header = list(d.names)
    if d.environments is not None:
        header.append(env_column)
    w.writerow(header)
    for i, row in enumerate(d.values):
        # repr gives the shortest string that round-trips (<= 17 digits)
        cells = [repr(float(v)) for v in row]
        if d.environments is not None:
            cells.append(d.environments[i])
        w.writerow(cells)


def filter_environment(d: Dataset, tag: str) -> Dataset:
    if d.environments is None:
        raise DatasetError("dataset has no environment labels")
    mask = np.array([e == tag for e in d.environments])
    hits = int(mask.sum())
    if hits == 0:
        raise DatasetError(f"unknown environment {tag!r}")
    if hits < 2:
        raise DatasetError(f"environment {tag!r} has {hits} row; at least 2 are needed")
    return Dataset(d.values[mask], d.names, None)


def standardize_ranks_ready(d: Dataset) -> Dataset:
    # CODEC depends on y only through ranks; predictors are used on their
    # own scale, so there is deliberately nothing to normalise here.
    return d
