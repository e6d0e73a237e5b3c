"""Structural equation models with known ground truth.

A :class:`DagSpec` is pure data: node names, directed edges, one equation
per node (see :mod:`dagfoci.equations`) and a noise law per node.  It
serialises to JSON::

    {"schema_version": 1,
     "nodes": ["X1", "X2"],
     "edges": [["X1", "X2"]],
     "equations": {"X1": "eps", "X2": "(+ (sin X1) eps)"},
     "noise": {"X1": {"law": "normal", "loc": 0.0, "scale": 1.0}, ...}}

Noise for node ``v`` is drawn from a Philox stream keyed by
``(seed, crc32(v))``, so samples do not depend on the order nodes are
evaluated in.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import networkx as nx
import numpy as np

from . import equations as eq
from .dataset import Dataset

SCHEMA_VERSION = 1
LAWS = ("normal", "uniform")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Noise:
    law: str = "normal"
    scale: float = 1.0
    loc: float = 0.0

    def __post_init__(self):
        if self.law not in LAWS:
            raise SpecError(f"unknown noise law {self.law!r}; expected one of {LAWS}")
        if not self.scale >= 0:
            raise SpecError("noise scale must be non-negative")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.law == "normal":
            return self.loc + self.scale * rng.standard_normal(n)
        # uniform on [loc - scale, loc + scale]
        return self.loc + self.scale * rng.uniform(-1.0, 1.0, n)

    def to_dict(self) -> dict:
        return {"law": self.law, "loc": float(self.loc), "scale": float(self.scale)}


@dataclass(frozen=True)
class DagSpec:
    nodes: tuple
    edges: tuple
    equations: dict
    noise: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(str(v) for v in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise SpecError("duplicate node names")
        if eq.NOISE in nodes:
            raise SpecError(f"{eq.NOISE!r} is reserved for the noise term")
        edges = {(str(a), str(b)) for a, b in self.edges}
        for a, b in edges:
            if a not in nodes or b not in nodes:
                raise SpecError(f"edge {a}->{b} mentions an unknown node")
            if a == b:
                raise SpecError(f"self-loop on {a}")
        pos = {v: i for i, v in enumerate(nodes)}
        edges = tuple(sorted(edges, key=lambda e: (pos[e[0]], pos[e[1]])))
        exprs = {}
        for v in nodes:
            raw = self.equations.get(v, eq.NOISE)
            exprs[v] = eq.parse(raw) if isinstance(raw, str) else raw
        extra = set(self.equations) - set(nodes)
        if extra:
            raise SpecError(f"equations for unknown nodes: {sorted(extra)}")
        noise = {v: self.noise.get(v, Noise()) for v in nodes}
        noise = {v: (Noise(**n) if isinstance(n, dict) else n) for v, n in noise.items()}
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "equations", exprs)
        object.__setattr__(self, "noise", noise)
        pa = self.parents_of()
        for v in nodes:
            refs = eq.symbols(exprs[v]) - {eq.NOISE}
            stray = refs - set(pa[v])
            if stray:
                raise SpecError(f"equation of {v} references non-parents {sorted(stray)}")
        self.topological_order()

    def parents_of(self) -> dict:
        pa = {v: [] for v in self.nodes}
        for a, b in self.edges:
            pa[b].append(a)
        return pa

    def topological_order(self, prefer_reverse: bool = False) -> list:
        """Kahn's algorithm; raises on a cycle.

        ``prefer_reverse`` picks the highest-indexed ready node first, which
        gives a second valid order (used to check order independence).
        """
        pa = self.parents_of()
        indeg = {v: len(pa[v]) for v in self.nodes}
        ch = {v: [] for v in self.nodes}
        for a, b in self.edges:
            ch[a].append(b)
        ready = [v for v in self.nodes if indeg[v] == 0]
        out = []
        while ready:
            ready.sort(key=self.nodes.index, reverse=prefer_reverse)
            v = ready.pop(0)
            out.append(v)
            for c in ch[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(out) != len(self.nodes):
            raise SpecError("edge set contains a cycle")
        return out

    def equation_string(self, v: str) -> str:
        return eq.to_string(self.equations[v])

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "equations": {v: self.equation_string(v) for v in self.nodes},
            "noise": {v: self.noise[v].to_dict() for v in self.nodes},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DagSpec":
        version = doc.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise SpecError(f"unsupported schema_version {version}")
        try:
            return cls(
                nodes=tuple(doc["nodes"]),
                edges=tuple(tuple(e) for e in doc.get("edges", [])),
                equations=dict(doc.get("equations", {})),
                noise={v: Noise(**n) for v, n in doc.get("noise", {}).items()},
            )
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed spec document: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "DagSpec":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, DagSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.dumps())


def load_spec(path) -> DagSpec:
    return DagSpec.loads(Path(path).read_text(encoding="utf-8"))


def save_spec(spec: DagSpec, path) -> None:
    Path(path).write_text(spec.dumps() + "\n", encoding="utf-8")


def noise_stream(seed: int, node: str) -> np.random.Generator:
    key = zlib.crc32(node.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), key])))


def sample(spec: DagSpec, n: int, seed: int = 0, order: Optional[list] = None) -> Dataset:
    """Draw ``n`` i.i.d. rows; columns follow ``spec.nodes``."""
    if n < 2:
        raise SpecError("need at least 2 samples")
    order = spec.topological_order() if order is None else list(order)
    env = {}
    for v in order:
        noise = spec.noise[v].draw(noise_stream(seed, v), n)
        vals = np.asarray(eq.evaluate(spec.equations[v], env, noise), dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise SpecError(f"equation of {v} produced non-finite values")
        env[v] = vals
    return Dataset(np.column_stack([env[v] for v in spec.nodes]), spec.nodes)


def do_intervene(spec: DagSpec, node: str, law: Noise = Noise()) -> DagSpec:
    """Replace ``node``'s mechanism by an exogenous draw from ``law``."""
    if node not in spec.nodes:
        raise SpecError(f"unknown node {node!r}")
    equations = dict(spec.equations)
    equations[node] = eq.parse(eq.NOISE)
    noise = dict(spec.noise)
    noise[node] = law
    return replace(
        spec,
        edges=tuple(e for e in spec.edges if e[1] != node),
        equations=equations,
        noise=noise,
    )


@dataclass(frozen=True)
class GroundTruth:
    """Per-node structural sets, as column indices into ``spec.nodes``."""

    parents: tuple
    children: tuple
    spouses: tuple
    markov_boundary: tuple
    tree_neighborhood: tuple


def ground_truth(spec: DagSpec) -> GroundTruth:
    idx = {v: i for i, v in enumerate(spec.nodes)}
    k = len(spec.nodes)
    pa = [set() for _ in range(k)]
    ch = [set() for _ in range(k)]
    for a, b in spec.edges:
        pa[idx[b]].add(idx[a])
        ch[idx[a]].add(idx[b])
    sp, mb = [], []
    for v in range(k):
        co = set().union(*(pa[c] for c in ch[v])) - {v}
        # co-parents already adjacent to v are counted as parents/children
        sp.append(frozenset(co - pa[v] - ch[v]))
        mb.append(frozenset(pa[v] | ch[v] | co))
    tree = _tree_neighborhood(k, spec.edges, idx, mb)
    return GroundTruth(
        parents=tuple(frozenset(s) for s in pa),
        children=tuple(frozenset(s) for s in ch),
        spouses=tuple(sp),
        markov_boundary=tuple(mb),
        tree_neighborhood=tuple(tree),
    )


def _tree_neighborhood(k, edges, idx, mb):
    # Two vertices share a simple cycle iff they lie in a common biconnected
    # block with at least three vertices.
    skel = nx.Graph()
    skel.add_nodes_from(range(k))
    skel.add_edges_from((idx[a], idx[b]) for a, b in edges)
    blocks = [b for b in nx.biconnected_components(skel) if len(b) >= 3]
    out = []
    for v in range(k):
        out.append(all(len(b & mb[v]) <= 1 for b in blocks))
    return out


# Built-in models -----------------------------------------------------------

def _spec(nodes, equations, parents):
    edges = [(p, v) for v, ps in parents.items() for p in ps]
    return DagSpec(tuple(nodes), tuple(edges), equations)


def example1() -> DagSpec:
    """16-node polytree-like model used for the X6 / X11 recovery study."""
    nodes = [f"X{i}" for i in range(1, 17)]
    equations = {
        "X5": "(+ X1 (- (atan X2)) eps)",
        "X6": "(+ X2 X4 (sq X3) eps)",
        "X7": "(+ (sin X3) eps)",
        "X9": "(+ (sin (+ X6 eps)) (abs X10))",
        "X11": "(+ (* X6 (- X12 X8)) eps)",
        "X13": "(atan (+ (sq X9) eps))",
        "X14": "(+ (sin X11) eps)",
        "X15": "(+ (sqrtabs X12) eps)",
        "X16": "(+ (sin X12) eps)",
    }
    parents = {
        "X5": ["X1", "X2"],
        "X6": ["X2", "X3", "X4"],
        "X7": ["X3"],
        "X9": ["X6", "X10"],
        "X11": ["X6", "X8", "X12"],
        "X13": ["X9"],
        "X14": ["X11"],
        "X15": ["X12"],
        "X16": ["X12"],
    }
    return _spec(nodes, equations, parents)


def example2() -> DagSpec:
    """7-node model where X5 lacks the tree-neighbourhood property."""
    nodes = [f"X{i}" for i in range(1, 8)]
    equations = {
        "X2": "(atan (+ X1 eps))",
        "X3": "(atan (+ X1 eps))",
        "X4": "(atan (+ X1 eps))",
        "X5": "(atan (+ X2 X3 eps))",
        "X6": "(atan (+ X4 X5 eps))",
        "X7": "(atan (+ X4 X5 eps))",
    }
    parents = {
        "X2": ["X1"],
        "X3": ["X1"],
        "X4": ["X1"],
        "X5": ["X2", "X3"],
        "X6": ["X4", "X5"],
        "X7": ["X4", "X5"],
    }
    return _spec(nodes, equations, parents)


def codec_violation(alpha: float) -> DagSpec:
    """Y = X1 * X2 with X1 = sign(X3) + a e1, X2 = |X3| + a e2 (Y noiseless)."""
    alpha = float(alpha)
    if not alpha >= 0:
        raise SpecError("alpha must be non-negative")
    a = repr(alpha)
    equations = {
        "X1": f"(+ (sign X3) (* {a} eps))",
        "X2": f"(+ (abs X3) (* {a} eps))",
        "Y": "(* X1 X2)",
    }
    parents = {"X1": ["X3"], "X2": ["X3"], "Y": ["X1", "X2"]}
    return _spec(["X1", "X2", "X3", "Y"], equations, parents)


def chain(strength: float = 1.0) -> DagSpec:
    """Linear-Gaussian chain X1 -> Y -> X2."""
    s = repr(float(strength))
    equations = {"Y": f"(+ (* {s} X1) eps)", "X2": f"(+ (* {s} Y) eps)"}
    return _spec(["X1", "Y", "X2"], equations, {"Y": ["X1"], "X2": ["Y"]})


BUILTINS = ("example1", "example2", "codec_violation", "chain")


def builtin(name: str, alpha: float = 0.0) -> DagSpec:
    """Built-in spec by name; ``codec_violation`` may carry ``:alpha``."""
    base, _, arg = name.partition(":")
    if base == "example1":
        return example1()
    if base == "example2":
        return example2()
    if base == "codec_violation":
        return codec_violation(float(arg) if arg else alpha)
    if base == "chain":
        return chain()
    raise SpecError(f"unknown builtin {name!r}; expected one of {BUILTINS}")
