"""Ising/QUBO cost functions, benchmark instance generators, and evaluation.

Spin models minimize sum(h_v s_v) + sum(J_uv s_u s_v) over s in {-1,+1};
binary models are the x in {0,1} equivalent under x = (1+s)/2. Generated
coefficients live on a 1/128 grid so they serialize bit-exactly as integer
numerators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from .embedding import SourceGraph
from .topology import _norm_edge

WEIGHT_DENOMINATOR = 128

PROBLEM_KINDS = ("maxcut", "wmaxcut", "wmis")


def _norm_coeffs(linear, quadratic) -> tuple[dict, dict]:
    lin = {int(v): float(c) for v, c in linear.items()}
    quad = {}
    for (u, v), c in quadratic.items():
        if u == v:
            raise ValueError(f"self-coupling on node {u}")
        quad[_norm_edge(int(u), int(v))] = float(c)
    return lin, quad


@dataclass(frozen=True)
class IsingModel:
    """Linear biases h, couplings J over unordered pairs, and a constant."""

    h: dict[int, float]
    j: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        lin, quad = _norm_coeffs(self.h, self.j)
        object.__setattr__(self, "h", lin)
        object.__setattr__(self, "j", quad)

    @cached_property
    def variables(self) -> tuple[int, ...]:
        seen = set(self.h)
        for u, v in self.j:
            seen.add(u)
            seen.add(v)
        return tuple(sorted(seen))

    @property
    def num_variables(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class QuboModel:
    """Binary quadratic model; diagonal terms are folded into linear."""

    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        lin, quad = _norm_coeffs(self.linear, self.quadratic)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)

    @cached_property
    def variables(self) -> tuple[int, ...]:
        seen = set(self.linear)
        for u, v in self.quadratic:
            seen.add(u)
            seen.add(v)
        return tuple(sorted(seen))

    @property
    def num_variables(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class Assignment:
    """Total map from variable to spin (-1/+1) or bit (0/1)."""

    values: dict[int, int]
    kind: str  # "spin" | "binary"

    def __post_init__(self):
        if self.kind not in ("spin", "binary"):
            raise ValueError(f"unknown assignment kind {self.kind!r}")
        allowed = {-1, 1} if self.kind == "spin" else {0, 1}
        for v, s in self.values.items():
            if s not in allowed:
                raise ValueError(f"value {s} for node {v} not in {sorted(allowed)}")

    def to_spin(self) -> "Assignment":
        if self.kind == "spin":
            return self
        return Assignment({v: 2 * x - 1 for v, x in self.values.items()}, "spin")

    def to_binary(self) -> "Assignment":
        if self.kind == "binary":
            return self
        return Assignment({v: (1 + s) // 2 for v, s in self.values.items()}, "binary")

    def key(self) -> tuple:
        """Canonical sort key: values in variable order."""
        return tuple(self.values[v] for v in sorted(self.values))


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute x = (1+s)/2; energies match on corresponding assignments."""
    h = {v: c / 2.0 for v, c in q.linear.items()}
    j = {}
    offset = q.offset + sum(q.linear.values()) / 2.0
    for (u, v), c in q.quadratic.items():
        j[(u, v)] = c / 4.0
        h[u] = h.get(u, 0.0) + c / 4.0
        h[v] = h.get(v, 0.0) + c / 4.0
        offset += c / 4.0
    for v in q.variables:
        h.setdefault(v, 0.0)
    return IsingModel(h=h, j=j, offset=offset)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Substitute s = 2x - 1; inverse of qubo_to_ising up to rounding."""
    linear = {v: 2.0 * c for v, c in m.h.items()}
    quadratic = {}
    offset = m.offset - sum(m.h.values())
    for (u, v), c in m.j.items():
        quadratic[(u, v)] = 4.0 * c
        linear[u] = linear.get(u, 0.0) - 2.0 * c
        linear[v] = linear.get(v, 0.0) - 2.0 * c
        offset += c
    for v in m.variables:
        linear.setdefault(v, 0.0)
    return QuboModel(linear=linear, quadratic=quadratic, offset=offset)


def gen_maxcut(gs: SourceGraph, weighted: bool, seed: int) -> IsingModel:
    """Max-cut Ising instance: h = 0 and J = 1, or J uniform on {+-k/128, k=1..128}."""
    h = {v: 0.0 for v in gs.nodes}
    edges = sorted(gs.edges)
    if not weighted:
        j = {e: 1.0 for e in edges}
    else:
        rng = np.random.default_rng(seed)
        draws = rng.integers(0, 2 * WEIGHT_DENOMINATOR, size=len(edges))
        j = {}
        for e, idx in zip(edges, draws):
            num = int(idx) - WEIGHT_DENOMINATOR
            if num >= 0:
                num += 1
            j[e] = num / WEIGHT_DENOMINATOR
    return IsingModel(h=h, j=j, offset=0.0)


def gen_weighted_mis(gs: SourceGraph, seed: int) -> QuboModel:
    """Weighted MIS QUBO: -w_v per node (w uniform on {k/128}), penalty 2 per edge.

    The penalty 2 only ties, not dominates, the worst-case weight sum of an
    edge (both weights 1), so raw optima can be degenerate with a one-node
    set; downstream repair restores feasibility.
    """
    rng = np.random.default_rng(seed)
    nodes = sorted(gs.nodes)
    nums = rng.integers(1, WEIGHT_DENOMINATOR + 1, size=len(nodes))
    linear = {v: -int(k) / WEIGHT_DENOMINATOR for v, k in zip(nodes, nums)}
    quadratic = {e: 2.0 for e in sorted(gs.edges)}
    return QuboModel(linear=linear, quadratic=quadratic, offset=0.0)


def mis_weights(q: QuboModel) -> dict[int, float]:
    """Node weights encoded in a MIS QUBO (the negated linear terms)."""
    return {v: -c for v, c in q.linear.items()}


def evaluate(model: IsingModel | QuboModel, a: Assignment) -> float:
    """Cost of a total assignment; kind must match the model."""
    if isinstance(model, IsingModel):
        if a.kind != "spin":
            raise ValueError("Ising models take spin assignments")
        lin, quad = model.h, model.j
    elif isinstance(model, QuboModel):
        if a.kind != "binary":
            raise ValueError("QUBO models take binary assignments")
        lin, quad = model.linear, model.quadratic
    else:
        raise TypeError(f"not a model: {type(model).__name__}")
    values = a.values
    try:
        e = model.offset
        for v, c in lin.items():
            e += c * values[v]
        for (u, v), c in quad.items():
            e += c * values[u] * values[v]
    except KeyError as exc:
        raise KeyError(f"assignment is missing variable {exc.args[0]}") from exc
    return e


def cut_value(gs: SourceGraph, model: IsingModel, a: Assignment) -> float:
    """Cut metric (sum|J| - C) / 2: cut-edge count when unweighted, always >= 0."""
    if any(c != 0.0 for c in model.h.values()):
        raise ValueError("cut value requires a pure coupling model (h = 0)")
    total = sum(abs(c) for c in model.j.values())
    return (total - evaluate(model, a)) / 2.0


def mis_check(
    gs: SourceGraph, weights: Mapping[int, float], x: Assignment
) -> tuple[bool, float, list[tuple[int, int]]]:
    """Feasibility, selected weight, and every edge with both endpoints chosen."""
    if x.kind != "binary":
        raise ValueError("independent-set check takes binary assignments")
    values = x.values
    violated = sorted(e for e in gs.edges if values[e[0]] and values[e[1]])
    weight = sum(weights[v] for v in gs.nodes if values[v])
    return (not violated, weight, violated)


# ---------------------------------------------------------------------------
# serialization: coefficients as integer numerators over 128
# ---------------------------------------------------------------------------

def _numerator(c: float, what: str) -> int:
    scaled = c * WEIGHT_DENOMINATOR
    num = round(scaled)
    if scaled != num:
        raise ValueError(f"{what} = {c} is not a multiple of 1/{WEIGHT_DENOMINATOR}")
    return int(num)


def save_instance(
    path: str | Path,
    kind: str,
    gs: SourceGraph,
    model: IsingModel | QuboModel,
    seed: int,
) -> Path:
    if kind not in PROBLEM_KINDS:
        raise ValueError(f"unknown problem kind {kind!r}")
    lin, quad = (
        (model.h, model.j)
        if isinstance(model, IsingModel)
        else (model.linear, model.quadratic)
    )
    payload = {
        "kind": kind,
        "graph": {
            "nodes": sorted(gs.nodes),
            "edges": [list(e) for e in sorted(gs.edges)],
        },
        "h": {str(v): _numerator(c, f"h[{v}]") for v, c in sorted(lin.items())},
        "J": [
            [u, v, _numerator(c, f"J[{u},{v}]")]
            for (u, v), c in sorted(quad.items())
        ],
        "offset": _numerator(model.offset, "offset"),
        "denominator": WEIGHT_DENOMINATOR,
        "seed": seed,
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def load_instance(
    path: str | Path,
) -> tuple[str, SourceGraph, IsingModel | QuboModel, int]:
    data = json.loads(Path(path).read_text())
    kind = data["kind"]
    if kind not in PROBLEM_KINDS:
        raise ValueError(f"{path}: unknown problem kind {kind!r}")
    gs = SourceGraph.from_edges(data["graph"]["nodes"], data["graph"]["edges"])
    den = data.get("denominator", WEIGHT_DENOMINATOR)
    lin = {int(v): num / den for v, num in data["h"].items()}
    quad = {(u, v): num / den for u, v, num in data["J"]}
    offset = data.get("offset", 0) / den
    if kind == "wmis":
        model: IsingModel | QuboModel = QuboModel(lin, quad, offset)
    else:
        model = IsingModel(lin, quad, offset)
    return kind, gs, model, data.get("seed", 0)


def generate_problem(
    kind: str, gs: SourceGraph, seed: int
) -> IsingModel | QuboModel:
    """Uniform entry point used by the harness and CLI."""
    if kind == "maxcut":
        return gen_maxcut(gs, weighted=False, seed=seed)
    if kind == "wmaxcut":
        return gen_maxcut(gs, weighted=True, seed=seed)
    if kind == "wmis":
        return gen_weighted_mis(gs, seed)
    raise ValueError(f"unknown problem kind {kind!r}")
