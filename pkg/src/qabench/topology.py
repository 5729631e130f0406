"""Target graphs: annealer qubit layouts and their construction/IO.

A target graph is the hardware side of a minor-embedding: nodes are physical
qubits, edges are couplers, and ``c_phys`` is the designed per-node coupler
count of the topology family (t+2 for a Chimera cell size t, 15 for Pegasus).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """A target-graph file could not be parsed or violates graph invariants."""


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class TargetGraph:
    """Immutable hardware graph: qubit ids, couplers, and the degree cap."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    c_phys: int

    @classmethod
    def from_parts(
        cls,
        nodes: Iterable[int],
        edges: Iterable[tuple[int, int]],
        c_phys: int | None = None,
    ) -> "TargetGraph":
        """Build and validate a graph; c_phys defaults to the max degree."""
        node_set = frozenset(int(v) for v in nodes)
        edge_set = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop on node {u}")
            if u not in node_set or v not in node_set:
                raise GraphFormatError(f"edge ({u}, {v}) references unknown node")
            edge_set.add(_norm_edge(u, v))
        deg: dict[int, int] = {}
        for u, v in edge_set:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        max_deg = max(deg.values(), default=0)
        if c_phys is None:
            c_phys = max_deg
        elif max_deg > c_phys:
            worst = max(deg, key=lambda n: deg[n])
            raise GraphFormatError(
                f"node {worst} has degree {deg[worst]} > c_phys = {c_phys}"
            )
        return cls(nodes=node_set, edges=frozenset(edge_set), c_phys=int(c_phys))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(nbrs)) for v, nbrs in adj.items()}

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges

    @cached_property
    def graph_hash(self) -> str:
        """Stable identity used to tie embeddings to the graph they address."""
        payload = json.dumps(
            [self.c_phys, sorted(self.nodes), sorted(self.edges)],
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def chimera_node_id(i: int, j: int, shore: int, k: int, n: int, t: int) -> int:
    """Dense id of qubit k on shore 0 (vertical) / 1 (horizontal) of cell (i, j)."""
    return ((i * n + j) * 2 + shore) * t + k


def build_chimera(m: int, n: int, t: int) -> TargetGraph:
    """Chimera graph: an m x n grid of K_{t,t} cells.

    Shore-0 qubit k of cell (i, j) couples to shore-0 qubit k of cells
    (i +/- 1, j); shore-1 qubit k couples to shore-1 qubit k of cells
    (i, j +/- 1). c_phys = t + 2.
    """
    if m < 1 or n < 1 or t < 1:
        raise ValueError("chimera parameters must satisfy m, n, t >= 1")
    nodes = range(2 * t * m * n)
    edges = []
    for i in range(m):
        for j in range(n):
            for k in range(t):
                left = chimera_node_id(i, j, 0, k, n, t)
                for k2 in range(t):
                    edges.append((left, chimera_node_id(i, j, 1, k2, n, t)))
                if i + 1 < m:
                    edges.append((left, chimera_node_id(i + 1, j, 0, k, n, t)))
                right = chimera_node_id(i, j, 1, k, n, t)
                if j + 1 < n:
                    edges.append((right, chimera_node_id(i, j + 1, 1, k, n, t)))
    return TargetGraph.from_parts(nodes, edges, c_phys=t + 2)


# Wire offsets of the published Pegasus coordinate scheme. A qubit (u, w, k, z)
# is a length-12 segment in a unit grid: vertical qubits (u=0) occupy column
# 12w + k starting at row 12z + offset; horizontal ones are the transpose.
_PEGASUS_OFFSETS = (
    (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6),
    (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10),
)
PEGASUS_C_PHYS = 15


def build_pegasus(m: int) -> TargetGraph:
    """Pegasus graph of size m from the published integer-coordinate scheme.

    Couplers: external (consecutive collinear segments), odd (the parallel
    wire pair k, k+1 for even k), and internal (crossing perpendicular
    segments). Qubits with no internal coupler (grid fringe) are dropped,
    matching production chip fabrics. Max degree is 12 + 2 + 1 = 15.
    """
    if m < 2:
        raise ValueError("pegasus size must satisfy m >= 2")
    off_v, off_h = _PEGASUS_OFFSETS
    coords = [
        (u, w, k, z)
        for u in (0, 1)
        for w in range(m)
        for k in range(12)
        for z in range(m - 1)
    ]
    edges_c: list[tuple[tuple, tuple]] = []
    internal_deg = {c: 0 for c in coords}
    for u, w, k, z in coords:
        if z + 1 < m - 1:
            edges_c.append(((u, w, k, z), (u, w, k, z + 1)))
        if k % 2 == 0:
            edges_c.append(((u, w, k, z), (u, w, k + 1, z)))
    for w, k, z in ((w, k, z) for w in range(m) for k in range(12) for z in range(m - 1)):
        x = 12 * w + k
        y0 = 12 * z + off_v[k]
        for y in range(y0, y0 + 12):
            wp, kp = divmod(y, 12)
            if wp >= m:
                continue
            dx = x - off_h[kp]
            if dx < 0:
                continue
            zp = dx // 12
            if zp > m - 2:
                continue
            a, b = (0, w, k, z), (1, wp, kp, zp)
            edges_c.append((a, b))
            internal_deg[a] += 1
            internal_deg[b] += 1
    fabric = {c for c in coords if internal_deg[c] > 0}
    ids = {c: i for i, c in enumerate(sorted(fabric))}
    edges = [
        (ids[a], ids[b]) for a, b in edges_c if a in fabric and b in fabric
    ]
    return TargetGraph.from_parts(ids.values(), edges, c_phys=PEGASUS_C_PHYS)


def apply_yield(
    g: TargetGraph,
    dead: Sequence[int] | None = None,
    fraction: float | None = None,
    seed: int = 0,
) -> TargetGraph:
    """Remove dead qubits: an explicit list, or a seeded random fraction."""
    if (dead is None) == (fraction is None):
        raise ValueError("pass exactly one of dead= or fraction=")
    if dead is not None:
        dead_set = {int(v) for v in dead}
        unknown = dead_set - g.nodes
        if unknown:
            raise ValueError(f"unknown node ids in dead list: {sorted(unknown)}")
    else:
        if not 0.0 <= fraction < 1.0:
            raise ValueError("yield fraction must be in [0, 1)")
        count = int(fraction * g.num_nodes)
        rng = np.random.default_rng(seed)
        pool = np.array(sorted(g.nodes))
        dead_set = set(int(v) for v in rng.choice(pool, size=count, replace=False))
    alive = g.nodes - dead_set
    edges = [(u, v) for u, v in g.edges if u in alive and v in alive]
    return TargetGraph.from_parts(alive, edges, c_phys=g.c_phys)


def import_target(path: str | Path, format: str = "auto") -> TargetGraph:
    """Load a target graph from an edge-list or JSON file.

    Edge-list lines are "u v" pairs; '#' starts a comment. A directive
    comment "# c_phys: N" supplies the degree cap, which otherwise defaults
    to the max observed degree. JSON follows the export schema.
    """
    path = Path(path)
    if format == "auto":
        format = "json" if path.suffix == ".json" else "edge-list"
    if format == "json":
        data = json.loads(path.read_text())
        try:
            return TargetGraph.from_parts(
                data["nodes"], data["edges"], data.get("c_phys")
            )
        except GraphFormatError as exc:
            raise GraphFormatError(f"{path}: {exc}") from exc
    if format != "edge-list":
        raise ValueError(f"unknown target format: {format!r}")

    nodes: set[int] = set()
    edges: set[tuple[int, int]] = set()
    c_phys = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line, _, comment = raw.partition("#")
        comment = comment.strip()
        if comment.startswith("c_phys:"):
            c_phys = int(comment.split(":", 1)[1])
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(
                f"{path}:{lineno}: expected 'u v', got {line!r}"
            )
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"{path}:{lineno}: non-integer node id") from exc
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on node {u}")
        e = _norm_edge(u, v)
        if e in edges:
            raise GraphFormatError(f"{path}:{lineno}: duplicate edge ({u}, {v})")
        edges.add(e)
        nodes.update(e)
    return TargetGraph.from_parts(nodes, edges, c_phys)


def export_target(g: TargetGraph, path: str | Path, format: str = "auto") -> Path:
    """Write a target graph; JSON keeps c_phys, edge lists carry it as a directive."""
    path = Path(path)
    if format == "auto":
        format = "json" if path.suffix == ".json" else "edge-list"
    if format == "json":
        payload = {
            "c_phys": g.c_phys,
            "nodes": sorted(g.nodes),
            "edges": [list(e) for e in sorted(g.edges)],
        }
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return path
    if format != "edge-list":
        raise ValueError(f"unknown target format: {format!r}")
    isolated = g.nodes - {v for e in g.edges for v in e}
    if isolated:
        raise GraphFormatError(
            f"edge-list format cannot express isolated nodes: {sorted(isolated)[:5]}"
        )
    lines = [f"# c_phys: {g.c_phys}"]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    path.write_text("\n".join(lines) + "\n")
    return path


def connected_components(g: TargetGraph) -> list[frozenset[int]]:
    """Connected components, largest first (structural validation helper)."""
    seen: set[int] = set()
    comps = []
    for start in sorted(g.nodes):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in g.adjacency[v]:
                if u not in comp:
                    comp.add(u)
                    stack.append(u)
        seen |= comp
        comps.append(frozenset(comp))
    return sorted(comps, key=len, reverse=True)
