"""Minor-embeddings: validation, quality scoring, and the chain-split generator.

An embedding maps each logical node to an ordered chain (a path) of physical
qubits. Families of instances are produced by repeatedly splitting a random
chain of a complete-graph embedding in half: each split adds one logical node
and lowers the source-graph density while the physical footprint stays fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .topology import TargetGraph, _norm_edge, build_chimera, chimera_node_id


class EmbeddingError(ValueError):
    """An embedding violates a structural precondition."""


@dataclass(frozen=True)
class SourceGraph:
    """Simple undirected logical graph."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_edges(
        cls, nodes: Iterable[int], edges: Iterable[tuple[int, int]]
    ) -> "SourceGraph":
        node_set = frozenset(int(v) for v in nodes)
        edge_set = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-edge on node {u}")
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u}, {v}) references unknown node")
            edge_set.add(_norm_edge(u, v))
        return cls(nodes=node_set, edges=frozenset(edge_set))

    @classmethod
    def complete(cls, n: int) -> "SourceGraph":
        return cls.from_edges(
            range(n), [(i, j) for i in range(n) for j in range(i + 1, n)]
        )

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

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])


def density(gs: SourceGraph) -> Fraction:
    """Edge density 2|E| / (|V| (|V|-1)) as an exact rational."""
    n = gs.num_nodes
    if n < 2:
        raise ValueError("density needs at least 2 nodes")
    return Fraction(2 * gs.num_edges, n * (n - 1))


@dataclass(frozen=True)
class Embedding:
    """Chains (ordered physical-node paths) keyed by logical node id."""

    chains: dict[int, tuple[int, ...]]
    target_hash: str

    def __post_init__(self):
        for v, chain in self.chains.items():
            if not chain:
                raise EmbeddingError(f"empty chain for logical node {v}")

    @cached_property
    def physical_nodes(self) -> frozenset[int]:
        return frozenset(p for chain in self.chains.values() for p in chain)

    @cached_property
    def physical_to_logical(self) -> dict[int, int]:
        """Owner of each physical node; raises if chains overlap."""
        owner: dict[int, int] = {}
        for v, chain in self.chains.items():
            for p in chain:
                if p in owner:
                    raise EmbeddingError(
                        f"physical node {p} used by chains {owner[p]} and {v}"
                    )
                owner[p] = v
        return owner

    @property
    def n_physical(self) -> int:
        return sum(len(c) for c in self.chains.values())

    def max_chain_length(self) -> int:
        return max(len(c) for c in self.chains.values())


@dataclass(frozen=True)
class EmbeddingReport:
    """Validation outcome plus the physical-qubit overhead score."""

    valid: bool
    violations: tuple[tuple[int, object], ...]
    n_physical: int
    lower_bound_sum: int
    overhead_ratio: Fraction


def chain_lower_bound(deg: int, c_phys: int) -> int:
    """Minimum physical nodes a path-shaped chain needs for a degree-deg node."""
    if deg < 0:
        raise ValueError("degree must be non-negative")
    if c_phys < 3:
        raise ValueError("c_phys must be >= 3")
    if deg <= c_phys:
        return 1
    if deg <= 2 * c_phys - 2:
        return 2
    return -(-(deg - (2 * c_phys - 2)) // (c_phys - 2)) + 2


def lower_bound_sum(gs: SourceGraph, c_phys: int) -> int:
    return sum(chain_lower_bound(gs.degree(v), c_phys) for v in gs.nodes)


def overhead_ratio(emb: Embedding, gs: SourceGraph, c_phys: int) -> Fraction:
    """Physical nodes used over the per-node lower-bound sum (1 is ideal)."""
    if set(emb.chains) != set(gs.nodes):
        raise EmbeddingError("embedding keys do not match source-graph nodes")
    emb.physical_to_logical  # rejects overlapping chains
    return Fraction(emb.n_physical, lower_bound_sum(gs, c_phys))


def validate(emb: Embedding, gs: SourceGraph, gt: TargetGraph) -> EmbeddingReport:
    """Check the three minor-embedding conditions and score the embedding.

    Violations are (condition, offending element) pairs: condition 1 names a
    logical node whose chain is not a connected subgraph of the target,
    condition 2 a physical node shared by two chains, condition 3 a source
    edge with no realizing coupler. Chains here may be any connected
    subgraph; path form is enforced only where splitting requires it.
    """
    if set(emb.chains) != set(gs.nodes):
        raise EmbeddingError("embedding keys do not match source-graph nodes")
    unknown = emb.physical_nodes - gt.nodes
    if unknown:
        raise EmbeddingError(f"unknown physical node ids: {sorted(unknown)[:5]}")

    violations: list[tuple[int, object]] = []
    for v in sorted(emb.chains):
        chain = emb.chains[v]
        members = set(chain)
        reached = {chain[0]}
        stack = [chain[0]]
        while stack:
            p = stack.pop()
            for q in gt.adjacency[p]:
                if q in members and q not in reached:
                    reached.add(q)
                    stack.append(q)
        if reached != members:
            violations.append((1, v))

    claims: dict[int, list[int]] = {}
    for v in sorted(emb.chains):
        for p in emb.chains[v]:
            claims.setdefault(p, []).append(v)
    for p in sorted(claims):
        if len(claims[p]) > 1:
            violations.append((2, p))

    realized: set[tuple[int, int]] = set()
    for p, q in gt.edges:
        for lu in claims.get(p, ()):
            for lv in claims.get(q, ()):
                if lu != lv:
                    realized.add(_norm_edge(lu, lv))
    for e in sorted(gs.edges - realized):
        violations.append((3, e))

    n_phys = len(emb.physical_nodes)
    if gt.c_phys >= 3:
        bound = lower_bound_sum(gs, gt.c_phys)
    else:
        bound = gs.num_nodes  # universal one-qubit-per-node bound
    return EmbeddingReport(
        valid=not violations,
        violations=tuple(violations),
        n_physical=n_phys,
        lower_bound_sum=bound,
        overhead_ratio=Fraction(n_phys, bound),
    )


def clique_embed_chimera(
    m: int, t: int = 4, gt: TargetGraph | None = None
) -> tuple[SourceGraph, Embedding]:
    """Complete graph K_{t*m} embedded on Chimera(m, m, t) with length-(m+1) chains.

    The standard diagonal construction: logical node (a, k) runs down column a
    on shore-0 wire k through rows 0..a, turns at the diagonal cell, and runs
    right along row a on shore-1 wire k through columns a..m-1.
    """
    if m < 1 or t < 1:
        raise ValueError("clique embedding needs m >= 1, t >= 1")
    if gt is None:
        gt = build_chimera(m, m, t)
    chains: dict[int, tuple[int, ...]] = {}
    for a in range(m):
        for k in range(t):
            vertical = [chimera_node_id(r, a, 0, k, m, t) for r in range(a + 1)]
            horizontal = [chimera_node_id(a, c, 1, k, m, t) for c in range(a, m)]
            chains[a * t + k] = tuple(vertical + horizontal)
    gs = SourceGraph.complete(t * m)
    emb = Embedding(chains=chains, target_hash=gt.graph_hash)
    return gs, emb


def induced_source_graph(emb: Embedding, gt: TargetGraph) -> SourceGraph:
    """Maximal logical graph realized by the chains: one edge per coupled pair."""
    owner = emb.physical_to_logical
    edges = set()
    for p, q in gt.edges:
        lu = owner.get(p)
        lv = owner.get(q)
        if lu is not None and lv is not None and lu != lv:
            edges.add(_norm_edge(lu, lv))
    return SourceGraph(nodes=frozenset(emb.chains), edges=frozenset(edges))


def _check_paths(emb: Embedding, gt: TargetGraph) -> None:
    for v, chain in emb.chains.items():
        for p, q in zip(chain, chain[1:]):
            if not gt.has_edge(p, q):
                raise EmbeddingError(
                    f"chain of node {v} is not a path: {p} and {q} not coupled"
                )


@dataclass(frozen=True)
class GenerationState:
    """One in-progress chain-split run; the physical node set never changes."""

    source: SourceGraph
    emb: Embedding
    rng: np.random.Generator
    split_log: tuple[tuple[int, int, tuple[int, int]], ...] = ()

    def splittable(self) -> list[int]:
        return sorted(v for v, c in self.emb.chains.items() if len(c) >= 2)


def start_state(
    gs: SourceGraph, emb: Embedding, gt: TargetGraph, seed: int | np.random.SeedSequence = 0
) -> GenerationState:
    report = validate(emb, gs, gt)
    if not report.valid:
        raise EmbeddingError(f"invalid start embedding: {report.violations[:3]}")
    _check_paths(emb, gt)
    return GenerationState(source=gs, emb=emb, rng=np.random.default_rng(seed))


def split_chain(state: GenerationState, v: int, gt: TargetGraph) -> GenerationState:
    """Split node v's chain in half; the first part keeps ceil(L/2) qubits.

    The freshly created logical node takes the tail half, and the source
    graph is recomputed as the maximal adjacency graph, so every old edge
    survives on at least one half and the new pair is always adjacent.
    """
    chain = state.emb.chains.get(v)
    if chain is None:
        raise EmbeddingError(f"unknown logical node {v}")
    if len(chain) < 2:
        raise EmbeddingError(f"cannot split singleton chain of node {v}")
    cut = (len(chain) + 1) // 2
    head, tail = chain[:cut], chain[cut:]
    new_id = max(state.source.nodes) + 1

    chains = dict(state.emb.chains)
    chains[v] = head
    chains[new_id] = tail
    emb = Embedding(chains=chains, target_hash=state.emb.target_hash)

    owner = dict(state.emb.physical_to_logical)
    for p in tail:
        owner[p] = new_id

    edges = {e for e in state.source.edges if v not in e}
    for node, part in ((v, head), (new_id, tail)):
        for p in part:
            for q in gt.adjacency[p]:
                w = owner.get(q)
                if w is not None and w != node:
                    edges.add(_norm_edge(node, w))
    source = SourceGraph(
        nodes=state.source.nodes | {new_id}, edges=frozenset(edges)
    )
    log = state.split_log + ((len(state.split_log), v, (len(head), len(tail))),)
    return GenerationState(source=source, emb=emb, rng=state.rng, split_log=log)


def random_split(state: GenerationState, gt: TargetGraph) -> GenerationState:
    """Split a uniformly random splittable node using the state's generator."""
    candidates = state.splittable()
    if not candidates:
        raise EmbeddingError("no splittable chain remains")
    v = candidates[int(state.rng.integers(len(candidates)))]
    return split_chain(state, v, gt)


def _as_fraction(d) -> Fraction:
    if isinstance(d, Fraction):
        return d
    if isinstance(d, str):
        return Fraction(d)
    if isinstance(d, int):
        return Fraction(d)
    return Fraction(str(d))


@dataclass(frozen=True)
class FamilyInstance:
    """One generated (source graph, embedding) pair at a target density."""

    instance_id: str
    density_target: Fraction
    density: Fraction
    spawn_key: tuple[int, int]
    n_splits: int
    source: SourceGraph
    emb: Embedding


@dataclass(frozen=True)
class InstanceFamily:
    """Instances of several densities sharing one physical node set."""

    target_hash: str
    seed: int
    instances: tuple[FamilyInstance, ...]

    def by_density(self, d) -> list[FamilyInstance]:
        frac = _as_fraction(d)
        return [i for i in self.instances if i.density_target == frac]


def generate_family(
    start: tuple[SourceGraph, Embedding],
    gt: TargetGraph,
    densities: Sequence,
    count_per_density: int,
    seed: int,
) -> InstanceFamily:
    """Generate count_per_density instances per target density by chain splitting.

    Each (density, repetition) cell runs independently from the clique start
    with a generator derived from (seed, density index, repetition index), so
    families are reproducible and cells could be produced in parallel. A run
    splits uniformly random splittable chains until the source density first
    drops to or below the target, then emits that graph.
    """
    gs0, emb0 = start
    targets = [_as_fraction(d) for d in densities]
    if not targets:
        raise ValueError("need at least one target density")
    if any(a < b for a, b in zip(targets, targets[1:])):
        raise ValueError("densities must be sorted descending")
    d0 = density(gs0)
    if any(t >= d0 for t in targets):
        raise ValueError(f"every target density must be < start density {d0}")
    if count_per_density < 1:
        raise ValueError("count_per_density must be >= 1")
    base = start_state(gs0, emb0, gt, seed=0)

    instances = []
    for di, target in enumerate(targets):
        for rep in range(count_per_density):
            ss = np.random.SeedSequence(seed, spawn_key=(di, rep))
            state = replace(base, rng=np.random.default_rng(ss))
            while density(state.source) > target:
                if not state.splittable():
                    raise EmbeddingError(
                        f"density {target} unreachable: no splittable chain left "
                        f"at density {density(state.source)}"
                    )
                state = random_split(state, gt)
            instances.append(
                FamilyInstance(
                    instance_id=f"d{float(target):g}-r{rep:02d}",
                    density_target=target,
                    density=density(state.source),
                    spawn_key=(di, rep),
                    n_splits=len(state.split_log),
                    source=state.source,
                    emb=state.emb,
                )
            )
    return InstanceFamily(
        target_hash=gt.graph_hash, seed=seed, instances=tuple(instances)
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def export_embedding(emb: Embedding, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        "target": emb.target_hash,
        "chains": {str(v): list(c) for v, c in sorted(emb.chains.items())},
    }
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def import_embedding(
    path: str | Path, gt: TargetGraph
) -> tuple[SourceGraph, Embedding]:
    """Load an embedding; the source graph is induced unless edges are listed."""
    path = Path(path)
    data = json.loads(path.read_text())
    declared = data.get("target")
    if declared and declared != gt.graph_hash:
        raise EmbeddingError(
            f"{path}: embedding targets graph {declared}, got {gt.graph_hash}"
        )
    chains = {int(v): tuple(int(p) for p in c) for v, c in data["chains"].items()}
    emb = Embedding(chains=chains, target_hash=gt.graph_hash)
    unknown = emb.physical_nodes - gt.nodes
    if unknown:
        raise EmbeddingError(f"{path}: unknown physical nodes {sorted(unknown)[:5]}")
    emb.physical_to_logical  # overlap check
    _check_paths(emb, gt)
    induced = induced_source_graph(emb, gt)
    if "edges" in data:
        edges = frozenset(_norm_edge(int(u), int(v)) for u, v in data["edges"])
        bogus = edges - induced.edges
        if bogus:
            raise EmbeddingError(
                f"{path}: listed edges not realizable by the chains: "
                f"{sorted(bogus)[:5]}"
            )
        return SourceGraph(nodes=induced.nodes, edges=edges), emb
    return induced, emb


def export_source_graph(gs: SourceGraph, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        "nodes": sorted(gs.nodes),
        "edges": [list(e) for e in sorted(gs.edges)],
    }
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def import_source_graph(path: str | Path) -> SourceGraph:
    data = json.loads(Path(path).read_text())
    return SourceGraph.from_edges(data["nodes"], data["edges"])


def save_family(family: InstanceFamily, directory: str | Path, config_hash: str = "") -> Path:
    """Write per-instance graph and embedding files plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in family.instances:
        graph_file = f"{inst.instance_id}.graph.json"
        emb_file = f"{inst.instance_id}.emb.json"
        export_source_graph(inst.source, directory / graph_file)
        export_embedding(inst.emb, directory / emb_file)
        entries.append(
            {
                "id": inst.instance_id,
                "density_target": str(inst.density_target),
                "density": str(inst.density),
                "spawn": list(inst.spawn_key),
                "n_splits": inst.n_splits,
                "n_logical": inst.source.num_nodes,
                "graph": graph_file,
                "embedding": emb_file,
            }
        )
    manifest = {
        "schema": 1,
        "target": family.target_hash,
        "seed": family.seed,
        "config_hash": config_hash,
        "instances": entries,
    }
    out = directory / "manifest.json"
    out.write_text(json.dumps(manifest, indent=1) + "\n")
    return out


def load_family(directory: str | Path, gt: TargetGraph) -> InstanceFamily:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest["target"] != gt.graph_hash:
        raise EmbeddingError(
            f"family was generated for target {manifest['target']}, "
            f"got {gt.graph_hash}"
        )
    instances = []
    for entry in manifest["instances"]:
        gs, emb = import_embedding(directory / entry["embedding"], gt)
        gs = import_source_graph(directory / entry["graph"])
        instances.append(
            FamilyInstance(
                instance_id=entry["id"],
                density_target=Fraction(entry["density_target"]),
                density=Fraction(entry["density"]),
                spawn_key=tuple(entry["spawn"]),
                n_splits=entry["n_splits"],
                source=gs,
                emb=emb,
            )
        )
    return InstanceFamily(
        target_hash=manifest["target"],
        seed=manifest["seed"],
        instances=tuple(instances),
    )
