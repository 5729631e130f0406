"""Push logical models through an embedding and pull samples back.

Embedding a model spreads each bias uniformly over its chain, spreads each
coupling uniformly over all couplers joining the two chains, and adds a
ferromagnetic -strength coupling on every intra-chain path edge. Unembedding
takes a per-chain majority vote with a seeded coin on ties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import Embedding, EmbeddingError, SourceGraph, validate
from .problems import Assignment, IsingModel
from .topology import TargetGraph, _norm_edge


@dataclass(frozen=True)
class PhysicalModel:
    """Embedded Ising model over physical ids plus its chain bookkeeping."""

    model: IsingModel
    chain_edges: frozenset[tuple[int, int]]
    chain_strength: float


@dataclass(frozen=True)
class SampleRecord:
    assignment: Assignment
    energy: float
    count: int


@dataclass(frozen=True)
class SampleSet:
    """Aggregated solver samples; counts always sum to the shot total."""

    records: tuple[SampleRecord, ...]
    shots: int
    sweeps: int
    seed: int
    space: str  # "physical" | "logical"

    def __post_init__(self):
        total = sum(r.count for r in self.records)
        if total != self.shots:
            raise ValueError(f"sample counts sum to {total}, expected {self.shots}")

    def best(self) -> SampleRecord:
        return min(self.records, key=lambda r: (r.energy, r.assignment.key()))


def embed_problem(
    m: IsingModel, emb: Embedding, gt: TargetGraph, strength: float
) -> PhysicalModel:
    """Map a logical Ising model onto the target graph through an embedding.

    Every logical coefficient is conserved exactly: the spread physical parts
    sum back to it. Raises if the embedding is invalid for the model's graph
    or if some coupling has no connecting coupler to live on.
    """
    if not strength > 0:
        raise ValueError("chain strength must be positive")
    gs = SourceGraph.from_edges(m.variables, m.j.keys())
    report = validate(emb, gs, gt)
    if not report.valid:
        raise EmbeddingError(
            f"embedding invalid for this model: {report.violations[:3]}"
        )

    h_phys: dict[int, float] = {}
    for v, bias in m.h.items():
        chain = emb.chains[v]
        share = bias / len(chain)
        for p in chain:
            h_phys[p] = share
    for v in m.variables:
        for p in emb.chains[v]:
            h_phys.setdefault(p, 0.0)

    j_phys: dict[tuple[int, int], float] = {}
    for (u, v), coupling in m.j.items():
        side = set(emb.chains[v])
        couplers = [
            _norm_edge(p, q)
            for p in emb.chains[u]
            for q in gt.adjacency[p]
            if q in side
        ]
        if not couplers:
            raise EmbeddingError(f"no coupler realizes logical edge ({u}, {v})")
        share = coupling / len(couplers)
        for e in couplers:
            j_phys[e] = j_phys.get(e, 0.0) + share

    chain_edges = set()
    for chain in emb.chains.values():
        for p, q in zip(chain, chain[1:]):
            chain_edges.add(_norm_edge(p, q))
    overlap = chain_edges & set(j_phys)
    if overlap:
        raise EmbeddingError(f"chain edges collide with problem couplers: {sorted(overlap)[:3]}")
    for e in chain_edges:
        j_phys[e] = -strength

    return PhysicalModel(
        model=IsingModel(h=h_phys, j=j_phys, offset=m.offset),
        chain_edges=frozenset(chain_edges),
        chain_strength=float(strength),
    )


def rescale_physical(pm: PhysicalModel) -> PhysicalModel:
    """Divide every coefficient (and the offset) by the largest magnitude.

    Mimics a hardware coefficient range of [-1, 1]: long chains with strong
    ferromagnetic couplings squeeze the problem weights toward zero, which is
    exactly the precision cost this option lets experiments surface. Off by
    default everywhere; energies scale by the same factor, optima move not.
    """
    coeffs = [abs(c) for c in pm.model.h.values()] + [
        abs(c) for c in pm.model.j.values()
    ]
    scale = max(coeffs, default=0.0)
    if scale == 0.0:
        return pm
    return PhysicalModel(
        model=IsingModel(
            h={v: c / scale for v, c in pm.model.h.items()},
            j={e: c / scale for e, c in pm.model.j.items()},
            offset=pm.model.offset / scale,
        ),
        chain_edges=pm.chain_edges,
        chain_strength=pm.chain_strength / scale,
    )


def torque_compensation_strength(
    m: IsingModel, emb: Embedding | None = None, prefactor: float = 1.414
) -> float:
    """Chain strength mirroring the vendor torque-compensation heuristic:
    prefactor * RMS(couplings) * sqrt(mean logical degree).

    The embedding argument is accepted for call-site symmetry with
    embed_problem and is not used by the formula.
    """
    if not m.j:
        raise ValueError("torque compensation needs at least one coupling")
    couplings = np.fromiter(m.j.values(), dtype=float, count=len(m.j))
    rms = math.sqrt(float(np.mean(couplings**2)))
    mean_degree = 2 * len(m.j) / m.num_variables
    return prefactor * rms * math.sqrt(mean_degree)


def embed_assignment(a: Assignment, emb: Embedding) -> Assignment:
    """Copy each logical value across its chain (always chain-intact)."""
    values = {}
    for v, chain in emb.chains.items():
        for p in chain:
            values[p] = a.values[v]
    return Assignment(values, a.kind)


def unembed_majority(
    s: Assignment, emb: Embedding, seed: int = 0
) -> tuple[Assignment, frozenset[int]]:
    """Majority-vote each chain to a logical spin; ties flip a seeded fair coin.

    Returns the logical assignment and the set of broken chains (chains whose
    physical spins disagree).
    """
    if s.kind != "spin":
        raise ValueError("majority unembedding takes spin assignments")
    rng = np.random.default_rng(seed)
    values: dict[int, int] = {}
    broken: set[int] = set()
    for v in sorted(emb.chains):
        chain = emb.chains[v]
        try:
            total = sum(s.values[p] for p in chain)
        except KeyError as exc:
            raise KeyError(f"sample is missing physical node {exc.args[0]}") from exc
        if abs(total) != len(chain):
            broken.add(v)
        if total > 0:
            values[v] = 1
        elif total < 0:
            values[v] = -1
        else:
            values[v] = 1 if rng.integers(2) else -1
    return Assignment(values, "spin"), frozenset(broken)


def chain_break_fraction(ss: SampleSet, emb: Embedding) -> float:
    """Occurrence-weighted fraction of (sample, chain) pairs that are broken."""
    if ss.space != "physical":
        raise ValueError("chain breaks are defined on physical sample sets")
    n_chains = len(emb.chains)
    if n_chains == 0 or ss.shots == 0:
        return 0.0
    broken_pairs = 0
    for rec in ss.records:
        values = rec.assignment.values
        for chain in emb.chains.values():
            first = values[chain[0]]
            if any(values[p] != first for p in chain):
                broken_pairs += rec.count
    return broken_pairs / (ss.shots * n_chains)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_sampleset(ss: SampleSet, path: str | Path) -> Path:
    payload = {
        "shots": ss.shots,
        "sweeps": ss.sweeps,
        "seed": ss.seed,
        "space": ss.space,
        "samples": [
            {
                "values": {str(v): s for v, s in sorted(r.assignment.values.items())},
                "kind": r.assignment.kind,
                "energy": r.energy,
                "count": r.count,
            }
            for r in ss.records
        ],
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def load_sampleset(path: str | Path) -> SampleSet:
    data = json.loads(Path(path).read_text())
    records = tuple(
        SampleRecord(
            assignment=Assignment(
                {int(v): int(s) for v, s in rec["values"].items()}, rec["kind"]
            ),
            energy=float(rec["energy"]),
            count=int(rec["count"]),
        )
        for rec in data["samples"]
    )
    return SampleSet(
        records=records,
        shots=data["shots"],
        sweeps=data["sweeps"],
        seed=data["seed"],
        space=data["space"],
    )


def save_physical_model(pm: PhysicalModel, path: str | Path) -> Path:
    """Instance-style JSON over physical ids; coefficients stay as floats."""
    payload = {
        "kind": "physical-ising",
        "h": {str(v): c for v, c in sorted(pm.model.h.items())},
        "J": [[u, v, c] for (u, v), c in sorted(pm.model.j.items())],
        "offset": pm.model.offset,
        "chain_strength": pm.chain_strength,
        "chain_edges": [list(e) for e in sorted(pm.chain_edges)],
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def load_physical_model(path: str | Path) -> PhysicalModel:
    data = json.loads(Path(path).read_text())
    if data.get("kind") != "physical-ising":
        raise ValueError(f"{path}: not a physical model file")
    return PhysicalModel(
        model=IsingModel(
            h={int(v): float(c) for v, c in data["h"].items()},
            j={(int(u), int(v)): float(c) for u, v, c in data["J"]},
            offset=float(data.get("offset", 0.0)),
        ),
        chain_edges=frozenset(_norm_edge(int(u), int(v)) for u, v in data["chain_edges"]),
        chain_strength=float(data["chain_strength"]),
    )
