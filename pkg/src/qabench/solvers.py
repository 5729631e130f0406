"""Solvers: tabu search, the annealing sampler, the QPU-style pipeline,
the random maximal-independent-set baseline, repair, and the exact oracle.

The annealing sampler plays the quantum annealer's role at desk scale: it
samples the *embedded physical* problem, shots map to reads and sweeps map
to annealing time. No hardware-fidelity claim is attached to this stand-in.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .embedding import Embedding, SourceGraph
from .physmap import (
    SampleRecord,
    SampleSet,
    chain_break_fraction,
    embed_problem,
    rescale_physical,
    torque_compensation_strength,
    unembed_majority,
)
from .problems import (
    Assignment,
    IsingModel,
    QuboModel,
    evaluate,
    mis_check,
    mis_weights,
    qubo_to_ising,
)
from .topology import TargetGraph

# numba's parallel runtime is not reentrant; concurrent sampler calls from
# harness worker threads are serialized here.
_SAMPLER_LOCK = threading.Lock()

ENERGY_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class SolveBudget:
    """How long a solver may run; at least one dimension must be set."""

    seed: int = 0
    wall_time_ms: float | None = None
    shots: int | None = None
    sweeps_per_shot: int | None = None
    iter_cap: int | None = None

    def scaled(self, factor: float) -> "SolveBudget":
        """Budget with every set dimension multiplied by factor (seed kept)."""
        scale = lambda x: None if x is None else max(1, int(round(x * factor)))
        return SolveBudget(
            seed=self.seed,
            wall_time_ms=None if self.wall_time_ms is None else self.wall_time_ms * factor,
            shots=scale(self.shots),
            sweeps_per_shot=self.sweeps_per_shot,
            iter_cap=scale(self.iter_cap),
        )


@dataclass(frozen=True)
class SolveResult:
    assignment: Assignment
    energy: float
    solver: str
    elapsed_ms: float
    samples: SampleSet | None = None
    diagnostics: dict = field(default_factory=dict)


def _pack(m: IsingModel):
    """CSR arrays (starts, neighbor, weight) plus bias vector, vars sorted."""
    variables = m.variables
    index = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (u, v), c in m.j.items():
        iu, iv = index[u], index[v]
        adj[iu].append((iv, c))
        adj[iv].append((iu, c))
    starts = np.zeros(n + 1, dtype=np.int64)
    nbr = np.empty(sum(len(a) for a in adj), dtype=np.int64)
    w = np.empty(nbr.shape[0], dtype=np.float64)
    pos = 0
    for i, entries in enumerate(adj):
        for jdx, c in sorted(entries):
            nbr[pos] = jdx
            w[pos] = c
            pos += 1
        starts[i + 1] = pos
    h = np.array([m.h.get(v, 0.0) for v in variables], dtype=np.float64)
    return variables, starts, nbr, w, h


def _spin_assignment(variables, state) -> Assignment:
    return Assignment({v: int(state[i]) for i, v in enumerate(variables)}, "spin")


def _check_consistent(model, assignment: Assignment, energy: float) -> float:
    recomputed = evaluate(model, assignment)
    if abs(recomputed - energy) > ENERGY_CONSISTENCY_TOL * max(1.0, abs(recomputed)):
        raise RuntimeError(
            f"solver energy {energy} disagrees with evaluate() = {recomputed}"
        )
    return recomputed


def auto_beta_range(m: IsingModel, sweeps: int) -> tuple[float, float]:
    """Geometric schedule endpoints from coefficient magnitudes.

    beta_min melts the stiffest spin (ln 2 over its total coupling), beta_max
    freezes the weakest coefficient to acceptance odds ~1/(100 sweeps).
    """
    totals: dict[int, float] = {v: abs(c) for v, c in m.h.items()}
    for (u, v), c in m.j.items():
        totals[u] = totals.get(u, 0.0) + abs(c)
        totals[v] = totals.get(v, 0.0) + abs(c)
    nonzero = [abs(c) for c in m.h.values() if c] + [abs(c) for c in m.j.values() if c]
    max_total = max(totals.values(), default=0.0)
    if not nonzero or max_total == 0.0:
        return (1.0, 1.0)
    beta_min = math.log(2.0) / max_total
    beta_max = math.log(100.0 * sweeps) / min(nonzero)
    if beta_min >= beta_max:
        beta_min = beta_max / 2.0
    return (beta_min, beta_max)


def simulated_annealing(
    m: IsingModel,
    shots: int,
    sweeps: int,
    seed: int = 0,
    beta_range: tuple[float, float] | None = None,
    space: str = "logical",
) -> SampleSet:
    """Sample an Ising model: per shot, Metropolis sweeps over a geometric
    inverse-temperature schedule; shots carry independent derived seeds."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    variables, starts, nbr, w, h = _pack(m)
    if not variables:
        rec = SampleRecord(Assignment({}, "spin"), m.offset, shots)
        return SampleSet((rec,), shots, sweeps, seed, space)
    lo, hi = beta_range if beta_range is not None else auto_beta_range(m, sweeps)
    betas = np.geomspace(lo, hi, sweeps)
    shot_seeds = np.random.SeedSequence(seed).generate_state(shots, dtype=np.uint32)
    states = np.empty((shots, len(variables)), dtype=np.int8)
    energies = np.empty(shots, dtype=np.float64)
    with _SAMPLER_LOCK:
        _kernels.sa_sample(starts, nbr, w, h, betas, shot_seeds, states, energies)

    buckets: dict[bytes, list] = {}
    for k in range(shots):
        key = states[k].tobytes()
        if key in buckets:
            buckets[key][1] += 1
        else:
            buckets[key] = [energies[k] + m.offset, 1]
    records = [
        SampleRecord(_spin_assignment(variables, np.frombuffer(key, dtype=np.int8)), e, c)
        for key, (e, c) in buckets.items()
    ]
    records.sort(key=lambda r: (r.energy, r.assignment.key()))
    return SampleSet(tuple(records), shots, sweeps, seed, space)


def _tenure_for(n: int) -> int:
    return max(1, -(-n // 4))


def tabu_search(
    m: IsingModel | QuboModel, budget: SolveBudget, tenure: int | None = None
) -> SolveResult:
    """Single-flip tabu search with aspiration and incremental delta updates.

    Runs until the iteration cap and/or wall-time budget is exhausted; only
    iteration-capped runs replay identically. Tenure defaults to |V|/4.
    """
    if budget.iter_cap is None and budget.wall_time_ms is None:
        raise ValueError("tabu needs an iteration cap and/or a wall-time budget")
    ising = m if isinstance(m, IsingModel) else qubo_to_ising(m)
    variables, starts, nbr, w, h = _pack(ising)
    n = len(variables)
    if n < 1:
        raise ValueError("tabu needs at least one variable")
    if tenure is None:
        tenure = _tenure_for(n)

    t0 = time.perf_counter()
    rng = np.random.default_rng(budget.seed)
    s = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
    fields = h.copy()
    for i in range(n):
        for p in range(starts[i], starts[i + 1]):
            fields[i] += w[p] * s[nbr[p]]
    cur_e = float(np.dot(h, s) + 0.5 * np.dot(s, fields - h))
    best_e = cur_e
    start_e = cur_e + ising.offset
    best_s = s.copy()
    tabu_until = np.zeros(n, dtype=np.int64)

    done = 0
    chunk = 256
    while True:
        if budget.iter_cap is not None:
            remaining = budget.iter_cap - done
            if remaining <= 0:
                break
            if budget.wall_time_ms is None:
                chunk = 1 << 16
            chunk = min(chunk, remaining)
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        if budget.wall_time_ms is not None:
            if elapsed_ms >= budget.wall_time_ms:
                break
            # size the next chunk to ~20 ms so the cap overshoot stays small
            if done:
                rate = done / max(elapsed_ms, 1e-3)
                chunk = max(256, min(int(rate * 20.0), 1 << 20))
        cur_e, best_e = _kernels.tabu_chunk(
            starts, nbr, w, h, s, fields, tabu_until,
            done, chunk, tenure, cur_e, best_e, best_s,
        )
        done += chunk

    spin = _spin_assignment(variables, best_s)
    assignment = spin if isinstance(m, IsingModel) else spin.to_binary()
    energy = _check_consistent(m, assignment, best_e + ising.offset)
    return SolveResult(
        assignment=assignment,
        energy=energy,
        solver="tabu",
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        diagnostics={
            "iterations": done,
            "tenure": tenure,
            "start_energy": start_e,
        },
    )


def exact_solver(m: IsingModel | QuboModel, max_vars: int = 26) -> SolveResult:
    """Global optimum by Gray-code exhaustive enumeration."""
    ising = m if isinstance(m, IsingModel) else qubo_to_ising(m)
    variables, starts, nbr, w, h = _pack(ising)
    n = len(variables)
    if n > max_vars:
        raise ValueError(f"exact solver limited to {max_vars} variables, got {n}")
    t0 = time.perf_counter()
    if n == 0:
        assignment = Assignment({}, "spin" if isinstance(m, IsingModel) else "binary")
        return SolveResult(assignment, m.offset, "exact", 0.0)
    best_s, best_e = _kernels.exact_gray(starts, nbr, w, h)
    spin = _spin_assignment(variables, best_s)
    assignment = spin if isinstance(m, IsingModel) else spin.to_binary()
    energy = _check_consistent(m, assignment, best_e + ising.offset)
    return SolveResult(
        assignment=assignment,
        energy=energy,
        solver="exact",
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        diagnostics={"states": 1 << n},
    )


def sa_solve(m: IsingModel | QuboModel, budget: SolveBudget) -> SolveResult:
    """Best-of-shots annealing directly on the logical model."""
    if not budget.shots or not budget.sweeps_per_shot:
        raise ValueError("annealing needs shots and sweeps_per_shot")
    ising = m if isinstance(m, IsingModel) else qubo_to_ising(m)
    t0 = time.perf_counter()
    ss = simulated_annealing(
        ising, budget.shots, budget.sweeps_per_shot, budget.seed, space="logical"
    )
    best = ss.best()
    assignment = (
        best.assignment if isinstance(m, IsingModel) else best.assignment.to_binary()
    )
    energy = _check_consistent(m, assignment, best.energy)
    return SolveResult(
        assignment=assignment,
        energy=energy,
        solver="sa",
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        samples=ss,
        diagnostics={"shots": budget.shots, "sweeps": budget.sweeps_per_shot},
    )


def mis_repair(
    gs: SourceGraph,
    weights: Mapping[int, float],
    x: Assignment,
    seed: int = 0,
) -> Assignment:
    """Delete endpoints of violated edges (lighter one first) until independent.

    Pure removal: the output selection is a subset of the input. Violated
    edges are picked uniformly at random; equal weights fall back to a seeded
    coin since the keep-the-heavier rule does not decide them.
    """
    if x.kind != "binary":
        raise ValueError("repair takes binary assignments")
    rng = np.random.default_rng(seed)
    selected = {v for v, b in x.values.items() if b}
    violated = sorted(
        e for e in gs.edges if e[0] in selected and e[1] in selected
    )
    while violated:
        u, v = violated[int(rng.integers(len(violated)))]
        if weights[u] > weights[v]:
            drop = v
        elif weights[v] > weights[u]:
            drop = u
        else:
            drop = (u, v)[int(rng.integers(2))]
        selected.discard(drop)
        violated = [e for e in violated if drop not in e]
    return Assignment({v: int(v in selected) for v in gs.nodes}, "binary")


def random_mis(
    gs: SourceGraph,
    weights: Mapping[int, float],
    shots: int,
    seed: int = 0,
) -> SolveResult:
    """Random maximal independent sets: repeatedly pick a node, drop its
    neighbors, until no candidate remains; keep the heaviest of all shots."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    best_sel: set[int] | None = None
    best_w = -math.inf
    for _ in range(shots):
        candidates = sorted(gs.nodes)
        selected: set[int] = set()
        while candidates:
            u = candidates[int(rng.integers(len(candidates)))]
            selected.add(u)
            dropped = set(gs.adjacency[u])
            dropped.add(u)
            candidates = [c for c in candidates if c not in dropped]
        total = sum(weights[v] for v in selected)
        if total > best_w:
            best_w = total
            best_sel = selected
    assignment = Assignment({v: int(v in best_sel) for v in gs.nodes}, "binary")
    feasible, weight, _ = mis_check(gs, weights, assignment)
    assert feasible
    return SolveResult(
        assignment=assignment,
        energy=-weight,
        solver="random-mis",
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        diagnostics={"shots": shots, "weight": weight},
    )


def qpu_emulate(
    m: IsingModel | QuboModel,
    emb: Embedding,
    gt: TargetGraph,
    budget: SolveBudget,
    strength: float | None = None,
    prefactor: float = 1.414,
    repair_mis: bool = False,
    rescale: bool = False,
) -> SolveResult:
    """The annealer pipeline: embed, sample the physical model, majority-vote
    unembed, optionally repair MIS samples, and keep the best logical result.

    With all-singleton chains this degenerates to plain annealing on the
    logical model (identical samples for identical seeds). rescale=True
    squeezes the physical coefficients into [-1, 1] first, surfacing the
    precision cost of strong chain couplings.
    """
    if not budget.shots or not budget.sweeps_per_shot:
        raise ValueError("qpu emulation needs shots and sweeps_per_shot")
    ising = m if isinstance(m, IsingModel) else qubo_to_ising(m)
    if strength is None:
        try:
            strength = torque_compensation_strength(ising, emb, prefactor)
        except ValueError:
            strength = 1.0  # couplerless model: any positive value works
    elif not strength > 0:
        raise ValueError("chain strength must be positive")

    t0 = time.perf_counter()
    pm = embed_problem(ising, emb, gt, strength)
    if rescale:
        pm = rescale_physical(pm)
    ss_phys = simulated_annealing(
        pm.model, budget.shots, budget.sweeps_per_shot, budget.seed, space="physical"
    )
    cbf = chain_break_fraction(ss_phys, emb)

    if repair_mis:
        if not isinstance(m, QuboModel):
            raise ValueError("MIS repair applies to binary (QUBO) models")
        gs = SourceGraph.from_edges(m.variables, m.quadratic.keys())
        weights = mis_weights(m)

    buckets: dict[tuple, list] = {}
    repairs = 0
    for idx, rec in enumerate(ss_phys.records):
        sub_seed = np.random.SeedSequence(budget.seed, spawn_key=(1, idx))
        coin = int(sub_seed.generate_state(1, dtype=np.uint32)[0])
        logical, _broken = unembed_majority(rec.assignment, emb, seed=coin)
        if isinstance(m, QuboModel):
            out = logical.to_binary()
            if repair_mis:
                before = sum(out.values.values())
                out = mis_repair(gs, weights, out, seed=coin)
                repairs += (before - sum(out.values.values())) * rec.count
        else:
            out = logical
        energy = evaluate(m, out)
        key = out.key()
        if key in buckets:
            buckets[key][2] += rec.count
        else:
            buckets[key] = [out, energy, rec.count]
    records = tuple(
        sorted(
            (SampleRecord(a, e, c) for a, e, c in buckets.values()),
            key=lambda r: (r.energy, r.assignment.key()),
        )
    )
    ss_logical = SampleSet(
        records, ss_phys.shots, ss_phys.sweeps, ss_phys.seed, "logical"
    )
    best = ss_logical.best()
    energy = _check_consistent(m, best.assignment, best.energy)
    diagnostics = {
        "chain_break_fraction": cbf,
        "chain_strength": strength,
        "n_physical": len(emb.physical_nodes),
        "shots": budget.shots,
        "sweeps": budget.sweeps_per_shot,
    }
    if repair_mis:
        diagnostics["repairs"] = repairs
    return SolveResult(
        assignment=best.assignment,
        energy=energy,
        solver="qpu-emu",
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        samples=ss_logical,
        diagnostics=diagnostics,
    )
