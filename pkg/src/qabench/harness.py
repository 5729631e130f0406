"""End-to-end experiment orchestration: generate, solve, reference, report.

A benchmark run expands a config into (density, instance, problem, solver)
cells, executes each cell with derived seeds, scores results as ratios to a
reference solution, and emits a canonical CSV, summary JSON, and an SVG box
plot. All outputs are byte-stable for iteration-capped budgets.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embedding import (
    Embedding,
    InstanceFamily,
    SourceGraph,
    clique_embed_chimera,
    generate_family,
    import_embedding,
)
from .problems import (
    PROBLEM_KINDS,
    Assignment,
    IsingModel,
    QuboModel,
    cut_value,
    generate_problem,
    ising_to_qubo,
    mis_check,
    mis_weights,
)
from .solvers import (
    SolveBudget,
    SolveResult,
    exact_solver,
    mis_repair,
    qpu_emulate,
    random_mis,
    sa_solve,
    tabu_search,
)
from .topology import TargetGraph, apply_yield, build_chimera, build_pegasus, import_target

SWEEPS_PER_MICROSECOND = 16
SOLVER_NAMES = ("tabu", "sa", "qpu-emu", "random-mis", "exact")
EXACT_REFERENCE_MAX_VARS = 26
DEFAULT_BUDGET_MULTIPLIER = 60


# ---------------------------------------------------------------------------
# time-budget model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeBudgetModel:
    """Two-parameter access-time model: fixed programming cost plus a
    per-shot cost of annealing time and readout/delay overhead."""

    programming_ms: float = 20.0
    per_shot_overhead_us: float = 195.0
    anneal_time_us: float = 1.0
    total_budget_ms: float = 1000.0

    def __post_init__(self):
        for name in ("programming_ms", "per_shot_overhead_us", "anneal_time_us", "total_budget_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def shots_for_budget(tb: TimeBudgetModel) -> int:
    """Shots that fit the budget after programming, floored at zero."""
    per_shot_us = tb.anneal_time_us + tb.per_shot_overhead_us
    if per_shot_us <= 0:
        raise ValueError("per-shot time must be positive")
    usable_us = (tb.total_budget_ms - tb.programming_ms) * 1000.0
    return max(0, int(usable_us // per_shot_us))


def sweeps_for_anneal_time(
    anneal_time_us: float, sweeps_per_us: float = SWEEPS_PER_MICROSECOND
) -> int:
    return max(1, int(round(anneal_time_us * sweeps_per_us)))


def anneal_time_for_sweeps(
    sweeps: int, sweeps_per_us: float = SWEEPS_PER_MICROSECOND
) -> float:
    return sweeps / sweeps_per_us


# ---------------------------------------------------------------------------
# summary statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    std: float


def summary_stats(values: Sequence[float]) -> SummaryStats:
    """Five-number summary (linear-interpolation quartiles) plus mean/std."""
    if len(values) == 0:
        raise ValueError("cannot summarize an empty group")
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return SummaryStats(
        n=len(arr),
        min=float(arr.min()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(arr.max()),
        mean=float(arr.mean()),
        std=float(arr.std()),
    )


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    topology: dict
    start: dict
    densities: tuple[str, ...]
    instances_per_density: int
    problems: tuple[str, ...]
    solvers: tuple[dict, ...]
    reference: dict = field(default_factory=lambda: {"policy": "auto"})
    seed: int = 0
    output_dir: str | None = None
    jobs: int = 0  # 0 means one worker per available core

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(str(d) for d in self.densities))
        object.__setattr__(self, "problems", tuple(self.problems))
        object.__setattr__(self, "solvers", tuple(dict(s) for s in self.solvers))
        for d in self.densities:
            frac = Fraction(d)
            if not 0 < frac <= 1:
                raise ValueError(f"density {d} outside (0, 1]")
        if self.instances_per_density < 1:
            raise ValueError("instances_per_density must be >= 1")
        for p in self.problems:
            if p not in PROBLEM_KINDS:
                raise ValueError(f"unknown problem kind {p!r}")
        for s in self.solvers:
            if s.get("name") not in SOLVER_NAMES:
                raise ValueError(f"unknown solver {s.get('name')!r}")

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "start": self.start,
            "densities": list(self.densities),
            "instances_per_density": self.instances_per_density,
            "problems": list(self.problems),
            "solvers": [dict(s) for s in self.solvers],
            "reference": self.reference,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "jobs": self.jobs,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        return cls(
            topology=dict(data["topology"]),
            start=dict(data["start"]),
            densities=tuple(str(d) for d in data["densities"]),
            instances_per_density=int(data["instances_per_density"]),
            problems=tuple(data["problems"]),
            solvers=tuple(dict(s) for s in data["solvers"]),
            reference=dict(data.get("reference", {"policy": "auto"})),
            seed=int(data.get("seed", 0)),
            output_dir=data.get("output_dir"),
            jobs=int(data.get("jobs", 0)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_target(spec: Mapping) -> TargetGraph:
    kind = spec.get("kind")
    if kind == "chimera":
        gt = build_chimera(spec["m"], spec.get("n", spec["m"]), spec.get("t", 4))
    elif kind == "pegasus":
        gt = build_pegasus(spec["m"])
    elif kind == "import":
        gt = import_target(spec["path"], spec.get("format", "auto"))
    else:
        raise ValueError(f"unknown topology kind {kind!r}")
    yld = spec.get("yield")
    if yld:
        gt = apply_yield(
            gt,
            dead=yld.get("dead"),
            fraction=yld.get("fraction"),
            seed=yld.get("seed", 0),
        )
    return gt


def build_start(spec: Mapping, gt: TargetGraph) -> tuple[SourceGraph, Embedding]:
    kind = spec.get("kind")
    if kind == "chimera-clique":
        return clique_embed_chimera(spec["m"], spec.get("t", 4), gt)
    if kind == "import":
        return import_embedding(spec["path"], gt)
    raise ValueError(f"unknown start kind {kind!r}")


# ---------------------------------------------------------------------------
# per-cell execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchInstance:
    """One (source graph, embedding, problem model) cell of a benchmark."""

    instance_id: str
    problem: str
    density: str
    source: SourceGraph
    emb: Embedding
    model: IsingModel | QuboModel
    model_seed: int


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    problem: str
    density: str
    n_logical: int
    n_physical: int
    solver: str
    seed: int
    best_energy: float
    metric: float
    reference: float | None
    ratio: float | None
    elapsed_ms: float
    chain_break_fraction: float | None = None
    repairs: int | None = None


def _derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def prepare_instances(
    family: InstanceFamily, problems: Sequence[str], seed: int
) -> list[BenchInstance]:
    """Attach one generated model per (family instance, problem kind)."""
    out = []
    for ii, inst in enumerate(family.instances):
        for pi, problem in enumerate(problems):
            model_seed = _derive_seed(seed, 2, ii, pi)
            out.append(
                BenchInstance(
                    instance_id=inst.instance_id,
                    problem=problem,
                    density=f"{float(inst.density_target):g}",
                    source=inst.source,
                    emb=inst.emb,
                    model=generate_problem(problem, inst.source, model_seed),
                    model_seed=model_seed,
                )
            )
    return out


def solution_metric(
    problem: str,
    gs: SourceGraph,
    model: IsingModel | QuboModel,
    assignment: Assignment,
    repair_seed: int = 0,
) -> tuple[float, int]:
    """Maximization metric of a solver output: cut value for max-cut problems,
    post-repair feasible set weight for MIS. Returns (metric, removals)."""
    if problem in ("maxcut", "wmaxcut"):
        return cut_value(gs, model, assignment.to_spin()), 0
    weights = mis_weights(model)
    x = assignment.to_binary()
    before = sum(x.values.values())
    repaired = mis_repair(gs, weights, x, seed=repair_seed)
    feasible, weight, _ = mis_check(gs, weights, repaired)
    assert feasible
    return weight, before - sum(repaired.values.values())


def instance_metric(
    bi: BenchInstance, assignment: Assignment, repair_seed: int = 0
) -> tuple[float, int]:
    return solution_metric(bi.problem, bi.source, bi.model, assignment, repair_seed)


def _budget_from_spec(spec: Mapping, seed: int) -> SolveBudget:
    return SolveBudget(
        seed=seed,
        wall_time_ms=spec.get("wall_time_ms"),
        shots=spec.get("shots"),
        sweeps_per_shot=spec.get("sweeps"),
        iter_cap=spec.get("iter_cap"),
    )


def solve_instance(
    bi: BenchInstance, spec: Mapping, gt: TargetGraph, seed: int
) -> SolveResult:
    """Dispatch one solver spec against one prepared instance."""
    name = spec["name"]
    budget = _budget_from_spec(spec, seed)
    if name == "tabu":
        return tabu_search(bi.model, budget, tenure=spec.get("tenure"))
    if name == "sa":
        return sa_solve(bi.model, budget)
    if name == "qpu-emu":
        return qpu_emulate(
            bi.model,
            bi.emb,
            gt,
            budget,
            strength=spec.get("chain_strength"),
            prefactor=spec.get("prefactor", 1.414),
            repair_mis=bi.problem == "wmis",
            rescale=spec.get("rescale", False),
        )
    if name == "random-mis":
        if bi.problem != "wmis":
            raise ValueError("random-mis only applies to wmis instances")
        return random_mis(
            bi.source, mis_weights(bi.model), spec.get("shots", 5000), seed
        )
    if name == "exact":
        return exact_solver(bi.model, spec.get("max_vars", EXACT_REFERENCE_MAX_VARS))
    raise ValueError(f"unknown solver {name!r}")


def load_reference_table(path: str | Path) -> dict[tuple[str, str | None], float]:
    """CSV of reference values: instance_id,value or instance_id,problem,value."""
    table: dict[tuple[str, str | None], float] = {}
    for row in csv.reader(Path(path).read_text().splitlines()):
        if not row or row[0].strip().startswith("#"):
            continue
        cells = [c.strip() for c in row]
        if len(cells) == 2:
            table[(cells[0], None)] = float(cells[1])
        elif len(cells) == 3:
            table[(cells[0], cells[1])] = float(cells[2])
        else:
            raise ValueError(f"{path}: expected 2 or 3 columns, got {row}")
    return table


def reference_solution(
    bi: BenchInstance,
    policy: str,
    *,
    gt: TargetGraph | None = None,
    import_table: Mapping[tuple[str, str | None], float] | None = None,
    solver_specs: Sequence[Mapping] = (),
    budget_multiplier: float = DEFAULT_BUDGET_MULTIPLIER,
    seed: int = 0,
    max_vars: int = EXACT_REFERENCE_MAX_VARS,
) -> float:
    """Reference metric: exact oracle, imported value, or best-of-solvers
    with every budget dimension scaled up by the multiplier."""
    if policy == "auto":
        policy = "exact" if bi.source.num_nodes <= max_vars else "best-of-solvers"
    if policy == "exact":
        res = exact_solver(bi.model, max_vars)
        metric, _ = instance_metric(bi, res.assignment, repair_seed=seed)
        return metric
    if policy == "import":
        if import_table is None:
            raise ValueError("import policy needs a reference table")
        key = (bi.instance_id, bi.problem)
        if key in import_table:
            return import_table[key]
        wild = (bi.instance_id, None)
        if wild in import_table:
            return import_table[wild]
        raise KeyError(f"no reference value for instance {bi.instance_id!r}")
    if policy == "best-of-solvers":
        applicable = [
            s for s in solver_specs
            if s["name"] != "exact" and (s["name"] != "random-mis" or bi.problem == "wmis")
        ]
        if not applicable:
            raise ValueError("best-of-solvers needs at least one applicable solver")
        best = -math.inf
        for si, spec in enumerate(applicable):
            run_seed = _derive_seed(seed, 5, si)
            budget = _budget_from_spec(spec, run_seed).scaled(budget_multiplier)
            boosted = dict(spec)
            boosted.update(
                {
                    "wall_time_ms": budget.wall_time_ms,
                    "shots": budget.shots,
                    "sweeps": budget.sweeps_per_shot,
                    "iter_cap": budget.iter_cap,
                }
            )
            res = solve_instance(bi, boosted, gt, run_seed)
            metric, _ = instance_metric(bi, res.assignment, repair_seed=run_seed)
            best = max(best, metric)
        return best
    raise ValueError(f"unknown reference policy {policy!r}")


# ---------------------------------------------------------------------------
# the benchmark loop
# ---------------------------------------------------------------------------

def run_benchmark(
    cfg: ExperimentConfig, errors_out: list | None = None
) -> list[RunRecord]:
    """Execute every (density, instance, problem, solver) cell of a config.

    Per-cell failures are recorded (and written to errors.json when an output
    directory is set) without aborting the batch; failed cells produce no
    record. Records come back canonically sorted so parallel execution never
    changes output bytes.
    """
    gt = build_target(cfg.topology)
    start = build_start(cfg.start, gt)
    family = generate_family(
        start, gt, cfg.densities, cfg.instances_per_density, seed=cfg.seed
    )
    instances = prepare_instances(family, cfg.problems, cfg.seed)

    errors: list[dict] = []
    results: dict[tuple[int, int], tuple[SolveResult, float, int]] = {}

    def run_cell(bi_idx: int, solver_idx: int):
        bi = instances[bi_idx]
        spec = cfg.solvers[solver_idx]
        run_seed = _derive_seed(cfg.seed, 3, bi_idx, solver_idx)
        res = solve_instance(bi, spec, gt, run_seed)
        metric, repairs = instance_metric(
            bi, res.assignment, repair_seed=_derive_seed(cfg.seed, 4, bi_idx, solver_idx)
        )
        return res, metric, repairs

    cells = [
        (bi_idx, solver_idx)
        for bi_idx in range(len(instances))
        for solver_idx in range(len(cfg.solvers))
    ]
    jobs = cfg.jobs if cfg.jobs > 0 else (os.cpu_count() or 1)
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_cell, *cell): cell for cell in cells}
            for fut, cell in ((f, c) for f, c in futures.items()):
                try:
                    results[cell] = fut.result()
                except Exception as exc:
                    bi = instances[cell[0]]
                    errors.append(_error_entry(bi, cfg.solvers[cell[1]], exc))
    else:
        for cell in cells:
            try:
                results[cell] = run_cell(*cell)
            except Exception as exc:
                bi = instances[cell[0]]
                errors.append(_error_entry(bi, cfg.solvers[cell[1]], exc))

    ref_policy = cfg.reference.get("policy", "auto")
    import_table = None
    if cfg.reference.get("path"):
        import_table = load_reference_table(cfg.reference["path"])
    references: dict[int, float | None] = {}
    for bi_idx, bi in enumerate(instances):
        try:
            references[bi_idx] = reference_solution(
                bi,
                ref_policy,
                gt=gt,
                import_table=import_table,
                solver_specs=cfg.solvers,
                budget_multiplier=cfg.reference.get(
                    "budget_multiplier", DEFAULT_BUDGET_MULTIPLIER
                ),
                seed=_derive_seed(cfg.seed, 6, bi_idx),
                max_vars=cfg.reference.get("max_vars", EXACT_REFERENCE_MAX_VARS),
            )
        except Exception as exc:
            references[bi_idx] = None
            errors.append(_error_entry(bi, {"name": "<reference>"}, exc))

    records = []
    for (bi_idx, solver_idx), (res, metric, repairs) in results.items():
        bi = instances[bi_idx]
        ref = references[bi_idx]
        ratio = metric / ref if ref else None
        records.append(
            RunRecord(
                instance_id=bi.instance_id,
                problem=bi.problem,
                density=bi.density,
                n_logical=bi.source.num_nodes,
                n_physical=len(bi.emb.physical_nodes),
                solver=cfg.solvers[solver_idx].get("id", cfg.solvers[solver_idx]["name"]),
                seed=_derive_seed(cfg.seed, 3, bi_idx, solver_idx),
                best_energy=res.energy,
                metric=metric,
                reference=ref,
                ratio=ratio,
                elapsed_ms=res.elapsed_ms,
                chain_break_fraction=res.diagnostics.get("chain_break_fraction"),
                repairs=repairs if bi.problem == "wmis" else None,
            )
        )
    records.sort(key=lambda r: (r.instance_id, r.problem, r.solver))

    if errors_out is not None:
        errors_out.extend(errors)
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "errors.json").write_text(json.dumps(errors, indent=1) + "\n")
    return records


def _error_entry(bi: BenchInstance, spec: Mapping, exc: Exception) -> dict:
    return {
        "instance_id": bi.instance_id,
        "problem": bi.problem,
        "solver": spec.get("name"),
        "error": f"{type(exc).__name__}: {exc}",
    }


def sweep_scan(
    instances: Sequence[BenchInstance],
    sweeps_list: Sequence[int],
    tb: TimeBudgetModel,
    gt: TargetGraph,
    *,
    seed: int = 0,
    reference_policy: str = "auto",
    sweeps_per_us: float = SWEEPS_PER_MICROSECOND,
) -> list[dict]:
    """Scan sweeps-per-shot values under a fixed access-time budget.

    Each sweeps value maps to an annealing time (16 sweeps per microsecond
    by default), the budget model prices it into a shot count, and every
    instance runs the annealer pipeline at that setting. Rows report the
    mean/std ratio per (sweeps, density) group.
    """
    if not sweeps_list:
        raise ValueError("sweeps list must be nonempty")
    if not instances:
        raise ValueError("instance set must be nonempty")
    references = {}
    for bi_idx, bi in enumerate(instances):
        references[bi_idx] = reference_solution(
            bi, reference_policy, gt=gt, seed=_derive_seed(seed, 6, bi_idx)
        )
    rows = []
    for si, sweeps in enumerate(sweeps_list):
        anneal_us = anneal_time_for_sweeps(sweeps, sweeps_per_us)
        shots = shots_for_budget(replace(tb, anneal_time_us=anneal_us))
        if shots < 1:
            raise ValueError(
                f"budget model yields zero shots at {sweeps} sweeps "
                f"({anneal_us:.3g} us annealing time)"
            )
        by_density: dict[str, list[float]] = {}
        for bi_idx, bi in enumerate(instances):
            budget = SolveBudget(
                seed=_derive_seed(seed, 7, si, bi_idx),
                shots=shots,
                sweeps_per_shot=sweeps,
            )
            res = qpu_emulate(
                bi.model, bi.emb, gt, budget, repair_mis=bi.problem == "wmis"
            )
            metric, _ = instance_metric(bi, res.assignment, repair_seed=budget.seed)
            ratio = metric / references[bi_idx] if references[bi_idx] else math.nan
            by_density.setdefault(bi.density, []).append(ratio)
        for dens in sorted(by_density, key=Fraction, reverse=True):
            vals = np.array(by_density[dens], dtype=float)
            rows.append(
                {
                    "sweeps": int(sweeps),
                    "anneal_time_us": anneal_us,
                    "shots": shots,
                    "density": dens,
                    "mean_ratio": float(vals.mean()),
                    "std_ratio": float(vals.std()),
                    "n": int(vals.size),
                }
            )
    return rows


def summarize(
    records: Sequence[RunRecord], value: str = "ratio"
) -> dict[tuple[str, str], SummaryStats]:
    """Group records by (density, solver) and summarize the chosen field.

    Records whose field is None (no reference available) are skipped; a group
    with no usable values is dropped.
    """
    if not records:
        raise ValueError("cannot summarize an empty record list")
    groups: dict[tuple[str, str], list[float]] = {}
    for r in records:
        v = getattr(r, value)
        if v is None:
            continue
        groups.setdefault((r.density, r.solver), []).append(v)
    return {
        key: summary_stats(vals)
        for key, vals in sorted(groups.items(), key=lambda kv: (Fraction(kv[0][0]), kv[0][1]))
        if vals
    }


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "instance_id",
    "problem",
    "density",
    "n_logical",
    "n_physical",
    "solver",
    "seed",
    "best_energy",
    "metric",
    "reference",
    "ratio",
    "elapsed_ms",
    "chain_break_fraction",
    "repairs",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_report(
    records: Sequence[RunRecord],
    directory: str | Path,
    deterministic: bool = True,
) -> dict[str, Path]:
    """Write results.csv, summary.json, and boxplots.svg.

    With deterministic=True (the default) the volatile elapsed_ms cells are
    left empty so repeated runs of an iteration-capped config are
    byte-identical; wall-clock timings always land in run_log.json.
    """
    if not records:
        raise ValueError("no records to report")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.instance_id, r.problem, r.solver))

    csv_path = directory / "results.csv"
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in ordered:
        row = [
            r.instance_id,
            r.problem,
            r.density,
            str(r.n_logical),
            str(r.n_physical),
            r.solver,
            str(r.seed),
            _fmt(r.best_energy),
            _fmt(r.metric),
            _fmt(r.reference),
            _fmt(r.ratio),
            "" if deterministic else _fmt(round(r.elapsed_ms, 3)),
            _fmt(r.chain_break_fraction),
            _fmt(r.repairs),
        ]
        buf.write(",".join(row) + "\n")
    csv_path.write_text(buf.getvalue())

    have_ratios = any(r.ratio is not None for r in ordered)
    value = "ratio" if have_ratios else "metric"
    stats = summarize(ordered, value=value)
    summary_path = directory / "summary.json"
    summary_payload = {
        "value": value,
        "groups": [
            {
                "density": dens,
                "solver": solver,
                **{f: getattr(s, f) for f in ("n", "min", "q1", "median", "q3", "max", "mean", "std")},
            }
            for (dens, solver), s in stats.items()
        ],
    }
    summary_path.write_text(json.dumps(summary_payload, indent=1) + "\n")

    svg_path = directory / "boxplots.svg"
    svg_path.write_text(render_boxplot_svg(stats, ylabel=f"{value} to reference" if value == "ratio" else value))

    log_path = directory / "run_log.json"
    log_path.write_text(
        json.dumps(
            [
                {
                    "instance_id": r.instance_id,
                    "problem": r.problem,
                    "solver": r.solver,
                    "elapsed_ms": round(r.elapsed_ms, 3),
                }
                for r in ordered
            ],
            indent=1,
        )
        + "\n"
    )
    return {
        "results": csv_path,
        "summary": summary_path,
        "boxplots": svg_path,
        "run_log": log_path,
    }


_BOX_COLORS = ("#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c")


def render_boxplot_svg(
    stats: Mapping[tuple[str, str], SummaryStats],
    ylabel: str = "ratio to reference",
    width: int = 840,
    height: int = 480,
) -> str:
    """Deterministic hand-rolled SVG: one box per (density, solver) group.

    Boxes span Q1..Q3 with a median line; whiskers reach the group min/max.
    """
    if not stats:
        raise ValueError("nothing to plot")
    densities = sorted({k[0] for k in stats}, key=Fraction, reverse=True)
    solvers = sorted({k[1] for k in stats})
    left, right, top, bottom = 70, 20, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom

    lo = min(s.min for s in stats.values())
    hi = max(s.max for s in stats.values())
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def ypix(v: float) -> float:
        return top + plot_h * (hi - v) / (hi - lo)

    group_w = plot_w / len(densities)
    box_w = min(40.0, 0.8 * group_w / max(1, len(solvers)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<g font-family="monospace" font-size="12">',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for i in range(6):
        v = lo + (hi - lo) * i / 5
        y = ypix(v)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.3g}</text>'
        )
    out.append(
        f'<text x="16" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.2f})">{ylabel}</text>'
    )
    out.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12}" text-anchor="middle">density</text>'
    )
    for di, dens in enumerate(densities):
        cx = left + group_w * (di + 0.5)
        out.append(
            f'<text x="{cx:.2f}" y="{top + plot_h + 18}" text-anchor="middle">{dens}</text>'
        )
        for si, solver in enumerate(solvers):
            s = stats.get((dens, solver))
            if s is None:
                continue
            color = _BOX_COLORS[si % len(_BOX_COLORS)]
            x = cx + (si - (len(solvers) - 1) / 2) * (box_w + 6) - box_w / 2
            y_q1, y_q3 = ypix(s.q1), ypix(s.q3)
            y_med, y_min, y_max = ypix(s.median), ypix(s.min), ypix(s.max)
            xm = x + box_w / 2
            out.append(
                f'<g class="box" data-density="{dens}" data-solver="{solver}">'
                f'<line x1="{xm:.2f}" y1="{y_max:.2f}" x2="{xm:.2f}" y2="{y_q3:.2f}" stroke="{color}"/>'
                f'<line x1="{xm:.2f}" y1="{y_q1:.2f}" x2="{xm:.2f}" y2="{y_min:.2f}" stroke="{color}"/>'
                f'<line x1="{x + box_w * 0.25:.2f}" y1="{y_max:.2f}" x2="{x + box_w * 0.75:.2f}" y2="{y_max:.2f}" stroke="{color}"/>'
                f'<line x1="{x + box_w * 0.25:.2f}" y1="{y_min:.2f}" x2="{x + box_w * 0.75:.2f}" y2="{y_min:.2f}" stroke="{color}"/>'
                f'<rect x="{x:.2f}" y="{y_q3:.2f}" width="{box_w:.2f}" height="{max(y_q1 - y_q3, 0.5):.2f}" '
                f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>'
                f'<line x1="{x:.2f}" y1="{y_med:.2f}" x2="{x + box_w:.2f}" y2="{y_med:.2f}" stroke="{color}" stroke-width="2"/>'
                f"</g>"
            )
    for si, solver in enumerate(solvers):
        color = _BOX_COLORS[si % len(_BOX_COLORS)]
        y = 16 + 16 * si
        out.append(f'<rect x="{width - 150}" y="{y - 10}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{width - 132}" y="{y}">{solver}</text>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# LP export
# ---------------------------------------------------------------------------

def export_lp(
    model: IsingModel | QuboModel,
    path: str | Path,
    mis: tuple[SourceGraph, Mapping[int, float]] | None = None,
) -> Path:
    """Write an LP file: a binary quadratic objective, or, in MIS mode, a
    linear objective with one x_u + x_v <= 1 constraint per edge."""
    path = Path(path)
    lines = ["Minimize"]
    if mis is not None:
        gs, weights = mis
        terms = [f"- {repr(float(weights[v]))} x{v}" for v in sorted(gs.nodes)]
        lines.append(" obj: " + (_wrap_terms(terms) if terms else "0"))
        lines.append("Subject To")
        for ci, (u, v) in enumerate(sorted(gs.edges)):
            lines.append(f" c{ci}: x{u} + x{v} <= 1")
        variables = sorted(gs.nodes)
    else:
        q = model if isinstance(model, QuboModel) else ising_to_qubo(model)
        terms = []
        for v in sorted(q.linear):
            c = q.linear[v]
            if c:
                terms.append(f"{_sign(c)} {repr(abs(c))} x{v}")
        quad_terms = [
            f"{_sign(2 * c)} {repr(abs(2 * c))} x{u} * x{v}"
            for (u, v), c in sorted(q.quadratic.items())
            if c
        ]
        body = _wrap_terms(terms) if terms else ""
        if quad_terms:
            body += (" " if body else "") + "+ [ " + _wrap_terms(quad_terms) + " ] / 2"
        if q.offset:
            body += (" " if body else "") + f"{_sign(q.offset)} {repr(abs(q.offset))}"
        lines.append(" obj: " + (body.lstrip("+ ") if body else "0"))
        lines.append("Subject To")
        variables = list(q.variables)
    lines.append("Binary")
    for v in variables:
        lines.append(f" x{v}")
    lines.append("End")
    path.write_text("\n".join(lines) + "\n")
    return path


def _sign(c: float) -> str:
    return "-" if c < 0 else "+"


def _wrap_terms(terms: Sequence[str], per_line: int = 6) -> str:
    chunks = [
        " ".join(terms[i : i + per_line]) for i in range(0, len(terms), per_line)
    ]
    return ("\n" + "      ").join(chunks)
