"""Command-line interface: batch, non-interactive, fully seeded.

Subcommands mirror the pipeline: topology -> embed -> generate ->
instantiate -> solve -> bench. Every command prints its resolved
configuration before doing work; all randomness is surfaced as --seed flags.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__
from . import embedding as emb_mod
from . import harness, problems, solvers, topology


def _print_resolved(command: str, params: dict) -> None:
    print(json.dumps({"command": command, "resolved": params}, sort_keys=True))


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_topology(args) -> int:
    if args.chimera:
        m, n, t = args.chimera
        gt = topology.build_chimera(m, n, t)
        spec = {"kind": "chimera", "m": m, "n": n, "t": t}
    elif args.pegasus is not None:
        gt = topology.build_pegasus(args.pegasus)
        spec = {"kind": "pegasus", "m": args.pegasus}
    else:
        gt = topology.import_target(args.import_path)
        spec = {"kind": "import", "path": args.import_path}
    if args.yield_fraction is not None or args.dead:
        dead = _parse_int_list(args.dead) if args.dead else None
        gt = topology.apply_yield(
            gt, dead=dead, fraction=args.yield_fraction, seed=args.seed
        )
        spec["yield"] = {
            "fraction": args.yield_fraction,
            "dead": dead,
            "seed": args.seed,
        }
    _print_resolved(
        "topology",
        {**spec, "out": args.out, "nodes": gt.num_nodes, "edges": gt.num_edges,
         "c_phys": gt.c_phys, "hash": gt.graph_hash},
    )
    topology.export_target(gt, args.out)
    return 0


def cmd_embed(args) -> int:
    if args.chimera_clique is not None:
        m, t = args.chimera_clique, args.t
        gt = (
            topology.import_target(args.target)
            if args.target
            else topology.build_chimera(m, m, t)
        )
        gs, emb = emb_mod.clique_embed_chimera(m, t, gt)
    else:
        if not args.target:
            raise ValueError("--import needs --target to validate against")
        gt = topology.import_target(args.target)
        gs, emb = emb_mod.import_embedding(args.import_path, gt)
    report = emb_mod.validate(emb, gs, gt)
    _print_resolved(
        "embed",
        {
            "target": gt.graph_hash,
            "n_logical": gs.num_nodes,
            "n_physical": report.n_physical,
            "valid": report.valid,
            "overhead_ratio": str(report.overhead_ratio),
            "out": args.out,
        },
    )
    emb_mod.export_embedding(emb, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps(
                {
                    "valid": report.valid,
                    "violations": [[c, list(e) if isinstance(e, tuple) else e]
                                   for c, e in report.violations],
                    "n_physical": report.n_physical,
                    "lower_bound_sum": report.lower_bound_sum,
                    "overhead_ratio": str(report.overhead_ratio),
                },
                indent=1,
            )
            + "\n"
        )
    if not report.valid:
        raise ValueError(f"embedding invalid: {report.violations[:5]}")
    return 0


def cmd_generate(args) -> int:
    gt = topology.import_target(args.target)
    gs, emb = emb_mod.import_embedding(args.embedding, gt)
    densities = [d.strip() for d in args.densities.split(",") if d.strip()]
    _print_resolved(
        "generate",
        {
            "target": args.target,
            "embedding": args.embedding,
            "densities": densities,
            "count": args.count,
            "seed": args.seed,
            "out": args.out,
        },
    )
    family = emb_mod.generate_family((gs, emb), gt, densities, args.count, args.seed)
    emb_mod.save_family(family, args.out)
    print(f"wrote {len(family.instances)} instances to {args.out}")
    return 0


def cmd_instantiate(args) -> int:
    gt = topology.import_target(args.target)
    family = emb_mod.load_family(args.family, gt)
    _print_resolved(
        "instantiate",
        {
            "family": args.family,
            "problem": args.problem,
            "seed": args.seed,
            "count": len(family.instances),
        },
    )
    entries = []
    for idx, inst in enumerate(family.instances):
        seed = int(
            np.random.SeedSequence(args.seed, spawn_key=(idx,)).generate_state(1)[0]
        )
        model = problems.generate_problem(args.problem, inst.source, seed)
        fname = f"{inst.instance_id}.{args.problem}.json"
        problems.save_instance(
            Path(args.family) / fname, args.problem, inst.source, model, seed
        )
        entries.append(
            {"id": inst.instance_id, "problem": args.problem, "file": fname, "seed": seed}
        )
    index_path = Path(args.family) / f"instances.{args.problem}.json"
    index_path.write_text(json.dumps(entries, indent=1) + "\n")
    print(f"wrote {len(entries)} {args.problem} instances")
    return 0


def cmd_solve(args) -> int:
    kind, gs, model, _ = problems.load_instance(args.instance)
    budget = solvers.SolveBudget(
        seed=args.seed,
        wall_time_ms=args.time_ms,
        shots=args.shots,
        sweeps_per_shot=args.sweeps,
        iter_cap=args.iter_cap,
    )
    _print_resolved(
        "solve",
        {
            "instance": args.instance,
            "kind": kind,
            "solver": args.solver,
            "seed": args.seed,
            "time_ms": args.time_ms,
            "shots": args.shots,
            "sweeps": args.sweeps,
            "iter_cap": args.iter_cap,
        },
    )
    if args.solver == "tabu":
        res = solvers.tabu_search(model, budget)
    elif args.solver == "sa":
        res = solvers.sa_solve(model, budget)
    elif args.solver == "exact":
        res = solvers.exact_solver(model)
    elif args.solver == "random-mis":
        if kind != "wmis":
            raise ValueError("random-mis only applies to wmis instances")
        res = solvers.random_mis(
            gs, problems.mis_weights(model), args.shots or 5000, args.seed
        )
    elif args.solver == "qpu-emu":
        if not (args.target and args.embedding):
            raise ValueError("qpu-emu needs --target and --embedding")
        gt = topology.import_target(args.target)
        _, emb = emb_mod.import_embedding(args.embedding, gt)
        res = solvers.qpu_emulate(
            model, emb, gt, budget, repair_mis=kind == "wmis"
        )
    else:
        raise ValueError(f"unknown solver {args.solver!r}")

    metric, repairs = harness.solution_metric(
        kind, gs, model, res.assignment, repair_seed=args.seed
    )
    payload = {
        "solver": res.solver,
        "energy": res.energy,
        "metric": metric,
        "repairs": repairs if kind == "wmis" else None,
        "assignment": {str(v): s for v, s in sorted(res.assignment.values.items())},
        "kind": res.assignment.kind,
        "diagnostics": res.diagnostics,
        "seed": args.seed,
    }
    text = json.dumps(payload, indent=1, default=float) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"best_energy={res.energy} metric={metric}")
    return 0


def cmd_bench(args) -> int:
    cfg = harness.ExperimentConfig.from_file(args.config)
    if args.out:
        cfg = harness.ExperimentConfig.from_dict({**cfg.to_dict(), "output_dir": args.out})
    if args.jobs is not None:
        cfg = harness.ExperimentConfig.from_dict({**cfg.to_dict(), "jobs": args.jobs})
    if not cfg.output_dir:
        raise ValueError("bench needs an output directory (config output_dir or --out)")
    _print_resolved("bench", {**cfg.to_dict(), "config_hash": cfg.config_hash()})
    records = harness.run_benchmark(cfg)
    if not records:
        raise ValueError("benchmark produced no records (see errors.json)")
    paths = harness.emit_report(records, cfg.output_dir, deterministic=not args.timings)
    manifest = {
        "config_hash": cfg.config_hash(),
        "schema": SCHEMA_VERSION,
        "records": len(records),
        "files": {k: p.name for k, p in paths.items()},
    }
    (Path(cfg.output_dir) / "bench_manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    )
    if args.scan_sweeps:
        gt = harness.build_target(cfg.topology)
        start = harness.build_start(cfg.start, gt)
        family = emb_mod.generate_family(
            start, gt, cfg.densities, cfg.instances_per_density, seed=cfg.seed
        )
        instances = harness.prepare_instances(family, cfg.problems, cfg.seed)
        tb = harness.TimeBudgetModel(**cfg.reference.get("time_budget", {}))
        rows = harness.sweep_scan(
            instances, _parse_int_list(args.scan_sweeps), tb, gt, seed=cfg.seed
        )
        scan_path = Path(cfg.output_dir) / "sweep_scan.csv"
        header = "sweeps,anneal_time_us,shots,density,mean_ratio,std_ratio,n"
        lines = [header] + [
            f"{r['sweeps']},{r['anneal_time_us']!r},{r['shots']},{r['density']},"
            f"{r['mean_ratio']!r},{r['std_ratio']!r},{r['n']}"
            for r in rows
        ]
        scan_path.write_text("\n".join(lines) + "\n")
    print(f"wrote report to {cfg.output_dir} ({len(records)} records)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qabench",
        description="Benchmark annealing-style solvers on minor-embedded instances",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"qabench {__version__} (schema v{SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="build or import a target graph")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--chimera", nargs=3, type=int, metavar=("M", "N", "T"))
    group.add_argument("--pegasus", type=int, metavar="M")
    group.add_argument("--import", dest="import_path", metavar="PATH")
    p.add_argument("--yield", dest="yield_fraction", type=float, default=None,
                   help="random dead-qubit fraction in [0,1)")
    p.add_argument("--dead", default=None, help="comma-separated dead qubit ids")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("embed", help="clique-embed or import an embedding")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--chimera-clique", type=int, metavar="M")
    group.add_argument("--import", dest="import_path", metavar="PATH")
    p.add_argument("--t", type=int, default=4, help="chimera cell size")
    p.add_argument("--target", default=None, help="target graph file")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="validation report file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("generate", help="generate a chain-split instance family")
    p.add_argument("--target", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--densities", required=True, help="e.g. 0.9,0.5,0.1")
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("instantiate", help="attach problem models to a family")
    p.add_argument("--target", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--problem", required=True, choices=problems.PROBLEM_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_instantiate)

    p = sub.add_parser("solve", help="run one solver on one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", required=True,
                   choices=("tabu", "sa", "qpu-emu", "random-mis", "exact"))
    p.add_argument("--time-ms", type=float, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--iter-cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", default=None)
    p.add_argument("--embedding", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a full benchmark config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override config output_dir")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--scan-sweeps", default=None,
                   help="also scan these sweeps-per-shot values, e.g. 16,160,1600")
    p.add_argument("--timings", action="store_true",
                   help="write wall-clock times into results.csv (breaks re-run determinism)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    import warnings

    # environment noise from numba's threading-layer probe
    warnings.filterwarnings(
        "ignore", message="The TBB threading layer requires TBB version"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
