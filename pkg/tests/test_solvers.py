import time

import numpy as np
import pytest

from qabench.embedding import Embedding, SourceGraph, clique_embed_chimera
from qabench.problems import (
    Assignment,
    IsingModel,
    QuboModel,
    cut_value,
    evaluate,
    gen_maxcut,
    gen_weighted_mis,
    mis_check,
    mis_weights,
)
from qabench.solvers import (
    SolveBudget,
    auto_beta_range,
    exact_solver,
    mis_repair,
    qpu_emulate,
    random_mis,
    sa_solve,
    simulated_annealing,
    tabu_search,
)
from qabench.topology import build_chimera

from oracles import brute_force_min, random_ising, random_qubo


class TestExactSolver:
    def test_triangle_maxcut(self):
        gs = SourceGraph.complete(3)
        m = gen_maxcut(gs, weighted=False, seed=0)
        res = exact_solver(m)
        assert res.energy == -1.0
        assert cut_value(gs, m, res.assignment) == 2.0

    def test_single_edge_mis_tie(self):
        q = QuboModel({0: -1.0, 1: -1.0}, {(0, 1): 2.0})
        res = exact_solver(q)
        assert res.energy == -1.0
        assert sum(res.assignment.values.values()) == 1

    def test_single_spin(self):
        res = exact_solver(IsingModel({0: 3.0}, {}))
        assert res.assignment.values == {0: -1}
        assert res.energy == -3.0

    def test_empty_model(self):
        res = exact_solver(IsingModel({}, {}, offset=1.5))
        assert res.energy == 1.5

    def test_too_many_variables(self):
        m = IsingModel({i: 1.0 for i in range(30)}, {})
        with pytest.raises(ValueError, match="limited"):
            exact_solver(m)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(1, 10))
            model = (
                random_ising(rng, n) if rng.random() < 0.5 else random_qubo(rng, n)
            )
            res = exact_solver(model)
            _, expected = brute_force_min(model)
            assert res.energy == pytest.approx(expected, abs=1e-9)
            assert evaluate(model, res.assignment) == pytest.approx(expected, abs=1e-9)


class TestTabuSearch:
    def test_single_variable(self):
        res = tabu_search(IsingModel({0: 1.0}, {}), SolveBudget(seed=0, iter_cap=5))
        assert res.assignment.values == {0: -1}
        assert res.energy == -1.0

    def test_zero_model(self):
        res = tabu_search(
            IsingModel({0: 0.0, 1: 0.0}, {}), SolveBudget(seed=0, iter_cap=5)
        )
        assert res.energy == 0.0

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(2)
        for seed in range(15):
            m = random_ising(rng, 12, p=0.4)
            res = tabu_search(m, SolveBudget(seed=seed, iter_cap=50))
            assert res.energy <= res.diagnostics["start_energy"] + 1e-12

    def test_oracle_hit_rate_n16(self):
        # 100 seeded runs on random 16-spin instances, 1e5 iterations each
        rng = np.random.default_rng(3)
        hits = 0
        for seed in range(100):
            m = random_ising(rng, 16, p=0.5)
            ref = exact_solver(m)
            res = tabu_search(m, SolveBudget(seed=seed, iter_cap=100_000))
            hits += res.energy == pytest.approx(ref.energy, abs=1e-9)
        assert hits >= 90

    def test_deterministic_under_iter_cap(self):
        m = random_ising(np.random.default_rng(4), 14, p=0.5)
        a = tabu_search(m, SolveBudget(seed=9, iter_cap=2000))
        b = tabu_search(m, SolveBudget(seed=9, iter_cap=2000))
        assert a.assignment == b.assignment and a.energy == b.energy

    def test_qubo_input_gives_binary_output(self):
        q = random_qubo(np.random.default_rng(5), 8)
        res = tabu_search(q, SolveBudget(seed=1, iter_cap=3000))
        assert res.assignment.kind == "binary"
        assert evaluate(q, res.assignment) == pytest.approx(res.energy, abs=1e-9)

    def test_wall_time_budget_adherence(self):
        m = random_ising(np.random.default_rng(6), 200, p=0.1)
        budget_ms = 300.0
        t0 = time.perf_counter()
        res = tabu_search(m, SolveBudget(seed=0, wall_time_ms=budget_ms))
        elapsed = (time.perf_counter() - t0) * 1e3
        assert elapsed <= 1.10 * budget_ms + 50.0  # 110% plus scheduler grace
        assert res.diagnostics["iterations"] > 0

    def test_requires_some_budget(self):
        with pytest.raises(ValueError, match="budget"):
            tabu_search(IsingModel({0: 1.0}, {}), SolveBudget(seed=0))


class TestSimulatedAnnealing:
    def test_two_spin_ferromagnet_reaches_ground(self):
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): -1.0})
        ss = simulated_annealing(m, shots=100, sweeps=50, seed=7)
        ground = sum(r.count for r in ss.records if r.energy == -1.0)
        assert ground >= 95

    def test_zero_sweeps_forbidden(self):
        m = IsingModel({0: 1.0}, {})
        with pytest.raises(ValueError, match="sweeps"):
            simulated_annealing(m, shots=1, sweeps=0)
        with pytest.raises(ValueError, match="shots"):
            simulated_annealing(m, shots=0, sweeps=1)

    def test_single_spin_bias(self):
        m = IsingModel({0: -2.0}, {})
        ss = simulated_annealing(m, shots=20, sweeps=30, seed=1)
        assert ss.best().assignment.values == {0: 1}

    def test_deterministic(self):
        m = random_ising(np.random.default_rng(8), 10, p=0.5)
        a = simulated_annealing(m, shots=50, sweeps=20, seed=3)
        b = simulated_annealing(m, shots=50, sweeps=20, seed=3)
        assert a == b

    def test_counts_sum_to_shots(self):
        m = random_ising(np.random.default_rng(9), 6, p=0.5)
        ss = simulated_annealing(m, shots=37, sweeps=10, seed=2)
        assert sum(r.count for r in ss.records) == 37

    def test_energies_consistent_with_evaluate(self):
        m = random_ising(np.random.default_rng(10), 8, p=0.6)
        ss = simulated_annealing(m, shots=30, sweeps=15, seed=5)
        for rec in ss.records:
            assert evaluate(m, rec.assignment) == pytest.approx(rec.energy, abs=1e-9)

    def test_reaches_optimum_on_small_instances(self):
        # long schedules hit the exact optimum in nearly every shot on
        # unweighted cut instances; weighted ones may hide the ground state
        # behind multi-flip barriers that single-flip dynamics cannot cross,
        # so per-shot rates are only asserted for the equilibrating kind
        rng = np.random.default_rng(11)
        from oracles import random_source_graph

        for trial in range(8):
            n = int(rng.integers(6, 13))
            gs = random_source_graph(rng, n, 0.5)
            m = gen_maxcut(gs, weighted=False, seed=trial)
            if not m.j:
                continue
            ref = exact_solver(m)
            ss = simulated_annealing(m, shots=100, sweeps=8000, seed=trial)
            hits = sum(
                r.count for r in ss.records if abs(r.energy - ref.energy) < 1e-9
            )
            assert hits >= 99, f"trial {trial}: {hits}/100 shots at optimum"

    def test_beta_range_auto(self):
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): -1.0})
        lo, hi = auto_beta_range(m, sweeps=100)
        assert 0 < lo < hi

    def test_zero_model_samples_uniformly(self):
        m = IsingModel({0: 0.0}, {})
        ss = simulated_annealing(m, shots=10, sweeps=5, seed=0)
        assert sum(r.count for r in ss.records) == 10

    def test_more_sweeps_do_not_hurt_ferromagnet(self):
        # mean best-of-shots energy over 100 repetitions, short vs long anneal
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): -1.0})

        def mean_best(sweeps):
            total = 0.0
            for rep in range(100):
                ss = simulated_annealing(m, shots=4, sweeps=sweeps, seed=rep)
                total += ss.best().energy
            return total / 100

        assert mean_best(50) <= mean_best(1) + 1e-12


class TestSaSolve:
    def test_best_of_shots(self):
        m = random_ising(np.random.default_rng(12), 8, p=0.5)
        res = sa_solve(m, SolveBudget(seed=4, shots=200, sweeps_per_shot=100))
        ref = exact_solver(m)
        assert res.energy == pytest.approx(ref.energy, abs=1e-9)

    def test_needs_shots_and_sweeps(self):
        with pytest.raises(ValueError):
            sa_solve(IsingModel({0: 1.0}, {}), SolveBudget(seed=0, shots=10))


class TestQpuEmulate:
    def test_singleton_chains_reduce_to_plain_sa(self):
        m = IsingModel({0: 0.25, 1: -0.5}, {(0, 1): 0.75})
        gt = build_chimera(1, 1, 1)
        emb = Embedding({0: (0,), 1: (1,)}, gt.graph_hash)
        budget = SolveBudget(seed=6, shots=64, sweeps_per_shot=32)
        res = qpu_emulate(m, emb, gt, budget)
        direct = simulated_annealing(m, 64, 32, seed=6)
        assert res.samples.records == direct.records
        assert res.energy == direct.best().energy
        assert res.diagnostics["chain_break_fraction"] == 0.0

    def test_k8_maxcut_finds_optimum(self):
        gt = build_chimera(2, 2, 4)
        gs, emb = clique_embed_chimera(2, 4, gt)
        m = gen_maxcut(gs, weighted=False, seed=0)
        ref = exact_solver(m)
        res = qpu_emulate(m, emb, gt, SolveBudget(seed=3, shots=5000, sweeps_per_shot=160))
        assert res.energy == pytest.approx(ref.energy, abs=1e-9)
        assert cut_value(gs, m, res.assignment) == 16.0

    def test_zero_chain_strength_rejected(self):
        gt = build_chimera(1, 1, 1)
        emb = Embedding({0: (0,), 1: (1,)}, gt.graph_hash)
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        with pytest.raises(ValueError, match="positive"):
            qpu_emulate(m, emb, gt, SolveBudget(seed=0, shots=1, sweeps_per_shot=1), strength=0.0)

    def test_mis_pipeline_repairs_to_feasible(self):
        gt = build_chimera(2, 2, 4)
        gs, emb = clique_embed_chimera(2, 4, gt)
        q = gen_weighted_mis(gs, seed=5)
        res = qpu_emulate(
            q, emb, gt, SolveBudget(seed=8, shots=200, sweeps_per_shot=50),
            repair_mis=True,
        )
        feasible, weight, _ = mis_check(gs, mis_weights(q), res.assignment)
        assert feasible
        assert res.energy == pytest.approx(-weight, abs=1e-9)

    def test_needs_shot_budget(self):
        gt = build_chimera(1, 1, 1)
        emb = Embedding({0: (0,), 1: (1,)}, gt.graph_hash)
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        with pytest.raises(ValueError, match="shots"):
            qpu_emulate(m, emb, gt, SolveBudget(seed=0))


class TestRandomMis:
    def test_complete_graph_yields_one_node(self):
        gs = SourceGraph.complete(6)
        w = {v: 1.0 for v in gs.nodes}
        res = random_mis(gs, w, shots=20, seed=0)
        assert sum(res.assignment.values.values()) == 1

    def test_empty_graph_takes_all(self):
        gs = SourceGraph.from_edges(range(5), [])
        w = {v: 0.5 for v in gs.nodes}
        res = random_mis(gs, w, shots=3, seed=1)
        assert sum(res.assignment.values.values()) == 5
        assert res.diagnostics["weight"] == 2.5

    def test_path_best_is_both_endpoints(self):
        gs = SourceGraph.from_edges([0, 1, 2], [(0, 1), (1, 2)])
        w = {v: 1.0 for v in gs.nodes}
        res = random_mis(gs, w, shots=64, seed=2)
        assert res.assignment.values == {0: 1, 1: 0, 2: 1}

    def test_always_maximal(self):
        rng = np.random.default_rng(14)
        for trial in range(20):
            n = int(rng.integers(3, 20))
            edges = [
                (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3
            ]
            gs = SourceGraph.from_edges(range(n), edges)
            w = {v: float(rng.integers(1, 129)) / 128 for v in gs.nodes}
            res = random_mis(gs, w, shots=5, seed=trial)
            sel = {v for v, b in res.assignment.values.items() if b}
            for v in gs.nodes - sel:
                assert any(u in sel for u in gs.adjacency[v]), "not maximal"


class TestMisRepair:
    def test_feasible_input_unchanged(self):
        gs = SourceGraph.from_edges([0, 1, 2], [(0, 1), (1, 2)])
        x = Assignment({0: 1, 1: 0, 2: 1}, "binary")
        w = {0: 1.0, 1: 0.5, 2: 0.25}
        assert mis_repair(gs, w, x, seed=0) == x

    def test_heavier_endpoint_kept(self):
        gs = SourceGraph.from_edges([0, 1], [(0, 1)])
        x = Assignment({0: 1, 1: 1}, "binary")
        out = mis_repair(gs, {0: 1.0, 1: 0.25}, x, seed=0)
        assert out.values == {0: 1, 1: 0}

    def test_triangle_output_feasible(self):
        gs = SourceGraph.complete(3)
        w = {0: 1.0, 1: 0.75, 2: 0.5}
        out = mis_repair(gs, w, Assignment({0: 1, 1: 1, 2: 1}, "binary"), seed=3)
        feasible, _, _ = mis_check(gs, w, out)
        assert feasible

    def test_only_removals_and_fixpoint(self):
        rng = np.random.default_rng(15)
        for trial in range(30):
            n = int(rng.integers(2, 15))
            edges = [
                (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4
            ]
            gs = SourceGraph.from_edges(range(n), edges)
            w = {v: float(rng.integers(1, 129)) / 128 for v in gs.nodes}
            x = Assignment({v: int(rng.integers(2)) for v in gs.nodes}, "binary")
            out = mis_repair(gs, w, x, seed=trial)
            assert all(out.values[v] <= x.values[v] for v in gs.nodes)
            feasible, _, _ = mis_check(gs, w, out)
            assert feasible
            assert mis_repair(gs, w, out, seed=trial + 1) == out
