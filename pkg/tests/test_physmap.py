import math

import numpy as np
import pytest

from qabench.embedding import (
    Embedding,
    EmbeddingError,
    clique_embed_chimera,
    generate_family,
)
from qabench.physmap import (
    SampleRecord,
    SampleSet,
    chain_break_fraction,
    embed_assignment,
    embed_problem,
    load_sampleset,
    save_sampleset,
    torque_compensation_strength,
    unembed_majority,
)
from qabench.problems import Assignment, IsingModel, evaluate, gen_maxcut
from qabench.topology import TargetGraph, build_chimera

from oracles import random_ising


def path_target(n):
    return TargetGraph.from_parts(range(n), [(i, i + 1) for i in range(n - 1)])


def spin(values):
    return Assignment(values, "spin")


class TestEmbedProblem:
    def test_singleton_chains_are_identity(self):
        gt = path_target(2)
        emb = Embedding({0: (0,), 1: (1,)}, gt.graph_hash)
        m = IsingModel({0: 0.5, 1: -0.25}, {(0, 1): 1.0})
        pm = embed_problem(m, emb, gt, strength=2.0)
        assert pm.model.h == m.h
        assert pm.model.j == m.j
        assert not pm.chain_edges

    def test_bias_spread_over_chain(self):
        gt = path_target(4)
        emb = Embedding({0: (0, 1, 2, 3)}, gt.graph_hash)
        m = IsingModel({0: 1.0}, {})
        pm = embed_problem(m, emb, gt, strength=1.0)
        assert pm.model.h == {0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25}
        assert len(pm.chain_edges) == 3
        assert all(pm.model.j[e] == -1.0 for e in pm.chain_edges)

    def test_coupling_spread_over_two_couplers(self):
        # two chains joined by two parallel couplers
        gt = TargetGraph.from_parts(
            [0, 1, 2, 3], [(0, 1), (2, 3), (0, 2), (1, 3)]
        )
        emb = Embedding({0: (0, 1), 1: (2, 3)}, gt.graph_hash)
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        pm = embed_problem(m, emb, gt, strength=3.0)
        assert pm.model.j[(0, 2)] == 0.5
        assert pm.model.j[(1, 3)] == 0.5
        assert pm.model.j[(0, 1)] == -3.0
        assert pm.model.j[(2, 3)] == -3.0

    def test_conservation_on_random_instances(self):
        gt = build_chimera(2, 2, 4)
        gs, emb = clique_embed_chimera(2, 4, gt)
        rng = np.random.default_rng(0)
        for trial in range(10):
            m = random_ising(rng, 8, p=0.9)
            pm = embed_problem(m, emb, gt, strength=1.5)
            for v, bias in m.h.items():
                spread = sum(pm.model.h[p] for p in emb.chains[v])
                assert spread == pytest.approx(bias, abs=1e-12)
            for (u, v), coupling in m.j.items():
                side = set(emb.chains[v])
                total = sum(
                    c
                    for (p, q), c in pm.model.j.items()
                    if (p, q) not in pm.chain_edges
                    and ((p in side) != (q in side))
                    and {p, q} <= set(emb.chains[u]) | side
                )
                assert total == pytest.approx(coupling, abs=1e-12)

    def test_zero_strength_rejected(self):
        gt = path_target(2)
        emb = Embedding({0: (0,), 1: (1,)}, gt.graph_hash)
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        with pytest.raises(ValueError, match="positive"):
            embed_problem(m, emb, gt, strength=0.0)

    def test_invalid_embedding_rejected(self):
        gt = TargetGraph.from_parts([0, 1, 2, 3], [(0, 1), (2, 3)])
        emb = Embedding({0: (0,), 1: (2,)}, gt.graph_hash)
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        with pytest.raises(EmbeddingError):
            embed_problem(m, emb, gt, strength=1.0)

    def test_energy_identity_intact_chains(self):
        gt = build_chimera(2, 2, 4)
        start = clique_embed_chimera(2, 4, gt)
        fam = generate_family(start, gt, ["0.8", "0.6"], 3, seed=1)
        rng = np.random.default_rng(2)
        checked = 0
        for inst in fam.instances:
            m = gen_maxcut(inst.source, weighted=True, seed=int(rng.integers(2**31)))
            strength = 2.0
            pm = embed_problem(m, inst.emb, gt, strength)
            for _ in range(4):
                bits = {
                    v: int(rng.integers(0, 2)) * 2 - 1 for v in inst.source.nodes
                }
                logical = spin(bits)
                physical = embed_assignment(logical, inst.emb)
                expected = evaluate(m, logical) - strength * len(pm.chain_edges)
                assert evaluate(pm.model, physical) == pytest.approx(expected, abs=1e-9)
                checked += 1
        assert checked >= 24


class TestTorqueCompensation:
    def test_three_regular_unit_couplings(self):
        gs_edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        m = IsingModel({v: 0.0 for v in range(4)}, {e: 1.0 for e in gs_edges})
        assert torque_compensation_strength(m) == pytest.approx(
            1.414 * math.sqrt(3.0), abs=1e-12
        )

    def test_single_edge(self):
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): 1.0})
        assert torque_compensation_strength(m) == pytest.approx(1.414, abs=1e-12)

    def test_prefactor_linearity(self):
        m = IsingModel({0: 0.0, 1: 0.0}, {(0, 1): -0.5})
        assert torque_compensation_strength(m, prefactor=0.5) == pytest.approx(
            0.5 * torque_compensation_strength(m, prefactor=1.0), abs=1e-12
        )

    def test_no_couplings_rejected(self):
        with pytest.raises(ValueError):
            torque_compensation_strength(IsingModel({0: 1.0}, {}))


class TestUnembedMajority:
    def make(self, chain):
        gt = path_target(len(chain))
        return Embedding({0: tuple(range(len(chain)))}, gt.graph_hash)

    def test_unanimous_chain(self):
        emb = self.make((1, 1, 1))
        a, broken = unembed_majority(spin({0: 1, 1: 1, 2: 1}), emb)
        assert a.values == {0: 1}
        assert not broken

    def test_majority_of_three(self):
        emb = self.make((1, 1, -1))
        a, broken = unembed_majority(spin({0: 1, 1: 1, 2: -1}), emb)
        assert a.values == {0: 1}
        assert broken == {0}

    def test_tie_coin_is_deterministic(self):
        emb = self.make((1, -1))
        outcomes = {
            seed: unembed_majority(spin({0: 1, 1: -1}), emb, seed=seed)[0].values[0]
            for seed in range(20)
        }
        again = {
            seed: unembed_majority(spin({0: 1, 1: -1}), emb, seed=seed)[0].values[0]
            for seed in range(20)
        }
        assert outcomes == again
        assert set(outcomes.values()) == {-1, 1}  # the coin is actually fair-ish

    def test_missing_physical_value(self):
        emb = self.make((1, 1))
        with pytest.raises(KeyError, match="missing physical"):
            unembed_majority(spin({0: 1}), emb)

    def test_roundtrip_identity(self):
        gt = build_chimera(2, 2, 4)
        gs, emb = clique_embed_chimera(2, 4, gt)
        rng = np.random.default_rng(5)
        for _ in range(10):
            logical = spin({v: int(rng.integers(0, 2)) * 2 - 1 for v in gs.nodes})
            physical = embed_assignment(logical, emb)
            back, broken = unembed_majority(physical, emb)
            assert back == logical
            assert not broken


class TestChainBreakFraction:
    def make_ss(self, records, shots):
        return SampleSet(tuple(records), shots, sweeps=1, seed=0, space="physical")

    def test_all_intact(self):
        gt = path_target(4)
        emb = Embedding({0: (0, 1), 1: (2, 3)}, gt.graph_hash)
        ss = self.make_ss(
            [SampleRecord(spin({0: 1, 1: 1, 2: -1, 3: -1}), 0.0, 2)], shots=2
        )
        assert chain_break_fraction(ss, emb) == 0.0

    def test_all_broken(self):
        gt = path_target(4)
        emb = Embedding({0: (0, 1), 1: (2, 3)}, gt.graph_hash)
        ss = self.make_ss(
            [SampleRecord(spin({0: 1, 1: -1, 2: -1, 3: 1}), 0.0, 3)], shots=3
        )
        assert chain_break_fraction(ss, emb) == 1.0

    def test_weighted_quarter(self):
        gt = path_target(4)
        emb = Embedding({0: (0, 1), 1: (2, 3)}, gt.graph_hash)
        ss = self.make_ss(
            [
                SampleRecord(spin({0: 1, 1: -1, 2: 1, 3: 1}), 0.0, 2),
                SampleRecord(spin({0: 1, 1: 1, 2: 1, 3: 1}), 0.0, 2),
            ],
            shots=4,
        )
        assert chain_break_fraction(ss, emb) == 0.25

    def test_logical_samples_rejected(self):
        gt = path_target(2)
        emb = Embedding({0: (0, 1)}, gt.graph_hash)
        ss = SampleSet(
            (SampleRecord(spin({0: 1}), 0.0, 1),), 1, sweeps=1, seed=0, space="logical"
        )
        with pytest.raises(ValueError, match="physical"):
            chain_break_fraction(ss, emb)


class TestSampleSetIO:
    def test_roundtrip(self, tmp_path):
        ss = SampleSet(
            (
                SampleRecord(spin({0: 1, 1: -1}), -1.25, 3),
                SampleRecord(spin({0: -1, 1: -1}), 0.5, 1),
            ),
            shots=4,
            sweeps=7,
            seed=9,
            space="physical",
        )
        path = tmp_path / "ss.json"
        save_sampleset(ss, path)
        assert load_sampleset(path) == ss

    def test_count_invariant(self):
        with pytest.raises(ValueError, match="sum"):
            SampleSet(
                (SampleRecord(spin({0: 1}), 0.0, 1),), shots=2, sweeps=1, seed=0,
                space="logical",
            )
