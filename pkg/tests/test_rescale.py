import pytest

from qabench.embedding import clique_embed_chimera
from qabench.physmap import (
    embed_problem,
    load_physical_model,
    rescale_physical,
    save_physical_model,
)
from qabench.problems import gen_maxcut
from qabench.solvers import SolveBudget, exact_solver, qpu_emulate
from qabench.topology import build_chimera


def embedded_k8():
    gt = build_chimera(2, 2, 4)
    gs, emb = clique_embed_chimera(2, 4, gt)
    m = gen_maxcut(gs, weighted=True, seed=4)
    return gt, gs, emb, m, embed_problem(m, emb, gt, strength=3.0)


def test_rescale_bounds_coefficients():
    _, _, _, _, pm = embedded_k8()
    scaled = rescale_physical(pm)
    mags = [abs(c) for c in scaled.model.h.values()]
    mags += [abs(c) for c in scaled.model.j.values()]
    assert max(mags) == pytest.approx(1.0)
    assert all(m <= 1.0 + 1e-12 for m in mags)


def test_rescale_preserves_energy_ordering():
    _, _, _, _, pm = embedded_k8()
    scaled = rescale_physical(pm)
    # proportional coefficients: same argmin, proportional optimum
    raw = exact_solver(pm.model)
    low = exact_solver(scaled.model)
    factor = pm.chain_strength / scaled.chain_strength
    assert raw.energy == pytest.approx(low.energy * factor, rel=1e-9)


def test_qpu_emulate_rescale_flag_still_solves():
    gt, gs, emb, m, _ = embedded_k8()
    ref = exact_solver(m)
    res = qpu_emulate(
        m, emb, gt, SolveBudget(seed=1, shots=2000, sweeps_per_shot=160), rescale=True
    )
    assert res.energy == pytest.approx(ref.energy, abs=1e-9)


def test_physical_model_roundtrip(tmp_path):
    _, _, _, _, pm = embedded_k8()
    path = tmp_path / "pm.json"
    save_physical_model(pm, path)
    back = load_physical_model(path)
    assert back == pm
