import networkx as nx
import numpy as np
import pytest

from lsngc.core import derive_rng
from lsngc.errors import DivergedTrajectory
from lsngc.simulate import (
    MODELS,
    ZACHARY_EDGES,
    SimulationSpec,
    five_node_recursion,
    gen_five_node,
    gen_three_node,
    gen_two_logistic,
    gen_zachary,
    generate,
    zachary_network,
    zachary_recursion,
)


def test_two_logistic_one_step():
    ens, truth = gen_two_logistic(SimulationSpec("two_logistic", T=10, burn_in=0), initial=[0.5, 0.5])
    assert ens.data[0, 1] == pytest.approx(0.5 * (3.7 - 3.7 * 0.5))
    assert ens.data[0, 1] == pytest.approx(0.925)
    assert ens.data[1, 1] == pytest.approx(0.87)
    np.testing.assert_array_equal(truth.edges, [[0, 1], [0, 0]])


def test_two_logistic_zero_fixed_point():
    ens, _ = gen_two_logistic(SimulationSpec("two_logistic", T=50, burn_in=5), initial=[0.0, 0.0])
    assert not ens.data.any()


def test_two_logistic_divergence_reports_seed():
    spec = SimulationSpec("two_logistic", T=50, seed=11, overrides={"r1": 6.0})
    with pytest.raises(DivergedTrajectory) as info:
        gen_two_logistic(spec, initial=[0.9, 0.1])
    assert info.value.seed == 11
    assert "seed=11" in str(info.value)


def test_three_node_truth():
    _, out = gen_three_node(SimulationSpec("three_fan_out"), "fan_out")
    assert out.n_edges == 2 and out.edges[0, 1] and out.edges[0, 2]
    assert not out.edges[1, 2] and not out.edges[2, 1]
    _, inn = gen_three_node(SimulationSpec("three_fan_in"), "fan_in")
    assert inn.n_edges == 2 and inn.edges[0, 2] and inn.edges[1, 2]


def test_three_node_fixed_point():
    ens, _ = gen_three_node(SimulationSpec("three_fan_in", T=40), "fan_in", initial=[0.0, 0.0, 0.0])
    assert not ens.data.any()


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_three_node_x1_shared(seed):
    try:
        a, _ = gen_three_node(SimulationSpec("three_fan_out", seed=seed), "fan_out")
        b, _ = gen_three_node(SimulationSpec("three_fan_in", seed=seed), "fan_in")
    except DivergedTrajectory:
        pytest.skip("diverged seed")
    np.testing.assert_array_equal(a.data[0], b.data[0])


def test_five_node_truth_shared():
    _, lin = gen_five_node(SimulationSpec("five_linear"), "linear")
    _, non = gen_five_node(SimulationSpec("five_nonlinear"), "nonlinear")
    np.testing.assert_array_equal(lin.edges, non.edges)
    expected = {(0, 1), (0, 2), (0, 3), (3, 4), (4, 3)}
    assert set(zip(*np.nonzero(lin.edges))) == expected


def test_five_node_zero_drive():
    spec = SimulationSpec("five_nonlinear", T=30, burn_in=10)
    for variant in ("linear", "nonlinear"):
        ens, _ = gen_five_node(spec, variant, innovations=np.zeros((5, 40)))
        assert not ens.data.any()


def test_five_node_nonlinear_parity():
    w = np.random.default_rng(0).standard_normal((5, 300))
    flipped = w.copy()
    flipped[0] *= -1
    a = five_node_recursion(w, nonlinear=True)
    b = five_node_recursion(flipped, nonlinear=True)
    np.testing.assert_allclose(b[0], -a[0], atol=1e-12)
    np.testing.assert_allclose(b[1], a[1], atol=1e-12)
    assert not np.allclose(b[2], a[2])


def test_zachary_table_matches_networkx():
    g = nx.karate_club_graph()
    ours = {tuple(sorted(e)) for e in ZACHARY_EDGES}
    ref = {tuple(sorted((u + 1, v + 1))) for u, v in g.edges()}
    assert ours == ref and len(ours) == 78


def test_zachary_edge_counts():
    und = zachary_network("undirected")
    assert und.n_edges == 156 and not und.directed
    for seed in range(5):
        d = zachary_network("directed", derive_rng(seed, "simulate", "zachary/network"))
        assert d.n_edges == 83
        mutual = np.sum(d.edges & d.edges.T) // 2
        assert mutual == 5
        assert np.all(np.diag(d.edges) == 0)


def test_zachary_synchronized_start():
    spec = SimulationSpec("zachary_directed", T=30, burn_in=0, overrides={"s": 0.0})
    ens, _ = gen_zachary(spec, "directed", initial=np.full(34, 0.3))
    ref = [0.3]
    for _ in range(29):
        ref.append(1 - 1.8 * ref[-1] ** 2)
    for row in ens.data:
        np.testing.assert_allclose(row, ref, atol=1e-12)


def test_zachary_recursion_coupling_cancels():
    coupling = 0.05 * zachary_network("undirected").edges.T
    x = zachary_recursion(np.full(34, -0.2), coupling, 1.8, 0.0, np.zeros((34, 10)))
    assert np.ptp(x, axis=0).max() < 1e-12


@pytest.mark.parametrize("model", MODELS)
def test_generators_deterministic_and_sized(model):
    spec = SimulationSpec(model, T=120, seed=5)
    try:
        a, ta = generate(spec)
    except DivergedTrajectory:
        pytest.skip("diverged seed")
    b, tb = generate(spec)
    assert a.data.shape[1] == 120
    assert np.array_equal(a.data, b.data) and np.array_equal(ta.edges, tb.edges)
    assert np.all(np.isfinite(a.data))
    assert not np.diag(ta.edges).any()


def test_spec_validation():
    with pytest.raises(ValueError):
        SimulationSpec("nope")
    with pytest.raises(ValueError):
        SimulationSpec("two_logistic", T=5)
    with pytest.raises(ValueError):
        SimulationSpec("two_logistic", burn_in=-1)
