import numpy as np
import pytest
from hypothesis import given, strategies as st

from paulilearn.cbsim import dense_expectation
from paulilearn.channel import NoiseModel, PauliChannel
from paulilearn.gauge import (
    GaugeTransform,
    GaugeWindowError,
    apply_gauge,
    certify_indistinguishable,
    default_eta,
    validity_window,
)
from paulilearn.graph import build_graph, cycle_space
from paulilearn.pauli import PauliOp, cnot, random_clifford, single_qubit_cliffords, swap, tensor_layer

GATES = [cnot(), swap()]


def random_model(rng, names=("CNOT", "SWAP")):
    ch = lambda s: PauliChannel.random(2, rng, s, floor=0.5)
    return NoiseModel(2, ch(0.02), ch(0.03), {g: ch(0.05) for g in names})


def edge_log_fidelities(m, graph):
    return np.array([np.log(m.gate(graph.gates[graph.edge_gate(e)].name).lambdas[graph.edge_pauli(e)])
                     for e in range(graph.num_edges)])


GAUGES = [
    GaugeTransform.depolarizing(0),
    GaugeTransform.depolarizing(1),
    GaugeTransform.cut(["10"]),
    GaugeTransform.cut(["01", "11"]),
    GaugeTransform.composite([GaugeTransform.depolarizing(0), GaugeTransform.cut(["11"])]),
]


@pytest.mark.parametrize("t", GAUGES)
def test_gauge_preserves_every_outcome_distribution(t, rng):
    m = random_model(rng)
    gm = apply_gauge(m, t, GATES)
    assert not np.allclose(gm.sp.lambdas, m.sp.lambdas) or not np.allclose(
        gm.gate("CNOT").lambdas, m.gate("CNOT").lambdas)
    rep = certify_indistinguishable(m, gm, GATES, trials=100, seed=3)
    assert rep.indistinguishable, rep.worst
    assert rep.max_deviation < 1e-12


@pytest.mark.parametrize("t", GAUGES)
def test_gauge_preserves_cycle_functionals(t, rng):
    m = random_model(rng)
    gm = apply_gauge(m, t, GATES)
    graph = build_graph(GATES)
    cyc = cycle_space(graph).vectors
    d = cyc @ (edge_log_fidelities(gm, graph) - edge_log_fidelities(m, graph))
    assert np.max(np.abs(d)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_gauge_invisible_to_dense_circuits(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    gm = apply_gauge(m, GAUGES[int(rng.integers(len(GAUGES)))], GATES)
    sq = single_qubit_cliffords()
    layers, noisy = [], []
    for _ in range(int(rng.integers(1, 7))):
        if rng.random() < 0.5:
            layers.append(GATES[int(rng.integers(2))])
            noisy.append(True)
        else:
            layers.append(tensor_layer([sq[int(i)] for i in rng.integers(24, size=2)]))
            noisy.append(False)
    prep = PauliOp.from_index(int(rng.integers(1, 16)), 2)
    _, a = dense_expectation(m, prep, layers, noisy)
    _, b = dense_expectation(gm, prep, layers, noisy)
    assert abs(a - b) < 1e-12


def test_learnable_change_is_detected(rng):
    m = random_model(rng)
    lam = m.gate("CNOT").lambdas.copy()
    lam[PauliOp.from_label("ZX").index] *= 0.999
    other = m.replace(gates={**m.gates, "CNOT": PauliChannel(2, lam)})
    rep = certify_indistinguishable(m, other, GATES, trials=50)
    assert not rep.indistinguishable
    assert rep.to_json()["indistinguishable"] is False


def test_gauge_moves_unlearnable_fidelity(rng):
    m = random_model(rng)
    gm = apply_gauge(m, GaugeTransform.depolarizing(0), [cnot(), swap()])
    xi = PauliOp.from_label("XI").index
    assert gm.sp.lambdas[xi] != pytest.approx(m.sp.lambdas[xi], abs=1e-6)


def test_window_and_default_eta(rng):
    m = random_model(rng)
    lo, hi = validity_window(m)
    p_min = m.min_error_rate()
    assert (lo, hi) == pytest.approx((1 / (1 + p_min), 1 + p_min))
    assert lo < default_eta(m) < 1
    with pytest.raises(GaugeWindowError):
        apply_gauge(m, GaugeTransform.depolarizing(0, eta=hi + 0.01), GATES)
    same = apply_gauge(m, GaugeTransform.depolarizing(0, eta=1.0), GATES)
    assert np.allclose(same.sp.lambdas, m.sp.lambdas)


def test_zero_error_rate_closes_window():
    m = NoiseModel.noiseless(2, ["CNOT"])
    assert validity_window(m) == (1.0, 1.0)
    with pytest.raises(GaugeWindowError):
        apply_gauge(m, GaugeTransform.cut(["11"]), [cnot()])


def test_gauge_rejects_unknown_gates(rng):
    m = random_model(rng)
    with pytest.raises(ValueError):
        apply_gauge(m, GaugeTransform.depolarizing(0), [cnot()])
    with pytest.raises(ValueError):
        GaugeTransform("rotate")


def test_gauge_json_roundtrip():
    t = GaugeTransform.composite([GaugeTransform.depolarizing(1, 0.99), GaugeTransform.cut(["01"], 0.995)])
    back = GaugeTransform.from_json(t.to_json())
    assert back == t
    assert np.allclose(back.factors(2), t.factors(2))


def test_cut_factors_keep_identity_fixed():
    for t in [GaugeTransform.cut(["00", "01"], 0.9), GaugeTransform.cut(["11"], 0.9)]:
        assert t.factors(2)[0] == 1.0


@given(st.integers(0, 2**32 - 1))
def test_random_clifford_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_clifford(2, rng)
    g = g.renamed("G")
    m = NoiseModel(2, PauliChannel.random(2, rng, 0.02, floor=0.5),
                   PauliChannel.random(2, rng, 0.02, floor=0.5),
                   {"G": PauliChannel.random(2, rng, 0.05, floor=0.5)})
    gm = apply_gauge(m, GaugeTransform.cut(["10"]), [g])
    assert certify_indistinguishable(m, gm, [g], trials=20, seed=seed % 1000).max_deviation < 1e-12
