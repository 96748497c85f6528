import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from paulilearn.graph import (
    build_graph,
    cut_space,
    cycle_space,
    is_learnable,
    learnable_basis_report,
    learnable_individual,
)
from paulilearn.pauli import PauliOp, cnot, conjugate, library_gate, random_clifford, swap

CNOT_LEARNABLE = {"II", "ZI", "IX", "ZX", "XZ", "YY", "XY", "YZ"}
SWAP_LEARNABLE = {"II", "XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"}


def support(label):
    return tuple(ch != "I" for ch in label.lstrip("+-"))


def udf_by_union_find(gates):
    """|V| minus the number of components of the pattern graph, computed directly."""
    n = gates[0].n
    parent = list(range(2**n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for g in gates:
        for a in range(4**n):
            p = PauliOp.from_index(a, n)
            u = sum(1 << j for j, s in enumerate(support(p.label)) if s)
            w = sum(1 << j for j, s in enumerate(support(conjugate(g, p).label)) if s)
            parent[find(u)] = find(w)
    return 2**n - len({find(v) for v in range(2**n)})


TABLE = [
    (["CNOT"], 2, 16, 2),
    (["SWAP"], 2, 16, 1),
    (["CNOT", "SWAP"], 2, 32, 2),
    (["CNOT_01", "CNOT_12", "CNOT_20"], 3, 192, 6),
    (["CIRC3"], 3, 64, 4),
]


@pytest.mark.parametrize("names,n,edges,udf", TABLE)
def test_edge_and_unlearnable_counts(names, n, edges, udf):
    gates = [library_gate(x, n) for x in names]
    t0 = time.perf_counter()
    rep = learnable_basis_report(build_graph(gates))
    assert time.perf_counter() - t0 < 1.0
    assert (rep.num_edges, rep.udf) == (edges, udf)
    assert rep.udf == udf_by_union_find(gates)
    assert rep.ldf + rep.udf == rep.num_edges


@pytest.mark.parametrize("names,n,edges,udf", TABLE)
def test_cycle_and_cut_spaces_are_complementary(names, n, edges, udf):
    g = build_graph([library_gate(x, n) for x in names])
    cyc, cut = cycle_space(g), cut_space(g)
    assert cyc.dim + cut.dim == g.num_edges
    assert np.allclose(cyc.vectors @ cut.vectors.T, 0)
    assert np.linalg.matrix_rank(np.vstack([cyc.vectors, cut.vectors])) == g.num_edges
    assert cut.dim == udf


def test_cnot_individual_fidelities():
    rep = learnable_basis_report(build_graph([cnot()]))
    tab = rep.individual["CNOT"]
    assert {k for k, v in tab.items() if v} == CNOT_LEARNABLE
    assert rep.ldf == 14
    # the reported basis spans the whole cycle space
    assert np.linalg.matrix_rank(rep.cycle_vectors) == 14


def test_swap_individual_fidelities():
    rep = learnable_basis_report(build_graph([swap()]))
    assert {k for k, v in rep.individual["SWAP"].items() if v} == SWAP_LEARNABLE


def test_cnot_named_functionals():
    g = build_graph([cnot()])
    f = g.functional
    assert is_learnable(g, f({(0, "IZ"): 1, (0, "ZY"): 1}))
    assert is_learnable(g, f({(0, "XI"): 1, (0, "YX"): 1}))
    assert not is_learnable(g, f({(0, "IZ"): 1}))
    assert not is_learnable(g, f({(0, "XX"): 1, (0, "ZZ"): -1}))
    with pytest.raises(ValueError):
        is_learnable(g, np.ones(3))


def test_adding_a_gate_never_lowers_unlearnable_count():
    single = learnable_basis_report(build_graph([swap()])).udf
    both = learnable_basis_report(build_graph([cnot(), swap()])).udf
    assert both >= single


def test_cnot_basis_is_walsh_hadamard_invariant():
    rep = learnable_basis_report(build_graph([cnot()]))
    assert rep.wht_invariant
    assert len(rep.error_basis) == rep.ldf


def test_report_serializations():
    rep = learnable_basis_report(build_graph([cnot()]))
    js = rep.to_json()
    assert js["udf"] == 2 and js["num_edges"] == 16
    md = rep.to_markdown()
    assert "UDF" in md and "XZ" in md
    dot = rep.to_dot()
    assert dot.startswith("digraph") and '"10" -> "11"' in dot


@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_single_edge_learnable_iff_pattern_preserved(seed, n):
    g = random_clifford(n, np.random.default_rng(seed))
    graph = build_graph([g])
    for a in range(4**n):
        p = PauliOp.from_index(a, n)
        preserved = support(conjugate(g, p).label) == support(p.label)
        assert bool(is_learnable(graph, graph.functional({(0, p.label): 1}))) == preserved
        assert learnable_individual(g, p) == preserved
