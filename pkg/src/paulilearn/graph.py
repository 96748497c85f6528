"""Pattern transfer graph: components, cycle and cut spaces, learnability."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .channel import wht
from .pauli import (
    CliffordGate,
    PauliOp,
    conjugate,
    index_label,
    pattern_of_index,
    pattern_str,
)

__all__ = [
    "MAX_GRAPH_QUBITS",
    "PatternGraph",
    "SpaceBasis",
    "Learnability",
    "BasisElement",
    "LearnableReport",
    "build_graph",
    "components",
    "cycle_space",
    "cut_space",
    "is_learnable",
    "learnable_individual",
    "learnable_basis_report",
    "every_edge_on_circuit",
]

MAX_GRAPH_QUBITS = 12
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PatternGraph:
    """Directed multigraph on the 2^n patterns, one edge per (gate, Pauli).

    Edge e = g * 4^n + a goes from pt(P_a) to pt(G_g(P_a)).
    """

    n: int
    gates: tuple[CliffordGate, ...]
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)

    @property
    def num_vertices(self) -> int:
        return 2**self.n

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def gate_names(self) -> list[str]:
        return [g.name for g in self.gates]

    def edge_index(self, gate: int | str, pauli: int | str | PauliOp) -> int:
        gi = self.gate_names.index(gate) if isinstance(gate, str) else int(gate)
        if isinstance(pauli, str):
            pauli = PauliOp.from_label(pauli)
        a = pauli.index if isinstance(pauli, PauliOp) else int(pauli)
        if not 0 <= gi < len(self.gates) or not 0 <= a < 4**self.n:
            raise IndexError(f"no edge for gate {gate!r}, Pauli {pauli!r}")
        return gi * 4**self.n + a

    def edge_gate(self, e: int) -> int:
        return e // 4**self.n

    def edge_pauli(self, e: int) -> int:
        return e % 4**self.n

    def edge_name(self, e: int, with_gate: bool | None = None) -> str:
        if with_gate is None:
            with_gate = len(self.gates) > 1
        lab = "l_" + index_label(self.edge_pauli(e), self.n)
        return f"{lab}^{self.gates[self.edge_gate(e)].name}" if with_gate else lab

    def functional(self, terms: Mapping[tuple[int | str, str], float] | Sequence) -> np.ndarray:
        """Edge functional from {(gate, label): coeff} or [(gate, label), ...] (coeff 1)."""
        v = np.zeros(self.num_edges)
        items = terms.items() if isinstance(terms, Mapping) else ((t, 1.0) for t in terms)
        for (gate, label), c in items:
            v[self.edge_index(gate, label)] += c
        return v

    @cached_property
    def _components(self) -> tuple[int, np.ndarray]:
        nv = self.num_vertices
        adj = coo_matrix((np.ones(self.num_edges), (self.src, self.dst)), shape=(nv, nv))
        return connected_components(adj, directed=True, connection="weak")

    @cached_property
    def _incidence(self):
        """Sparse |V| x |E| signed incidence (+1 source, -1 target; loops vanish)."""
        e = np.arange(self.num_edges)
        loop = self.src == self.dst
        rows = np.concatenate([self.src[~loop], self.dst[~loop]])
        cols = np.concatenate([e[~loop], e[~loop]])
        vals = np.concatenate([np.ones((~loop).sum()), -np.ones((~loop).sum())])
        return coo_matrix((vals, (rows, cols)), shape=(self.num_vertices, self.num_edges)).tocsr()

    @cached_property
    def _laplacian_pinv(self) -> np.ndarray:
        b = self._incidence
        return np.linalg.pinv((b @ b.T).toarray(), hermitian=True)

    def cut_projection(self, f: np.ndarray) -> np.ndarray:
        """Orthogonal projection of an edge functional onto the cut space."""
        b = self._incidence
        return b.T @ (self._laplacian_pinv @ (b @ f))


def build_graph(gates: Sequence[CliffordGate]) -> PatternGraph:
    gates = tuple(gates)
    if not gates:
        raise ValueError("gate set is empty")
    n = gates[0].n
    if any(g.n != n for g in gates):
        raise ValueError("all gates in a gate set must act on the same number of qubits")
    if n > MAX_GRAPH_QUBITS:
        raise ValueError(f"pattern graph refused for n={n} > {MAX_GRAPH_QUBITS} qubits")
    names = [g.name for g in gates]
    if len(set(names)) != len(names):
        raise ValueError(f"gate names must be unique, got {names}")
    idx = np.arange(4**n, dtype=np.int64)
    src_pat = pattern_of_index(idx, n)
    src = np.concatenate([src_pat] * len(gates))
    dst = np.concatenate([pattern_of_index(g.unsigned_images(), n) for g in gates])
    src.setflags(write=False)
    dst.setflags(write=False)
    return PatternGraph(n, gates, src, dst)


def components(g: PatternGraph) -> tuple[list[list[int]], int]:
    """Weakly connected components (sorted vertex lists) and their count."""
    c, labels = g._components
    comps: dict[int, list[int]] = {}
    for v in range(g.num_vertices):
        comps.setdefault(int(labels[v]), []).append(v)
    ordered = sorted(comps.values(), key=lambda vs: vs[0])
    return ordered, int(c)


def every_edge_on_circuit(g: PatternGraph) -> bool:
    """True iff each edge joins two vertices of the same strongly connected component."""
    nv = g.num_vertices
    adj = coo_matrix((np.ones(g.num_edges), (g.src, g.dst)), shape=(nv, nv))
    _, labels = connected_components(adj, directed=True, connection="strong")
    return bool(np.all(labels[g.src] == labels[g.dst]))


@dataclass(frozen=True, eq=False)
class SpaceBasis:
    kind: str  # "cycle" or "cut"
    vectors: np.ndarray = field(repr=False)  # dim x |E|

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def _spanning_forest(g: PatternGraph):
    """BFS forest; parent edge per vertex (-1 at roots) and the root list."""
    nv = g.num_vertices
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for e in range(g.num_edges):
        u, v = int(g.src[e]), int(g.dst[e])
        if u != v:
            nbrs[u].append((e, v))
            nbrs[v].append((e, u))
    parent_edge = np.full(nv, -1, dtype=np.int64)
    seen = np.zeros(nv, dtype=bool)
    roots = []
    for r in range(nv):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = [r]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            for e, w in sorted(nbrs[u]):
                if not seen[w]:
                    seen[w] = True
                    parent_edge[w] = e
                    queue.append(w)
    return parent_edge, roots


def _path_to_root(g: PatternGraph, parent_edge: np.ndarray, v: int, vec: np.ndarray, sign: float):
    """Add sign * (walk from v up to its root) to vec."""
    while parent_edge[v] >= 0:
        e = parent_edge[v]
        if g.src[e] == v:  # edge points from child to parent
            vec[e] += sign
            v = int(g.dst[e])
        else:
            vec[e] -= sign
            v = int(g.src[e])


def cycle_space(g: PatternGraph) -> SpaceBasis:
    """Fundamental cycles of a BFS spanning forest, entries in {-1, 0, 1}."""
    parent_edge, _ = _spanning_forest(g)
    tree = set(int(e) for e in parent_edge if e >= 0)
    vecs = []
    for e in range(g.num_edges):
        if e in tree:
            continue
        vec = np.zeros(g.num_edges)
        vec[e] = 1.0
        u, v = int(g.src[e]), int(g.dst[e])
        if u != v:
            # e takes u -> v; close the loop v -> root -> u through the tree
            _path_to_root(g, parent_edge, v, vec, 1.0)
            _path_to_root(g, parent_edge, u, vec, -1.0)
        vecs.append(vec)
    arr = np.array(vecs).reshape(len(vecs), g.num_edges)
    arr.setflags(write=False)
    return SpaceBasis("cycle", arr)


def cut_space(g: PatternGraph) -> SpaceBasis:
    """Single-vertex cuts for every vertex except one root per component."""
    comps, _ = components(g)
    roots = {vs[0] for vs in comps}
    vecs = []
    for v in range(g.num_vertices):
        if v in roots:
            continue
        vec = np.zeros(g.num_edges)
        out = (g.src == v) & (g.dst != v)
        inc = (g.dst == v) & (g.src != v)
        vec[out] = 1.0
        vec[inc] = -1.0
        vecs.append(vec)
    arr = np.array(vecs).reshape(len(vecs), g.num_edges)
    arr.setflags(write=False)
    return SpaceBasis("cut", arr)


@dataclass(frozen=True, eq=False)
class Learnability:
    learnable: bool
    residual: np.ndarray = field(repr=False)
    residual_norm: float = 0.0

    def __bool__(self) -> bool:
        return self.learnable


def is_learnable(g: PatternGraph, f: np.ndarray, tol: float = RANK_TOL) -> Learnability:
    """A functional of log fidelities is learnable iff it has no cut-space component."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.num_edges,):
        raise ValueError(f"functional has shape {f.shape}, graph has {g.num_edges} edges")
    res = g.cut_projection(f)
    rn = float(np.linalg.norm(res))
    return Learnability(rn <= tol * max(float(np.linalg.norm(f)), 1e-300), res, rn)


def learnable_individual(g: CliffordGate, a: PauliOp) -> bool:
    """An individual fidelity is learnable iff the gate preserves its pattern."""
    if a.n != g.n:
        raise ValueError(f"Pauli has {a.n} qubits, gate has {g.n}")
    return conjugate(g, a).pattern == a.pattern


# Human-readable basis


@dataclass(frozen=True)
class BasisElement:
    terms: tuple[tuple[str, str, int], ...]  # (gate name, Pauli label, coefficient)
    kind: str  # "single", "orbit", "pair", "fundamental", "wht"

    def text(self, symbol: str = "l", with_gate: bool = False) -> str:
        parts = []
        for i, (gname, lab, c) in enumerate(self.terms):
            name = f"{symbol}_{lab}" + (f"^{gname}" if with_gate else "")
            coef = "" if abs(c) == 1 else f"{abs(c)}*"
            if i == 0:
                parts.append(("-" if c < 0 else "") + coef + name)
            else:
                parts.append((" - " if c < 0 else " + ") + coef + name)
        return "".join(parts)


class _GreedySpan:
    """Incremental Gram-Schmidt used to pick independent candidates."""

    def __init__(self, dim: int):
        self.q = np.zeros((0, dim))

    def try_add(self, v: np.ndarray) -> bool:
        nv = np.linalg.norm(v)
        if nv == 0:
            return False
        r = v - self.q.T @ (self.q @ v)
        r = r - self.q.T @ (self.q @ r)
        nr = np.linalg.norm(r)
        if nr <= RANK_TOL * nv:
            return False
        self.q = np.vstack([self.q, r / nr])
        return True

    @property
    def rank(self) -> int:
        return self.q.shape[0]


def _candidates(g: PatternGraph):
    """Edge subsets in preference order: single loops, gate orbits, opposite pairs."""
    ne = g.num_edges
    size = 4**g.n
    for e in range(ne):
        if g.src[e] == g.dst[e]:
            yield "single", (e,)
    orbits = []
    for gi, gate in enumerate(g.gates):
        img = gate.unsigned_images()
        seen = set()
        for a in range(size):
            if a in seen:
                continue
            orb = [a]
            b = int(img[a])
            while b != a:
                orb.append(b)
                b = int(img[b])
            seen.update(orb)
            if len(orb) > 1:
                orbits.append((len(orb), gi, orb))
    for _, gi, orb in sorted(orbits, key=lambda t: (t[0], t[1], min(t[2]))):
        edges = [gi * size + a for a in orb]
        if len({int(g.src[e]) for e in edges}) > 1:
            yield "orbit", tuple(sorted(edges))
    if g.num_edges <= 4096:
        order = np.lexsort((np.arange(ne), g.src))
        for e1 in order:
            u, v = int(g.src[e1]), int(g.dst[e1])
            if u == v:
                continue
            back = np.flatnonzero((g.src == v) & (g.dst == u))
            for e2 in back:
                if e2 > e1:
                    yield "pair", (int(e1), int(e2))


def _pick_basis(g: PatternGraph, cyc: SpaceBasis, accept) -> list[tuple[str, np.ndarray]]:
    span = _GreedySpan(g.num_edges)
    chosen = []
    target = cyc.dim
    for kind, edges in _candidates(g):
        if span.rank == target:
            break
        v = np.zeros(g.num_edges)
        v[list(edges)] = 1.0
        if accept(v) and span.try_add(v):
            chosen.append((kind, v))
    return chosen, span


def _element(g: PatternGraph, kind: str, v: np.ndarray) -> BasisElement:
    terms = []
    for e in np.flatnonzero(np.abs(v) > 1e-12):
        c = v[e]
        ci = int(round(c)) if abs(c - round(c)) < 1e-9 else float(c)
        terms.append((g.gates[g.edge_gate(e)].name, index_label(g.edge_pauli(e), g.n), ci))
    return BasisElement(tuple(terms), kind)


def _blockwise_wht(g: PatternGraph, v: np.ndarray) -> np.ndarray:
    return wht(v.reshape(len(g.gates), 4**g.n)).reshape(-1)


@dataclass(frozen=True, eq=False)
class LearnableReport:
    n: int
    gate_names: tuple[str, ...]
    num_edges: int
    num_vertices: int
    components: tuple[tuple[str, ...], ...]
    udf: int
    ldf: int
    basis: tuple[BasisElement, ...]
    error_basis: tuple[BasisElement, ...]
    wht_invariant: bool
    individual: Mapping[str, Mapping[str, bool]]
    cycle_vectors: np.ndarray = field(repr=False)
    cut_vectors: np.ndarray = field(repr=False)
    graph: PatternGraph | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        wg = len(self.gate_names) > 1
        return {
            "n": self.n,
            "gates": list(self.gate_names),
            "num_edges": self.num_edges,
            "num_vertices": self.num_vertices,
            "num_components": len(self.components),
            "components": [list(c) for c in self.components],
            "udf": self.udf,
            "ldf": self.ldf,
            "learnable_basis": [
                {"kind": b.kind, "text": b.text("l", wg),
                 "terms": [{"gate": t[0], "pauli": t[1], "coeff": t[2]} for t in b.terms]}
                for b in self.basis
            ],
            "learnable_error_combinations": [b.text("p", wg) for b in self.error_basis],
            "wht_invariant": self.wht_invariant,
            "individual": {k: dict(v) for k, v in self.individual.items()},
            "cut_basis": [[int(x) for x in row] for row in np.rint(self.cut_vectors)],
        }

    def to_markdown(self) -> str:
        wg = len(self.gate_names) > 1
        lines = [
            f"# Learnability report: {', '.join(self.gate_names)}",
            "",
            f"- qubits: {self.n}",
            f"- edges |Λ|: {self.num_edges}",
            f"- connected components: {len(self.components)}",
            f"- unlearnable degrees of freedom (UDF): {self.udf}",
            f"- learnable degrees of freedom: {self.ldf}",
            f"- cycle space invariant under Walsh-Hadamard: {'yes' if self.wht_invariant else 'no'}",
            "",
            "## Learnable basis (log fidelities)",
            "",
            "| # | functional | kind |",
            "|---|---|---|",
        ]
        for i, b in enumerate(self.basis):
            lines.append(f"| {i + 1} | {b.text('l', wg)} | {b.kind} |")
        lines += ["", "## Approximately learnable error-rate combinations", ""]
        lines += [f"- {b.text('p', wg)}" for b in self.error_basis]
        lines += ["", "## Individual fidelities", ""]
        labels = list(next(iter(self.individual.values())).keys())
        lines.append("| gate | learnable | unlearnable |")
        lines.append("|---|---|---|")
        for gname, tab in self.individual.items():
            yes = ", ".join(lab for lab in labels if tab[lab])
            no = ", ".join(lab for lab in labels if not tab[lab])
            lines.append(f"| {gname} | {yes} | {no} |")
        lines.append("")
        return "\n".join(lines)

    def to_dot(self) -> str:
        if self.graph is None:
            raise ValueError("report was built without its graph")
        return graph_to_dot(self.graph)


def graph_to_dot(g: PatternGraph) -> str:
    lines = ["digraph pattern_transfer {"]
    for v in range(g.num_vertices):
        lines.append(f'  "{pattern_str(v, g.n)}";')
    wg = len(g.gates) > 1
    for e in range(g.num_edges):
        if g.edge_pauli(e) == 0:
            continue
        u, v = pattern_str(int(g.src[e]), g.n), pattern_str(int(g.dst[e]), g.n)
        lab = index_label(g.edge_pauli(e), g.n)
        if wg:
            lab += f" ({g.gates[g.edge_gate(e)].name})"
        lines.append(f'  "{u}" -> "{v}" [label="{lab}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def learnable_basis_report(g: PatternGraph) -> LearnableReport:
    cyc = cycle_space(g)
    cut = cut_space(g)
    comps, c = components(g)

    def in_cycle_space(v):
        return is_learnable(g, v).learnable

    chosen, span = _pick_basis(g, cyc, lambda v: True)
    for v in cyc.vectors:  # fallback to fundamental cycles
        if span.rank == cyc.dim:
            break
        if span.try_add(v):
            chosen.append(("fundamental", v))
    basis = tuple(_element(g, k, v) for k, v in chosen)

    wht_inv = all(in_cycle_space(_blockwise_wht(g, v)) for _, v in chosen)
    # An error-rate combination w is learnable to first order iff WHT(w) is a cycle.
    err, espan = _pick_basis(g, cyc, lambda w: in_cycle_space(_blockwise_wht(g, w)))
    for _, v in chosen:
        if espan.rank == cyc.dim:
            break
        w = _blockwise_wht(g, v) / 4**g.n
        if espan.try_add(w):
            err.append(("wht", w))
    error_basis = tuple(_element(g, k, w) for k, w in err)

    individual = {
        gate.name: {
            index_label(a, g.n): learnable_individual(gate, PauliOp.from_index(a, g.n))
            for a in range(4**g.n)
        }
        for gate in g.gates
    }
    return LearnableReport(
        n=g.n,
        gate_names=tuple(g.gate_names),
        num_edges=g.num_edges,
        num_vertices=g.num_vertices,
        components=tuple(tuple(pattern_str(v, g.n) for v in vs) for vs in comps),
        udf=g.num_vertices - c,
        ldf=cyc.dim,
        basis=basis,
        error_basis=error_basis,
        wht_invariant=wht_inv,
        individual=individual,
        cycle_vectors=np.array([v for _, v in chosen]),
        cut_vectors=cut.vectors,
        graph=g,
    )


def report_json(report: LearnableReport) -> str:
    return json.dumps(report.to_json(), indent=2)
