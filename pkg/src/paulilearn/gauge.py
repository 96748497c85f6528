"""Gauge transformations of Pauli noise models and an indistinguishability check."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import NoiseModel
from .dense import MAX_DENSE_QUBITS, outcome_distribution, product_eigenstate, pauli_vector
from .pauli import (
    CliffordGate,
    PauliOp,
    conjugate,
    local_closing_layer,
    pattern_of_index,
    single_qubit_cliffords,
    tensor_layer,
)

__all__ = [
    "GaugeTransform",
    "GaugeWindowError",
    "validity_window",
    "default_eta",
    "apply_gauge",
    "certify_indistinguishable",
    "IndistinguishabilityReport",
]


class GaugeWindowError(ValueError):
    """Raised when a gauge parameter is outside the window that keeps the model physical."""

    def __init__(self, eta: float, window: tuple[float, float]):
        self.eta = eta
        self.window = window
        if window[0] >= window[1]:
            msg = "validity window is empty: the model has a zero Pauli error rate"
        else:
            msg = f"eta={eta!r} outside validity window ({window[0]:.6g}, {window[1]:.6g})"
        super().__init__(msg)


def _parse_pattern(v, n: int | None = None) -> int:
    if isinstance(v, str):
        if set(v) - {"0", "1"}:
            raise ValueError(f"bad pattern string {v!r}")
        return sum(1 << j for j, ch in enumerate(v) if ch == "1")
    return int(v)


@dataclass(frozen=True)
class GaugeTransform:
    """Pauli-diagonal gauge map M, described by its fidelity factors mu_a.

    ``eta=None`` means "use the default for the model it is applied to".
    """

    kind: str  # "depolarizing", "cut" or "composite"
    eta: float | None = None
    qubit: int | None = None
    v1: frozenset[int] = frozenset()
    parts: tuple[GaugeTransform, ...] = ()

    def __post_init__(self):
        if self.kind not in ("depolarizing", "cut", "composite"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.kind == "depolarizing" and self.qubit is None:
            raise ValueError("depolarizing gauge needs a qubit")
        object.__setattr__(self, "v1", frozenset(self.v1))

    @classmethod
    def depolarizing(cls, qubit: int, eta: float | None = None) -> GaugeTransform:
        return cls("depolarizing", eta, qubit=qubit)

    @classmethod
    def cut(cls, v1: Sequence[int | str], eta: float | None = None) -> GaugeTransform:
        return cls("cut", eta, v1=frozenset(_parse_pattern(v) for v in v1))

    @classmethod
    def composite(cls, parts: Sequence[GaugeTransform]) -> GaugeTransform:
        return cls("composite", parts=tuple(parts))

    def with_eta(self, eta: float) -> GaugeTransform:
        return GaugeTransform(self.kind, eta, self.qubit, self.v1, self.parts)

    def factors(self, n: int, eta: float | None = None) -> np.ndarray:
        """mu_a for every Pauli index a (mu_identity = 1)."""
        eta = self.eta if eta is None else eta
        pat = pattern_of_index(np.arange(4**n), n)
        if self.kind == "composite":
            mu = np.ones(4**n)
            for t in self.parts:
                mu *= t.factors(n)
            return mu
        if eta is None:
            raise ValueError("gauge has no eta; resolve it against a model first")
        if self.kind == "depolarizing":
            if not 0 <= self.qubit < n:
                raise ValueError(f"qubit {self.qubit} out of range for n={n}")
            return np.where((pat >> self.qubit) & 1, eta, 1.0)
        if any(not 0 <= v < 2**n for v in self.v1):
            raise ValueError(f"cut vertices {sorted(self.v1)} out of range for n={n}")
        in_v1 = np.isin(pat, list(self.v1))
        # keep mu_identity = 1: scale the side that does not hold the identity pattern
        if 0 in self.v1:
            return np.where(in_v1, 1.0, eta)
        return np.where(in_v1, 1.0 / eta, 1.0)

    def to_json(self) -> dict:
        if self.kind == "composite":
            return {"kind": "composite", "parts": [p.to_json() for p in self.parts]}
        out = {"kind": self.kind, "eta": self.eta}
        if self.kind == "depolarizing":
            out["qubit"] = self.qubit
        else:
            out["v1"] = sorted(self.v1)
        return out

    @classmethod
    def from_json(cls, obj: Mapping | str) -> GaugeTransform:
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj["kind"]
        if kind == "composite":
            return cls.composite([cls.from_json(p) for p in obj["parts"]])
        eta = obj.get("eta")
        if kind == "depolarizing":
            return cls.depolarizing(int(obj["qubit"]), eta)
        if kind == "cut":
            return cls.cut(obj["v1"], eta)
        raise ValueError(f"unknown gauge kind {kind!r}")


def validity_window(m: NoiseModel) -> tuple[float, float]:
    """Open interval of eta keeping every transformed error rate strictly positive."""
    p_min = m.min_error_rate()
    if p_min <= 0:
        return (1.0, 1.0)
    return (1.0 / (1.0 + p_min), 1.0 + p_min)


def default_eta(m: NoiseModel) -> float:
    """Midpoint of the shrinking side of the window."""
    lo, _ = validity_window(m)
    return 0.5 * (1.0 + lo)


def _gate_map(m: NoiseModel, gates: Sequence[CliffordGate] | None) -> dict[str, CliffordGate]:
    if gates is None:
        raise ValueError("apply_gauge needs the gate list to know each gate's action")
    gm = {g.name: g for g in gates}
    missing = set(m.gates) - set(gm)
    if missing:
        raise ValueError(f"noise model has channels for unknown gates {sorted(missing)}")
    return gm


def apply_gauge(m: NoiseModel, t: GaugeTransform, gates: Sequence[CliffordGate],
                check: bool = True) -> NoiseModel:
    """Transform SPAM and gate noise by M; statistics of every experiment are unchanged."""
    if t.kind == "composite":
        out = m
        for part in t.parts:
            out = apply_gauge(out, part, gates, check)
        return out
    gm = _gate_map(m, gates)
    eta = default_eta(m) if t.eta is None else float(t.eta)
    if check:
        lo, hi = validity_window(m)
        # an empty window means some error rate is zero: no nontrivial gauge exists
        if not lo < eta < hi and (eta != 1.0 or lo >= hi):
            raise GaugeWindowError(eta, (lo, hi))
    mu = t.factors(m.n, eta)
    sp = m.sp.scaled(mu)
    meas = m.meas.scaled(1.0 / mu)
    new_gates = {}
    for name, ch in m.gates.items():
        img = gm[name].unsigned_images()
        new_gates[name] = ch.scaled(mu[img] / mu)
    out = NoiseModel(m.n, sp, meas, new_gates)
    if check:
        bad = {k: r.summary() for k, r in out.validate("strict").items() if not r.ok}
        if bad:
            raise ValueError(f"gauged model is not strictly positive: {bad}")
    return out


# Indistinguishability


@dataclass(frozen=True)
class _Experiment:
    prep: str  # per-qubit Pauli axis
    prep_signs: tuple[int, ...]
    layers: tuple  # ("gate", name) or ("local", CliffordGate)
    basis: str
    tag: str = "random"


@dataclass(frozen=True, eq=False)
class IndistinguishabilityReport:
    trials: int
    max_deviation: float
    tol: float
    deviations: np.ndarray = field(repr=False)
    worst: str = ""

    @property
    def indistinguishable(self) -> bool:
        return self.max_deviation <= self.tol

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "indistinguishable": self.indistinguishable,
            "worst_experiment": self.worst,
        }


def _run_dense(m: NoiseModel, gm: dict[str, CliffordGate], exp: _Experiment,
               ptm_cache: dict) -> np.ndarray:
    r = pauli_vector(product_eigenstate(exp.prep, exp.prep_signs))
    r = m.sp.lambdas * r
    for kind, obj in exp.layers:
        if kind == "gate":
            key = ("gate", obj)
            if key not in ptm_cache:
                ptm_cache[key] = gm[obj].ptm()
            r = ptm_cache[key] @ (m.gate(obj).lambdas * r)
        else:
            key = ("local", id(obj))
            if key not in ptm_cache:
                ptm_cache[key] = (obj, obj.ptm())
            r = ptm_cache[key][1] @ r
    r = m.meas.lambdas * r
    return outcome_distribution(r, exp.basis)


def _random_experiment(n, names, rng, max_depth, local_layers) -> _Experiment:
    axes = "XYZ"
    prep = "".join(axes[i] for i in rng.integers(3, size=n))
    signs = tuple(int(s) for s in rng.choice([-1, 1], size=n))
    depth = int(rng.integers(max_depth + 1))
    layers = []
    for _ in range(depth):
        if rng.random() < 0.5:
            layers.append(("gate", names[int(rng.integers(len(names)))]))
        else:
            layers.append(("local", local_layers[int(rng.integers(len(local_layers)))]))
    basis = "".join(axes[i] for i in rng.integers(3, size=n))
    return _Experiment(prep, signs, tuple(layers), basis)


def _cb_experiments(n: int, gates: Sequence[CliffordGate], depth: int = 4) -> list[_Experiment]:
    """Closed-orbit circuits for every pattern-preserving Pauli of every gate."""
    out = []
    for g in gates:
        for a in range(1, 4**n):
            p = PauliOp.from_index(a, n)
            q = conjugate(g, p)
            if q.pattern != p.pattern:
                continue
            close = local_closing_layer(p, q)
            prep = "".join(ch if ch != "I" else "Z" for ch in p.label)
            for d in (1, depth):
                layers = []
                for _ in range(d):
                    layers += [("gate", g.name), ("local", close)]
                out.append(_Experiment(prep, (1,) * n, tuple(layers), prep, f"cb:{g.name}:{p.label}:{d}"))
    return out


def certify_indistinguishable(m1: NoiseModel, m2: NoiseModel, gates: Sequence[CliffordGate],
                              trials: int = 200, seed: int = 0, max_depth: int = 8,
                              tol: float = 1e-9) -> IndistinguishabilityReport:
    """Compare exact outcome distributions of random and CB-style experiments under two models."""
    if m1.n != m2.n:
        raise ValueError("models act on different qubit counts")
    n = m1.n
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense certification refused for n={n} > {MAX_DENSE_QUBITS}")
    gm = _gate_map(m1, gates)
    _gate_map(m2, gates)
    names = [g.name for g in gates]
    rng = np.random.default_rng(seed)
    sq = single_qubit_cliffords()
    local_layers = [
        tensor_layer([sq[int(i)] for i in rng.integers(24, size=n)]) for _ in range(64)
    ]
    exps = [_random_experiment(n, names, rng, max_depth, local_layers) for _ in range(trials)]
    exps += _cb_experiments(n, gates)
    c1, c2 = {}, {}
    devs = np.array([
        float(np.max(np.abs(_run_dense(m1, gm, e, c1) - _run_dense(m2, gm, e, c2))))
        for e in exps
    ])
    k = int(np.argmax(devs))
    e = exps[k]
    desc = (f"{e.tag}: prep {e.prep}{list(e.prep_signs)}, "
            f"{len(e.layers)} layers, basis {e.basis}")
    return IndistinguishabilityReport(len(exps), float(devs[k]), tol, devs, desc)
