"""Shot-level cycle-benchmarking simulation with two engines.

``pauli_fast`` pushes one signed Pauli through the circuit and multiplies the
fidelities it meets; it takes a Pauli ``NoiseModel``. ``ptm_dense`` evolves
full Pauli-vector states under arbitrary CPTP noise (n <= 3) and is the
reference oracle.

Every circuit is: ideal +1 eigenstate of the prepared Pauli, state-prep noise,
then ``depth`` repetitions of (random Pauli, gate noise, gate, optional local
layer), a final random Pauli, measurement noise and a measurement of the
expected Pauli. The sign picked up by the ideal circuit is divided out.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import zlib
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channel import NoiseModel, PauliChannel, pauli_twirl_diagonal, symplectic_matrix
from .dense import (
    MAX_DENSE_QUBITS,
    amplitude_damping_kraus,
    bit_flip_kraus,
    check_kraus,
    depolarizing_kraus,
    embed_kraus,
    kraus_ptm,
    unitary_ptm,
)
from .pauli import (
    CliffordGate,
    PauliOp,
    conjugate,
    gate_order,
    index_label,
    library_gate,
    local_closing_layer,
    parse_layer,
    single_qubit_cliffords,
    tensor_layer,
)

__all__ = [
    "PROTOCOLS",
    "ENGINES",
    "DEFAULT_DEPTHS",
    "CBConfig",
    "CBRecord",
    "CBDataset",
    "OrbitInfo",
    "CPTPNoiseSpec",
    "run_standard_cb",
    "run_interleaved_cb",
    "run_cycle_cb",
    "run_intercept_cb",
    "run_ptm_dense",
    "run_protocol_suite",
    "cycle_layer_search",
    "amplitude_damping_study",
    "circuit_trajectory",
    "exact_expectation",
    "dense_expectation",
    "ClosureError",
]

PROTOCOLS = ("standard", "interleaved", "cycle", "intercept")
ENGINES = ("pauli_fast", "ptm_dense")
DEFAULT_DEPTHS = tuple(2**k for k in range(1, 8))


class ClosureError(ValueError):
    """The circuit does not bring the prepared Pauli back to the measured one."""


@dataclass(frozen=True)
class CBConfig:
    protocol: str
    gate: str
    paulis: tuple[str, ...]
    depths: tuple[int, ...] = DEFAULT_DEPTHS
    circuits: int = 30
    shots: int | None = 200  # None: exact expectations
    seed: int = 0
    layer: str | None = None  # interleaving layer such as "S,SX", or "auto"
    engine: str = "pauli_fast"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        object.__setattr__(self, "paulis", tuple(self.paulis))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not self.paulis:
            raise ValueError("no Paulis requested")
        if not self.depths:
            raise ValueError("depth list is empty")
        if any(d < 0 for d in self.depths) or list(self.depths) != sorted(set(self.depths)):
            raise ValueError(f"depths must be distinct, ascending and nonnegative: {self.depths}")
        if self.circuits < 1:
            raise ValueError("need at least one circuit per depth")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive (or None for exact means)")

    def to_json(self) -> dict:
        d = asdict(self)
        d["paulis"] = list(self.paulis)
        d["depths"] = list(self.depths)
        return d

    @classmethod
    def from_json(cls, obj: Mapping) -> CBConfig:
        keys = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - keys
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**dict(obj))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CBRecord:
    protocol: str
    pauli: str
    family: str  # "" for decays, "a"/"b" for intercept families
    prep: str
    meas: str
    depth: int
    circuit: int
    sign: int
    shots: int  # 0 for exact expectations
    mean: float

    @property
    def key(self) -> str:
        return _key(self.protocol, self.pauli, self.family, self.layer_tag)

    layer_tag: str = ""


def _key(protocol: str, pauli: str, family: str = "", layer: str = "") -> str:
    parts = [protocol, pauli]
    if layer:
        parts.append(layer)
    if family:
        parts.append(family)
    return ":".join(parts)


@dataclass(frozen=True)
class OrbitInfo:
    """What a decay measures: log(rate per x-unit) = sum_k coeff_k * l_{pauli_k}^{gate_k}."""

    key: str
    terms: tuple[tuple[str, str, float], ...]  # (gate, Pauli label, coefficient)
    depth_unit: int = 1  # x = depth // depth_unit (after removing `depth_offset`)
    depth_offset: int = 0

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "terms": [list(t) for t in self.terms],
            "depth_unit": self.depth_unit,
            "depth_offset": self.depth_offset,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> OrbitInfo:
        return cls(obj["key"], tuple((t[0], t[1], float(t[2])) for t in obj["terms"]),
                   int(obj.get("depth_unit", 1)), int(obj.get("depth_offset", 0)))


_CSV_FIELDS = ["protocol", "pauli", "layer_tag", "family", "prep", "meas", "depth",
               "circuit", "sign", "shots", "mean"]


@dataclass(eq=False)
class CBDataset:
    records: list[CBRecord] = field(default_factory=list)
    orbits: dict[str, OrbitInfo] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.records:
            if abs(r.mean) > 1 + 1e-12 or r.sign not in (1, -1):
                raise ValueError(f"invalid record {r}")

    def keys(self) -> list[str]:
        return list(dict.fromkeys(r.key for r in self.records))

    def select(self, key: str) -> list[CBRecord]:
        return [r for r in self.records if r.key == key]

    def means_by_depth(self, key: str) -> dict[int, np.ndarray]:
        out: dict[int, list[float]] = {}
        for r in self.select(key):
            out.setdefault(r.depth, []).append(r.mean)
        return {d: np.array(v) for d, v in sorted(out.items())}

    @classmethod
    def merge(cls, parts: Iterable[CBDataset]) -> CBDataset:
        out = cls()
        for p in parts:
            out.records.extend(p.records)
            out.orbits.update(p.orbits)
            out.metadata.setdefault("runs", []).append(p.metadata)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            row = asdict(r)
            row["mean"] = repr(float(r.mean))
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, orbits: Mapping[str, OrbitInfo] | None = None) -> CBDataset:
        recs = []
        for row in csv.DictReader(io.StringIO(text)):
            recs.append(CBRecord(
                row["protocol"], row["pauli"], row["family"], row["prep"], row["meas"],
                int(row["depth"]), int(row["circuit"]), int(row["sign"]), int(row["shots"]),
                float(row["mean"]), row.get("layer_tag", "") or "",
            ))
        return cls(recs, dict(orbits or {}))

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "orbits": [o.to_json() for o in self.orbits.values()],
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_json(cls, obj: Mapping | str) -> CBDataset:
        if isinstance(obj, str):
            obj = json.loads(obj)
        recs = [CBRecord(**r) for r in obj["records"]]
        orbits = {o["key"]: OrbitInfo.from_json(o) for o in obj.get("orbits", [])}
        return cls(recs, orbits, dict(obj.get("metadata", {})))


# Dense CPTP noise specification


def _kraus_from_json(ops) -> list[np.ndarray]:
    out = []
    for op in ops:
        if isinstance(op, Mapping):
            out.append(np.asarray(op["real"], dtype=float) + 1j * np.asarray(op.get("imag", 0.0)))
        else:
            out.append(np.asarray(op, dtype=complex))
    return out


def _named_channel_ptm(n: int, spec: Mapping) -> np.ndarray:
    """PTM of one gate-noise entry: named per-qubit channels, Kraus list, or Pauli channel."""
    ptm = np.eye(4**n)
    for kind, val in spec.items():
        if kind == "kraus":
            ks = _kraus_from_json(val)
            check_kraus(ks)
            part = kraus_ptm(ks)
        elif kind == "pauli":
            part = np.diag(PauliChannel.from_json(val).lambdas)
        elif kind in ("amplitude_damping", "bit_flip", "depolarizing"):
            if len(val) != n:
                raise ValueError(f"{kind} needs one rate per qubit, got {val}")
            ctor = {"amplitude_damping": amplitude_damping_kraus,
                    "bit_flip": bit_flip_kraus, "depolarizing": depolarizing_kraus}[kind]
            part = np.eye(4**n)
            for j, rate in enumerate(val):
                ks = embed_kraus(ctor(float(rate)), j, n)
                check_kraus(ks)
                part = kraus_ptm(ks) @ part
        else:
            raise ValueError(f"unknown noise entry {kind!r}")
        ptm = part @ ptm
    return ptm


@dataclass(frozen=True, eq=False)
class CPTPNoiseSpec:
    """General noise for the dense engine, held as Pauli transfer matrices.

    Gate noise acts before the ideal gate. State-prep and readout noise are
    per-qubit bit flips on the prepared or measured eigenbasis, so they damp
    every non-identity factor on that qubit.
    """

    n: int
    gate_ptms: Mapping[str, np.ndarray]
    sp_flip: tuple[float, ...] = ()
    meas_flip: tuple[float, ...] = ()
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"dense engine refused for n={self.n} > {MAX_DENSE_QUBITS}")
        object.__setattr__(self, "sp_flip", tuple(self.sp_flip) or (0.0,) * self.n)
        object.__setattr__(self, "meas_flip", tuple(self.meas_flip) or (0.0,) * self.n)
        for name, r in self.gate_ptms.items():
            if np.shape(r) != (4**self.n, 4**self.n):
                raise ValueError(f"PTM for {name!r} has shape {np.shape(r)}")
        if len(self.sp_flip) != self.n or len(self.meas_flip) != self.n:
            raise ValueError("need one SPAM flip rate per qubit")

    @property
    def sp_channel(self) -> PauliChannel:
        return PauliChannel.pattern_flip(self.sp_flip)

    @property
    def meas_channel(self) -> PauliChannel:
        return PauliChannel.pattern_flip(self.meas_flip)

    def gate_ptm(self, name: str) -> np.ndarray:
        if name not in self.gate_ptms:
            return np.eye(4**self.n)
        return self.gate_ptms[name]

    def twirled_model(self) -> NoiseModel:
        """Pauli-twirled ground truth seen by randomized-compiled CB."""
        gates = {k: pauli_twirl_diagonal(v) for k, v in self.gate_ptms.items()}
        return NoiseModel(self.n, self.sp_channel, self.meas_channel, gates)

    @classmethod
    def from_noise_model(cls, m: NoiseModel) -> CPTPNoiseSpec:
        """Pauli model as a dense spec; SPAM must be pattern-flip channels."""
        def flips(ch: PauliChannel) -> tuple[float, ...]:
            rates = []
            for j in range(m.n):
                lab = "".join("Z" if k == j else "I" for k in range(m.n))
                rates.append((1 - ch.fidelity(lab)) / 2)
            if not np.allclose(PauliChannel.pattern_flip(rates).lambdas, ch.lambdas, atol=1e-12):
                raise ValueError("SPAM channel is not a per-qubit pattern flip")
            return tuple(rates)

        return cls(m.n, {k: np.diag(v.lambdas) for k, v in m.gates.items()},
                   flips(m.sp), flips(m.meas))

    @classmethod
    def from_json(cls, obj: Mapping | str) -> CPTPNoiseSpec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        gates = {k: _named_channel_ptm(n, v) for k, v in obj.get("gates", {}).items()}
        return cls(n, gates, tuple(obj.get("sp_flip", ())), tuple(obj.get("meas_flip", ())),
                   dict(obj))

    def to_json(self) -> dict:
        if self.source:
            return dict(self.source)
        return {
            "n": self.n,
            "sp_flip": list(self.sp_flip),
            "meas_flip": list(self.meas_flip),
            "gates": {k: {"pauli": {"n": self.n, "basis": "lambda",
                                    "values": [float(x) for x in np.diag(v)]}}
                      for k, v in self.gate_ptms.items()
                      if np.allclose(v, np.diag(np.diag(v)))},
        }


def amplitude_damping_study(gamma: float = 0.05, meas_flip: float = 0.003,
                            sp_flip: float = 0.0, gate: str = "CNOT") -> CPTPNoiseSpec:
    """Two-qubit study model: damping on both qubits before the gate, bit-flip SPAM."""
    return CPTPNoiseSpec.from_json({
        "n": 2,
        "gates": {gate: {"amplitude_damping": [gamma, gamma]}},
        "sp_flip": [sp_flip, sp_flip],
        "meas_flip": [meas_flip, meas_flip],
    })


# Circuit construction


@dataclass(frozen=True)
class _Plan:
    pauli: str
    family: str
    prep: int
    meas: int
    depth: int


def _resolve_gate(name: str, n: int, gates) -> CliffordGate:
    if gates is not None:
        gm = {g.name: g for g in gates} if not isinstance(gates, Mapping) else dict(gates)
        if name in gm:
            return gm[name]
    g = library_gate(name, n)
    if g.n != n:
        raise ValueError(f"gate {name!r} acts on {g.n} qubits, noise model has {n}")
    return g


def _resolve_layer(cfg: CBConfig, gate: CliffordGate, pauli: PauliOp) -> CliffordGate | None:
    if cfg.layer is None or cfg.protocol in ("standard", "intercept"):
        return None
    if cfg.layer == "auto":
        q = conjugate(gate, pauli)
        layer = local_closing_layer(pauli, q)
        if layer is None:
            raise ClosureError(
                f"no single-qubit layer returns {q.label} to {pauli.label}: the gate changes its pattern"
            )
        return layer
    layer = parse_layer(cfg.layer)
    if layer.n != gate.n:
        raise ValueError(f"layer {cfg.layer!r} has {layer.n} qubits, gate has {gate.n}")
    return layer


def _step(gate: CliffordGate, layer: CliffordGate | None, p: PauliOp) -> PauliOp:
    q = conjugate(gate, p)
    return conjugate(layer, q) if layer is not None else q


def _orbit(gate, layer, p: PauliOp, cap: int) -> list[PauliOp]:
    """Signed Paulis visited (before each gate) until returning to +-p."""
    seq = [p]
    q = _step(gate, layer, p)
    while q.unsigned() != p.unsigned():
        seq.append(q)
        if len(seq) > cap:
            raise RuntimeError("orbit did not close")
        q = _step(gate, layer, q)
    return seq


def _symplectic_parity(t: np.ndarray, a: int, n: int) -> np.ndarray:
    """<t, a> mod 2 for an array of Pauli indices t and one index a."""
    ax, az = 0, 0
    for j in range(n):
        d = (a >> (2 * j)) & 3
        ax |= (d & 1) << j
        az |= (d >> 1) << j
    par = np.zeros(t.shape, dtype=np.int64)
    for j in range(n):
        d = (t >> (2 * j)) & 3
        tx, tz = d & 1, d >> 1
        par ^= (tx & ((az >> j) & 1)) ^ (tz & ((ax >> j) & 1))
    return par


def _circuit_rng(seed: int, key: str, depth: int, circuit: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(key.encode()), depth, circuit])


def _sample_twirls(seed, key, depth, circuits, n) -> tuple[np.ndarray, list]:
    """Twirl indices, shape (depth + 1, circuits), and the per-circuit generators."""
    rngs = [_circuit_rng(seed, key, depth, c) for c in range(circuits)]
    tw = np.stack([r.integers(4**n, size=depth + 1) for r in rngs], axis=1) if circuits else None
    return tw.reshape(depth + 1, circuits), rngs


def _ideal_signs(gate, layer, prep: int, depth: int, tw: np.ndarray, n: int):
    """Final unsigned Pauli index and the per-circuit sign of the noiseless circuit."""
    img_g, sgn_g = gate.image_table
    if layer is not None:
        img_u, sgn_u = layer.image_table
    a = prep
    sign = np.ones(tw.shape[1], dtype=np.int64)
    visited = []
    for k in range(depth):
        sign *= 1 - 2 * _symplectic_parity(tw[k], a, n)
        visited.append(a)
        sign *= int(sgn_g[a])
        a = int(img_g[a])
        if layer is not None:
            sign *= int(sgn_u[a])
            a = int(img_u[a])
    sign *= 1 - 2 * _symplectic_parity(tw[depth], a, n)
    return a, sign, visited


def _sample_means(exact: np.ndarray, shots: int | None, rngs) -> np.ndarray:
    if shots is None:
        return exact
    probs = np.clip((1 + exact) / 2, 0.0, 1.0)
    k = np.array([r.binomial(shots, p) for r, p in zip(rngs, probs)])
    return 2 * k / shots - 1


class _FastEngine:
    def __init__(self, model: NoiseModel):
        self.model = model
        self.n = model.n

    def run(self, gate, layer, plan: _Plan, tw, signs, visited, final):
        lam = self.model.gate(gate.name).lambdas
        gamma = self.model.sp.lambdas[plan.prep] * self.model.meas.lambdas[final]
        for a in visited:
            gamma *= lam[a]
        return signs * gamma  # observed expectation of the measured Pauli


class _DenseEngine:
    def __init__(self, spec: CPTPNoiseSpec):
        self.spec = spec
        self.n = spec.n
        self.omega = symplectic_matrix(spec.n)
        self._cache: dict = {}

    def _layer_ptm(self, gate: CliffordGate, layer: CliffordGate | None) -> np.ndarray:
        key = (id(gate), id(layer))
        if key not in self._cache:
            u = unitary_ptm(gate.unitary) if gate.unitary is not None else gate.ptm()
            r = u @ self.spec.gate_ptm(gate.name)
            if layer is not None:
                r = (unitary_ptm(layer.unitary) if layer.unitary is not None else layer.ptm()) @ r
            self._cache[key] = (gate, layer, r)
        return self._cache[key][2]

    def _prep_state(self, prep: int) -> np.ndarray:
        """Pauli vector of the +1 eigenstate of P_prep (Z on identity factors)."""
        n = self.n
        axes = [(prep >> (2 * j)) & 3 or 2 for j in range(n)]
        idx = np.arange(4**n)
        r = np.ones(4**n)
        for j in range(n):
            d = (idx >> (2 * j)) & 3
            r *= ((d == 0) | (d == axes[j])).astype(float)
        return r

    def run(self, gate, layer, plan: _Plan, tw, signs, visited, final):
        step = self._layer_ptm(gate, layer)
        r = self.spec.sp_channel.lambdas * self._prep_state(plan.prep)
        state = np.repeat(r[:, None], tw.shape[1], axis=1)
        for k in range(plan.depth):
            state = step @ (self.omega[tw[k]].T * state)
        state = self.omega[tw[plan.depth]].T * state
        return self.spec.meas_channel.lambdas[final] * state[final]


def _simulate(engine, cfg: CBConfig, gate: CliffordGate, layer_for, plans: Sequence[_Plan],
              orbits: dict[str, OrbitInfo], layer_tags: Mapping[str, str]) -> CBDataset:
    recs = []
    n = engine.n
    for plan in plans:
        layer = layer_for(plan)
        tag = layer_tags.get(plan.pauli, "")
        key = _key(cfg.protocol, plan.pauli, plan.family, tag)
        tw, rngs = _sample_twirls(cfg.seed, key, plan.depth, cfg.circuits, n)
        final, signs, visited = _ideal_signs(gate, layer, plan.prep, plan.depth, tw, n)
        if final != plan.meas:
            raise ClosureError(
                f"{cfg.protocol} CB on {plan.pauli}: depth {plan.depth} ends on "
                f"{index_label(final, n)}, expected {index_label(plan.meas, n)}"
            )
        observed = engine.run(gate, layer, plan, tw, signs, visited, final)
        observed = _sample_means(np.asarray(observed, dtype=float), cfg.shots, rngs)
        corrected = signs * observed
        for c in range(cfg.circuits):
            recs.append(CBRecord(cfg.protocol, plan.pauli, plan.family,
                                 index_label(plan.prep, n), index_label(plan.meas, n),
                                 plan.depth, c, int(signs[c]), int(cfg.shots or 0),
                                 float(corrected[c]), tag))
    meta = {"config": cfg.to_json(), "config_hash": cfg.digest(), "seed": cfg.seed,
            "engine": cfg.engine, "gate": gate.name, "n": n}
    return CBDataset(recs, orbits, meta)


def _engine_for(cfg: CBConfig, noise) -> object:
    if cfg.engine == "pauli_fast":
        if isinstance(noise, CPTPNoiseSpec):
            raise ValueError("the pauli_fast engine needs a Pauli NoiseModel, not a CPTP spec")
        return _FastEngine(noise)
    if isinstance(noise, NoiseModel):
        noise = CPTPNoiseSpec.from_noise_model(noise)
    return _DenseEngine(noise)


def _decay_cb(noise, cfg: CBConfig, gates, strict: bool) -> CBDataset:
    engine = _engine_for(cfg, noise)
    n = engine.n
    gate = _resolve_gate(cfg.gate, n, gates)
    plans, orbits, layers, tags = [], {}, {}, {}
    for lab in cfg.paulis:
        p = PauliOp.from_label(lab)
        if p.n != n:
            raise ValueError(f"Pauli {lab} has {p.n} qubits, model has {n}")
        if p.index == 0:
            raise ValueError("the identity Pauli carries no decay")
        layer = _resolve_layer(cfg, gate, p)
        if cfg.protocol != "standard" and layer is None:
            raise ValueError(f"{cfg.protocol} CB needs an interleaving layer")
        orb = _orbit(gate, layer, p, cap=4 ** (2 * n))
        if strict and len(orb) != 1:
            q = conjugate(gate, p)
            raise ClosureError(
                f"layer {cfg.layer} does not return {q.label} to {lab} in one step "
                f"(orbit {'->'.join(x.label for x in orb)})"
            )
        period = len(orb)
        bad = [d for d in cfg.depths if d % period]
        if bad:
            raise ClosureError(f"{lab}: orbit length {period} does not divide depths {bad}")
        layers[lab] = layer
        tags[lab] = "" if layer is None else (layer.name if cfg.layer != "auto" else "auto")
        key = _key(cfg.protocol, lab, "", tags[lab])
        orbits[key] = OrbitInfo(key, tuple((gate.name, q.label, 1.0 / period) for q in orb))
        for d in cfg.depths:
            plans.append(_Plan(lab, "", p.index, p.index, d))
    return _simulate(engine, cfg, gate, lambda pl: layers[pl.pauli], plans, orbits, tags)


def run_standard_cb(noise, cfg: CBConfig, gates=None) -> CBDataset:
    """Repeated gate with Pauli twirls; decay rate is the geometric mean along the orbit."""
    if cfg.protocol != "standard":
        cfg = _with(cfg, protocol="standard")
    return _decay_cb(noise, cfg, gates, strict=False)


def run_interleaved_cb(noise, cfg: CBConfig, gates=None) -> CBDataset:
    """A local layer after each gate must return the Pauli to itself in one step."""
    if cfg.protocol != "interleaved":
        cfg = _with(cfg, protocol="interleaved")
    return _decay_cb(noise, cfg, gates, strict=True)


def run_cycle_cb(noise, cfg: CBConfig, gates=None) -> CBDataset:
    """Like interleaved CB but the orbit may close after several steps."""
    if cfg.protocol != "cycle":
        cfg = _with(cfg, protocol="cycle")
    return _decay_cb(noise, cfg, gates, strict=False)


def run_intercept_cb(noise, cfg: CBConfig, gates=None) -> CBDataset:
    """Two families per Pauli a with b = G(a): prep a for l*m0+1 steps, prep b for l*m0 steps.

    ``cfg.depths`` are the base depths l*m0 and must be multiples of the gate order.
    """
    if cfg.protocol != "intercept":
        cfg = _with(cfg, protocol="intercept")
    engine = _engine_for(cfg, noise)
    n = engine.n
    gate = _resolve_gate(cfg.gate, n, gates)
    m0 = gate_order(gate)
    bad = [d for d in cfg.depths if d % m0]
    if bad:
        raise ValueError(f"intercept depths must be multiples of the gate order {m0}: {bad}")
    plans, orbits = [], {}
    for lab in cfg.paulis:
        a = PauliOp.from_label(lab)
        if a.n != n or a.index == 0:
            raise ValueError(f"bad Pauli {lab} for intercept CB")
        b = conjugate(gate, a).unsigned()
        seq, q = [], b
        for _ in range(m0):
            seq.append(q.label)
            q = conjugate(gate, q)
        terms = tuple((gate.name, s, 1.0) for s in seq)
        for fam, prep, off in (("a", a, 1), ("b", b, 0)):
            key = _key("intercept", lab, fam)
            orbits[key] = OrbitInfo(key, terms, depth_unit=m0, depth_offset=off)
            for d in cfg.depths:
                plans.append(_Plan(lab, fam, prep.index, b.index, d + off))
    return _simulate(engine, cfg, gate, lambda pl: None, plans, orbits, {})


def run_ptm_dense(spec: CPTPNoiseSpec | NoiseModel, cfg: CBConfig, gates=None) -> CBDataset:
    """Run any protocol on the dense engine."""
    cfg = _with(cfg, engine="ptm_dense")
    runner = {"standard": run_standard_cb, "interleaved": run_interleaved_cb,
              "cycle": run_cycle_cb, "intercept": run_intercept_cb}[cfg.protocol]
    return runner(spec, cfg, gates)


def _with(cfg: CBConfig, **kw) -> CBConfig:
    d = cfg.to_json()
    d.update(kw)
    return CBConfig.from_json(d)


# Protocol planning


def _orbit_edges(gate, layer, p: PauliOp) -> tuple[int, ...]:
    return tuple(sorted(q.index for q in _orbit(gate, layer, p, cap=4 ** (2 * gate.n))))


def cycle_layer_search(gate: CliffordGate, target: Sequence[int]) -> tuple[CliffordGate, PauliOp] | None:
    """Find a local layer U and start Pauli whose (U o G)-orbit visits exactly ``target``.

    ``target`` is a multiset of Pauli indices (fidelities of ``gate``). Exhaustive over
    the 24^n local layers, so only sensible for n <= 2.
    """
    want = tuple(sorted(target))
    n = gate.n
    sq = single_qubit_cliffords()
    start = PauliOp.from_index(want[0], n)
    for combo in itertools.product(range(24), repeat=n):
        layer = tensor_layer([sq[i] for i in combo])
        try:
            if _orbit_edges(gate, layer, start) == want:
                return layer, start
        except RuntimeError:
            continue
    return None


def _name_layer(layer: CliffordGate) -> str | None:
    """Find an equivalent comma-separated registry spec for a local layer (n <= 3)."""
    names = ["I", "H", "S", "SX", "SDG", "SXDG", "X", "Y", "Z"]
    for combo in itertools.product(names, repeat=layer.n):
        spec = ",".join(combo)
        if parse_layer(spec).same_action(layer):
            return spec
    return None


def run_protocol_suite(noise, gate: str | CliffordGate, depths: Sequence[int] = DEFAULT_DEPTHS,
                       circuits: int = 30, shots: int | None = 200, seed: int = 0,
                       engine: str = "pauli_fast", gates=None) -> CBDataset:
    """Standard, interleaved and cycle CB chosen to cover every learnable fidelity combination."""
    from .graph import build_graph, cycle_space, learnable_basis_report

    n = noise.n
    g = gate if isinstance(gate, CliffordGate) else _resolve_gate(gate, n, gates)
    gates = [g]
    base = dict(gate=g.name, depths=tuple(depths), circuits=circuits, shots=shots,
                seed=seed, engine=engine)
    graph = build_graph([g])
    size = 4**n
    rows: list[np.ndarray] = []

    def covered(v):
        if not rows:
            return False
        a = np.array(rows)
        return np.linalg.matrix_rank(np.vstack([a, v])) == np.linalg.matrix_rank(a)

    parts = []
    # standard CB: one Pauli per orbit of the bare gate
    seen, std = set(), []
    for a in range(1, size):
        if a in seen:
            continue
        orb = _orbit_edges(g, None, PauliOp.from_index(a, n))
        seen.update(orb)
        std.append(index_label(a, n))
        v = np.zeros(size)
        v[list(orb)] = 1
        rows.append(v)
    parts.append(run_standard_cb(noise, CBConfig("standard", paulis=tuple(std), **base), gates))
    # interleaved CB for pattern-preserving Paulis not yet isolated
    for a in range(1, size):
        v = np.zeros(size)
        v[a] = 1
        p = PauliOp.from_index(a, n)
        q = conjugate(g, p)
        if q.pattern != p.pattern or covered(v):
            continue
        layer = local_closing_layer(p, q)
        spec = _name_layer(layer)
        cfg = CBConfig("interleaved", paulis=(p.label,), layer=spec or "auto", **base)
        parts.append(run_interleaved_cb(noise, cfg, gates))
        rows.append(v)
    # cycle CB for the remaining directions
    cyc = learnable_basis_report(graph)
    for elem in cyc.basis:
        v = np.zeros(size)
        for _, lab, c in elem.terms:
            v[PauliOp.from_label(lab).index] += c
        if v[0] or covered(v):
            continue
        target = [PauliOp.from_label(lab).index for _, lab, c in elem.terms for _ in range(int(c))]
        found = cycle_layer_search(g, target) if n <= 2 else None
        if found is None:
            continue
        layer, start = found
        spec = _name_layer(layer)
        if spec is None:
            continue
        period = len(target)
        dd = tuple(d for d in depths if d % period == 0)
        cfg = CBConfig("cycle", paulis=(start.label,), layer=spec,
                       **{**base, "depths": dd})
        parts.append(run_cycle_cb(noise, cfg, gates))
        rows.append(v)
    out = CBDataset.merge(parts)
    out.metadata["gate"] = g.name
    out.metadata["n"] = n
    out.metadata["seed"] = seed
    out.metadata["cycle_dim"] = int(cycle_space(graph).dim)
    return out


# Trajectory helpers for the fidelity-monomial check


def circuit_trajectory(prep: PauliOp, layers: Sequence[CliffordGate]) -> list[PauliOp]:
    """Signed Pauli before each layer, followed by the final Pauli."""
    out = [prep]
    p = prep
    for g in layers:
        p = conjugate(g, p)
        out.append(p)
    return out


def exact_expectation(model: NoiseModel, prep: PauliOp, layers: Sequence[CliffordGate],
                      noisy: Sequence[bool]) -> tuple[PauliOp, float]:
    """Final signed Pauli and the exact expectation of its unsigned version.

    ``noisy[k]`` says whether layer k carries the model's gate noise (keyed by name).
    """
    p = prep
    val = model.sp.lambdas[prep.index] * prep.sign
    for g, nz in zip(layers, noisy):
        if nz:
            val *= model.gate(g.name).lambdas[p.index]
        q = conjugate(g, p)
        val *= q.sign * p.sign
        p = q
    val *= model.meas.lambdas[p.index]
    return p, float(val)


def dense_expectation(model: NoiseModel, prep: PauliOp, layers: Sequence[CliffordGate],
                      noisy: Sequence[bool]) -> tuple[PauliOp, float]:
    """Same quantity as :func:`exact_expectation`, by evolving the dense Pauli vector."""
    n = model.n
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense evolution refused for n={n}")
    r = np.zeros(4**n)
    r[0] = 1.0
    r[prep.index] = prep.sign
    r = model.sp.lambdas * r
    p = prep
    for g, nz in zip(layers, noisy):
        if nz:
            r = model.gate(g.name).lambdas * r
        u = unitary_ptm(g.unitary) if g.unitary is not None else g.ptm()
        r = u @ r
        p = conjugate(g, p)
    r = model.meas.lambdas * r
    return p, float(r[p.index])
