"""Pauli channels in fidelity and error-rate form, plus noise-model containers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .pauli import all_labels, index_label, pattern_of_index

__all__ = [
    "WHT_KERNEL",
    "wht",
    "wht_p_to_lambda",
    "wht_lambda_to_p",
    "naive_wht",
    "PauliChannel",
    "Violation",
    "ValidationReport",
    "validate",
    "pauli_twirl_diagonal",
    "NoiseModel",
    "log_fidelity_vector",
]

# Per-qubit sign table (-1)^<a,b> in digit order I, X, Z, Y.
WHT_KERNEL = np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float
)

CPTP_SLACK = 1e-10


def _num_qubits(length: int) -> int:
    n = 0
    while 4**n < length:
        n += 1
    if 4**n != length:
        raise ValueError(f"length {length} is not a power of 4")
    return n


def wht(v: np.ndarray) -> np.ndarray:
    """Unnormalized transform out_b = sum_a v_a (-1)^<a,b> over the last axis."""
    v = np.asarray(v, dtype=float)
    n = _num_qubits(v.shape[-1])
    lead = v.shape[:-1]
    t = v.reshape((-1,) + (4,) * n)
    for ax in range(1, n + 1):
        t = np.moveaxis(np.tensordot(WHT_KERNEL, t, axes=([1], [ax])), 0, ax)
    return t.reshape(lead + (4**n,))


def wht_p_to_lambda(p: np.ndarray) -> np.ndarray:
    return wht(p)


def wht_lambda_to_p(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return wht(lam) / lam.shape[-1]


def symplectic_matrix(n: int) -> np.ndarray:
    """(-1)^<a,b> for all index pairs, built without the fast transform."""
    size = 4**n
    idx = np.arange(size)
    x = np.zeros(size, dtype=np.int64)
    z = np.zeros(size, dtype=np.int64)
    for j in range(n):
        d = (idx >> (2 * j)) & 3
        x |= (d & 1) << j
        z |= (d >> 1) << j
    s = (x[:, None] & z[None, :]) ^ (z[:, None] & x[None, :])
    par = np.zeros_like(s)
    for j in range(n):
        par ^= (s >> j) & 1
    return 1.0 - 2.0 * par


def naive_wht(v: np.ndarray) -> np.ndarray:
    """O(16^n) reference transform."""
    v = np.asarray(v, dtype=float)
    return symplectic_matrix(_num_qubits(len(v))) @ v


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """Pauli-diagonal map stored by its fidelities; error rates are derived lazily."""

    n: int
    lambdas: np.ndarray = field(repr=False)

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float)
        if lam.shape != (4**self.n,):
            raise ValueError(f"expected {4**self.n} fidelities, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("fidelities must be finite")
        if abs(lam[0] - 1) > 1e-12:
            raise ValueError(f"identity fidelity must be 1, got {lam[0]}")
        lam[0] = 1.0
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @cached_property
    def p(self) -> np.ndarray:
        out = wht_lambda_to_p(self.lambdas)
        out.setflags(write=False)
        return out

    @classmethod
    def from_p(cls, p: Sequence[float]) -> PauliChannel:
        p = np.asarray(p, dtype=float)
        n = _num_qubits(len(p))
        if abs(p.sum() - 1) > 1e-10:
            raise ValueError(f"error rates sum to {p.sum()}, not 1")
        lam = wht_p_to_lambda(p)
        lam[0] = 1.0
        return cls(n, lam)

    @classmethod
    def identity(cls, n: int) -> PauliChannel:
        return cls(n, np.ones(4**n))

    @classmethod
    def depolarizing(cls, n: int, q: float) -> PauliChannel:
        """Global depolarizing: every non-identity fidelity equals 1 - q."""
        lam = np.full(4**n, 1.0 - q)
        lam[0] = 1.0
        return cls(n, lam)

    @classmethod
    def pattern_flip(cls, rates: Sequence[float]) -> PauliChannel:
        """Per-qubit channel damping any non-identity factor on qubit j by 1 - 2 rates[j].

        This is what a classical readout (or preparation) bit flip looks like on
        Pauli expectations once the basis change is folded in.
        """
        n = len(rates)
        idx = np.arange(4**n)
        pat = pattern_of_index(idx, n)
        lam = np.ones(4**n)
        for j, r in enumerate(rates):
            lam = np.where((pat >> j) & 1, lam * (1 - 2 * r), lam)
        return cls(n, lam)

    @classmethod
    def x_flip(cls, rates: Sequence[float]) -> PauliChannel:
        """Physical X flips: only Z and Y factors are damped."""
        n = len(rates)
        idx = np.arange(4**n)
        lam = np.ones(4**n)
        for j, r in enumerate(rates):
            has_z = ((idx >> (2 * j + 1)) & 1).astype(bool)
            lam = np.where(has_z, lam * (1 - 2 * r), lam)
        return cls(n, lam)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, strength: float = 0.05,
               floor: float = 0.0) -> PauliChannel:
        """Random channel with strictly positive error rates summing to ``strength``.

        A fraction ``floor`` of the error mass is spread uniformly, which keeps the
        smallest rate (and so the gauge window) away from zero.
        """
        if not 0 <= floor <= 1:
            raise ValueError(f"floor must lie in [0, 1], got {floor}")
        k = 4**n - 1
        w = rng.dirichlet(np.ones(k)) * strength * (1 - floor) + strength * floor / k
        w = np.maximum(w, strength * 1e-3 / 4**n)
        w *= strength / w.sum()
        p = np.concatenate([[1 - strength], w])
        return cls.from_p(p)

    def compose(self, other: PauliChannel) -> PauliChannel:
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        return PauliChannel(self.n, self.lambdas * other.lambdas)

    def scaled(self, factors: np.ndarray) -> PauliChannel:
        return PauliChannel(self.n, self.lambdas * np.asarray(factors, dtype=float))

    def log_fidelities(self) -> np.ndarray:
        if np.any(self.lambdas <= 0):
            raise ValueError("log fidelities need strictly positive fidelities")
        return np.log(self.lambdas)

    def fidelity(self, label: str) -> float:
        from .pauli import PauliOp

        return float(self.lambdas[PauliOp.from_label(label).index])

    def labelled(self) -> dict[str, float]:
        return dict(zip(all_labels(self.n), map(float, self.lambdas)))

    def to_json(self, basis: str = "lambda") -> dict:
        if basis == "lambda":
            vals = self.lambdas
        elif basis == "p":
            vals = self.p
        else:
            raise ValueError(f"unknown basis {basis!r}")
        return {"n": self.n, "basis": basis, "values": [float(v) for v in vals]}

    @classmethod
    def from_json(cls, obj: Mapping | str) -> PauliChannel:
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        vals = np.asarray(obj["values"], dtype=float)
        if len(vals) != 4**n:
            raise ValueError(f"channel with n={n} needs {4**n} values, got {len(vals)}")
        basis = obj.get("basis", "lambda")
        if basis == "lambda":
            return cls(n, vals)
        if basis == "p":
            return cls.from_p(vals)
        raise ValueError(f"unknown basis {basis!r}")

    def ptm(self) -> np.ndarray:
        return np.diag(self.lambdas)


@dataclass(frozen=True)
class Violation:
    kind: str  # "p" or "lambda"
    index: int
    label: str
    value: float


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    ok: bool
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return f"{self.mode}: ok"
        worst = ", ".join(f"{v.kind}_{v.label}={v.value:.3g}" for v in self.violations[:6])
        more = "" if len(self.violations) <= 6 else f" (+{len(self.violations) - 6} more)"
        return f"{self.mode}: {len(self.violations)} violation(s): {worst}{more}"


def validate(ch: PauliChannel, mode: str = "cptp", slack: float = CPTP_SLACK) -> ValidationReport:
    """Check complete positivity, or the strict positivity needed for gauge constructions."""
    mode = mode.lower()
    if mode not in ("cptp", "strict"):
        raise ValueError(f"unknown validation mode {mode!r}")
    viol = []
    p = ch.p
    for a in range(len(p)):
        bad = p[a] <= 0 if mode == "strict" else p[a] < -slack
        if bad:
            viol.append(Violation("p", a, index_label(a, ch.n), float(p[a])))
    if mode == "strict":
        for a in range(len(p)):
            if ch.lambdas[a] <= 0:
                viol.append(Violation("lambda", a, index_label(a, ch.n), float(ch.lambdas[a])))
    return ValidationReport(mode, not viol, tuple(viol))


def pauli_twirl_diagonal(ptm: np.ndarray) -> PauliChannel:
    """Fidelities of the Pauli twirl of a map given by its Pauli transfer matrix."""
    ptm = np.asarray(ptm, dtype=float)
    if ptm.ndim != 2 or ptm.shape[0] != ptm.shape[1]:
        raise ValueError(f"PTM must be square, got shape {ptm.shape}")
    n = _num_qubits(ptm.shape[0])
    return PauliChannel(n, np.diag(ptm).copy())


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """State-prep, measurement and per-gate Pauli noise; gate noise acts before the gate."""

    n: int
    sp: PauliChannel
    meas: PauliChannel
    gates: Mapping[str, PauliChannel]

    def __post_init__(self):
        for name, ch in [("sp", self.sp), ("meas", self.meas)] + list(self.gates.items()):
            if ch.n != self.n:
                raise ValueError(f"channel {name!r} has n={ch.n}, model has n={self.n}")
        object.__setattr__(self, "gates", dict(self.gates))

    @classmethod
    def noiseless(cls, n: int, gate_names: Sequence[str]) -> NoiseModel:
        ident = PauliChannel.identity(n)
        return cls(n, ident, ident, {g: ident for g in gate_names})

    def gate(self, name: str) -> PauliChannel:
        try:
            return self.gates[name]
        except KeyError:
            raise KeyError(f"noise model has no channel for gate {name!r}") from None

    def channels(self) -> list[tuple[str, PauliChannel]]:
        return [("sp", self.sp), ("meas", self.meas)] + list(self.gates.items())

    def validate(self, mode: str = "strict") -> dict[str, ValidationReport]:
        return {name: validate(ch, mode) for name, ch in self.channels()}

    def is_valid(self, mode: str = "strict") -> bool:
        return all(r.ok for r in self.validate(mode).values())

    def min_error_rate(self) -> float:
        return float(min(np.min(ch.p) for _, ch in self.channels()))

    def replace(self, sp=None, meas=None, gates=None) -> NoiseModel:
        return NoiseModel(
            self.n,
            self.sp if sp is None else sp,
            self.meas if meas is None else meas,
            dict(self.gates) if gates is None else gates,
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "sp": self.sp.to_json(),
            "meas": self.meas.to_json(),
            "gates": {k: v.to_json() for k, v in self.gates.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping | str) -> NoiseModel:
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        ident = PauliChannel.identity(n)
        sp = PauliChannel.from_json(obj["sp"]) if "sp" in obj else ident
        meas = PauliChannel.from_json(obj["meas"]) if "meas" in obj else ident
        gates = {k: PauliChannel.from_json(v) for k, v in obj.get("gates", {}).items()}
        return cls(n, sp, meas, gates)


def log_fidelity_vector(model: NoiseModel, gate_names: Sequence[str]) -> np.ndarray:
    """Concatenated log fidelities, gate-major then Pauli index."""
    return np.concatenate([model.gate(g).log_fidelities() for g in gate_names])
