"""Binary-symplectic Paulis and Clifford tableaux.

An n-qubit Pauli is stored as two n-bit integers ``x`` and ``z`` (bit j is
qubit j) plus a sign. Qubit 0 is the *leftmost* character of a label, so
``"IZ"`` has Z on qubit 1. The Hermitian operator is

    P = sign * i^{|x & z|} * X^x Z^z

which makes ``Y = iXZ``.

Canonical Pauli index: qubit j owns the base-4 digit j (qubit 0 least
significant) with digit ``x_j + 2 z_j``, i.e. I=0, X=1, Z=2, Y=3.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliOp",
    "CliffordGate",
    "symplectic",
    "conjugate",
    "compose",
    "inverse",
    "gate_order",
    "embed",
    "pauli_index",
    "index_to_xz",
    "index_label",
    "all_labels",
    "pattern_of_index",
    "pattern_str",
    "identity_gate",
    "cnot",
    "cz",
    "swap",
    "hadamard",
    "phase",
    "sqrt_x",
    "pauli_gate",
    "permutation_gate",
    "single_qubit_cliffords",
    "gate_from_json",
    "gate_to_json",
    "tensor_layer",
    "random_clifford",
    "iter_paulis",
    "local_closing_layer",
    "parse_layer",
    "library_gate",
]

_LABEL_RE = re.compile(r"^([+-]?)([IXYZ]+)$")
_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_DIGIT_CHAR = "IXZY"

_I2 = np.eye(2, dtype=complex)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI_MATS = {"I": _I2, "X": _X2, "Y": _Y2, "Z": _Z2}


def pauli_index(x: int, z: int, n: int) -> int:
    idx = 0
    for j in range(n):
        idx |= (((x >> j) & 1) | (((z >> j) & 1) << 1)) << (2 * j)
    return idx


def index_to_xz(idx: int, n: int) -> tuple[int, int]:
    x = z = 0
    for j in range(n):
        d = (idx >> (2 * j)) & 3
        x |= (d & 1) << j
        z |= (d >> 1) << j
    return x, z


def index_label(idx: int, n: int) -> str:
    return "".join(_DIGIT_CHAR[(idx >> (2 * j)) & 3] for j in range(n))


def all_labels(n: int) -> list[str]:
    return [index_label(i, n) for i in range(4**n)]


def pattern_of_index(idx, n: int):
    """Pattern integer (bit j set iff qubit j is non-identity); vectorizes over arrays."""
    idx = np.asarray(idx)
    pat = np.zeros_like(idx)
    for j in range(n):
        pat |= (((idx >> (2 * j)) & 3) != 0).astype(idx.dtype) << j
    return pat if pat.ndim else int(pat)


def pattern_str(pattern: int, n: int) -> str:
    """Render a pattern with qubit 0 as the leftmost character."""
    return "".join("1" if (pattern >> j) & 1 else "0" for j in range(n))


def _xz_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """x and z bit-words for every canonical index 0..4^n-1."""
    idx = np.arange(4**n, dtype=np.int64)
    x = np.zeros_like(idx)
    z = np.zeros_like(idx)
    for j in range(n):
        d = (idx >> (2 * j)) & 3
        x |= (d & 1) << j
        z |= (d >> 1) << j
    return x, z


def _index_from_arrays(x: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    idx = np.zeros_like(x)
    for j in range(n):
        idx |= (((x >> j) & 1) | (((z >> j) & 1) << 1)) << (2 * j)
    return idx


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


@dataclass(frozen=True)
class PauliOp:
    """Signed Hermitian n-qubit Pauli in x/z bit-word form."""

    n: int
    x: int
    z: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("x/z bits exceed qubit count")

    @classmethod
    def from_label(cls, label: str) -> PauliOp:
        m = _LABEL_RE.match(label.strip())
        if not m:
            raise ValueError(f"bad Pauli label {label!r}")
        sign = -1 if m.group(1) == "-" else 1
        x = z = 0
        for j, ch in enumerate(m.group(2)):
            bx, bz = _CHAR_BITS[ch]
            x |= bx << j
            z |= bz << j
        return cls(len(m.group(2)), x, z, sign)

    @classmethod
    def from_index(cls, idx: int, n: int, sign: int = 1) -> PauliOp:
        if not 0 <= idx < 4**n:
            raise ValueError(f"index {idx} out of range for n={n}")
        x, z = index_to_xz(idx, n)
        return cls(n, x, z, sign)

    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls(n, 0, 0, 1)

    @property
    def index(self) -> int:
        return pauli_index(self.x, self.z, self.n)

    @property
    def pattern(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def label(self) -> str:
        """Unsigned label, qubit 0 first."""
        return index_label(self.index, self.n)

    def signed_label(self) -> str:
        return ("-" if self.sign < 0 else "+") + self.label

    def unsigned(self) -> PauliOp:
        return PauliOp(self.n, self.x, self.z, 1)

    def __neg__(self) -> PauliOp:
        return PauliOp(self.n, self.x, self.z, -self.sign)

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "") + self.label

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix, qubit 0 the most significant tensor factor."""
        m = np.ones((1, 1), dtype=complex)
        for ch in self.label:
            m = np.kron(m, _PAULI_MATS[ch])
        return self.sign * m


def symplectic(a: PauliOp, b: PauliOp) -> int:
    """0 if the Paulis commute, 1 otherwise."""
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1


# Phased products i^k X^x Z^z, used only while conjugating.


def _phased(p: PauliOp) -> tuple[int, int, int]:
    k = (p.x & p.z).bit_count() + (2 if p.sign < 0 else 0)
    return k % 4, p.x, p.z


def _mul(a: tuple[int, int, int], b: tuple[int, int, int]) -> tuple[int, int, int]:
    ka, xa, za = a
    kb, xb, zb = b
    # Z^za X^xb = (-1)^{|za & xb|} X^xb Z^za
    k = ka + kb + 2 * (za & xb).bit_count()
    return k % 4, xa ^ xb, za ^ zb


def _to_hermitian(n: int, ph: tuple[int, int, int]) -> PauliOp:
    k, x, z = ph
    r = (k - (x & z).bit_count()) % 4
    if r % 2:
        raise ArithmeticError("non-Hermitian phase in Clifford image; tableau is invalid")
    return PauliOp(n, x, z, 1 if r == 0 else -1)


@dataclass(frozen=True, eq=False)
class CliffordGate:
    """Clifford defined by the images of X_j and Z_j under P -> G P G^dagger.

    ``unitary`` is optional; when present it must implement the same action and
    is used by the dense simulators as an independent reference.
    """

    n: int
    x_images: tuple[PauliOp, ...]
    z_images: tuple[PauliOp, ...]
    name: str = "G"
    support: tuple[int, ...] = ()
    unitary: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.x_images) != self.n or len(self.z_images) != self.n:
            raise ValueError("need exactly n x-images and n z-images")
        for p in self.x_images + self.z_images:
            if p.n != self.n:
                raise ValueError("image has wrong qubit count")
        if not self.support:
            object.__setattr__(self, "support", tuple(range(self.n)))
        if not self.is_symplectic():
            raise ValueError(f"gate {self.name!r}: images do not preserve commutation relations")

    def is_symplectic(self) -> bool:
        gens = [PauliOp(self.n, 1 << j, 0) for j in range(self.n)] + [
            PauliOp(self.n, 0, 1 << j) for j in range(self.n)
        ]
        imgs = list(self.x_images) + list(self.z_images)
        for i in range(2 * self.n):
            for j in range(i + 1, 2 * self.n):
                if symplectic(imgs[i], imgs[j]) != symplectic(gens[i], gens[j]):
                    return False
        # Hermitian images must also be independent; commutation alone already
        # forces full rank for 2n images of a symplectic basis.
        return True

    def __call__(self, p: PauliOp) -> PauliOp:
        return conjugate(self, p)

    def same_action(self, other: CliffordGate) -> bool:
        return (
            self.n == other.n
            and self.x_images == other.x_images
            and self.z_images == other.z_images
        )

    def is_identity(self) -> bool:
        return self.same_action(identity_gate(self.n))

    @cached_property
    def _phased_images(self) -> tuple[tuple, tuple]:
        return tuple(_phased(p) for p in self.x_images), tuple(_phased(p) for p in self.z_images)

    @cached_property
    def image_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(image index, sign) of every canonical-index Pauli. Cached; n <= 8 or so."""
        size = 4**self.n
        img = np.empty(size, dtype=np.int64)
        sgn = np.empty(size, dtype=np.int8)
        for a in range(size):
            q = conjugate(self, PauliOp.from_index(a, self.n))
            img[a] = q.index
            sgn[a] = q.sign
        return img, sgn

    def unsigned_images(self) -> np.ndarray:
        """Unsigned image index of every Pauli, vectorized (no signs)."""
        xs, zs = _xz_arrays(self.n)
        xo = np.zeros_like(xs)
        zo = np.zeros_like(zs)
        for j in range(self.n):
            bx = (xs >> j) & 1
            bz = (zs >> j) & 1
            xo ^= bx * self.x_images[j].x ^ bz * self.z_images[j].x
            zo ^= bx * self.x_images[j].z ^ bz * self.z_images[j].z
        return _index_from_arrays(xo, zo, self.n)

    def ptm(self) -> np.ndarray:
        """Signed-permutation Pauli transfer matrix from the tableau."""
        img, sgn = self.image_table
        size = 4**self.n
        r = np.zeros((size, size))
        r[img, np.arange(size)] = sgn
        return r

    def renamed(self, name: str) -> CliffordGate:
        return CliffordGate(self.n, self.x_images, self.z_images, name, self.support, self.unitary)

    def __repr__(self) -> str:
        xs = ",".join(p.signed_label() for p in self.x_images)
        zs = ",".join(p.signed_label() for p in self.z_images)
        return f"CliffordGate({self.name!r}, X->[{xs}], Z->[{zs}])"


def conjugate(g: CliffordGate, p: PauliOp) -> PauliOp:
    """G P G^dagger with its sign."""
    if p.n != g.n:
        raise ValueError(f"Pauli has {p.n} qubits, gate has {g.n}")
    xim, zim = g._phased_images
    acc = ((p.x & p.z).bit_count() + (2 if p.sign < 0 else 0), 0, 0)
    for j in range(g.n):
        if (p.x >> j) & 1:
            acc = _mul(acc, xim[j])
    for j in range(g.n):
        if (p.z >> j) & 1:
            acc = _mul(acc, zim[j])
    return _to_hermitian(g.n, acc)


def compose(g1: CliffordGate, g2: CliffordGate, name: str | None = None) -> CliffordGate:
    """g1 after g2."""
    if g1.n != g2.n:
        raise ValueError("cannot compose gates on different qubit counts")
    u = None
    if g1.unitary is not None and g2.unitary is not None:
        u = g1.unitary @ g2.unitary
    return CliffordGate(
        g1.n,
        tuple(conjugate(g1, p) for p in g2.x_images),
        tuple(conjugate(g1, p) for p in g2.z_images),
        name or f"{g1.name}*{g2.name}",
        unitary=u,
    )


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    size = m.shape[0]
    a = np.concatenate([m % 2, np.eye(size, dtype=np.int64)], axis=1)
    for col in range(size):
        piv = next(r for r in range(col, size) if a[r, col])
        a[[col, piv]] = a[[piv, col]]
        for r in range(size):
            if r != col and a[r, col]:
                a[r] ^= a[col]
    return a[:, size:]


def inverse(g: CliffordGate) -> CliffordGate:
    n = g.n
    # Columns: images of the 2n generators as (x bits, z bits).
    cols = []
    for p in list(g.x_images) + list(g.z_images):
        cols.append([(p.x >> j) & 1 for j in range(n)] + [(p.z >> j) & 1 for j in range(n)])
    minv = _gf2_inverse(np.array(cols, dtype=np.int64).T)

    def unsigned_preimage(k: int) -> PauliOp:
        v = minv[:, k]
        acc = (0, 0, 0)
        # preimage of generator k as a product of generators
        for j in range(n):
            if v[j]:
                acc = _mul(acc, (0, 1 << j, 0))
        for j in range(n):
            if v[n + j]:
                acc = _mul(acc, (0, 0, 1 << j))
        return PauliOp(n, acc[1], acc[2], 1)

    xs, zs = [], []
    for k in range(2 * n):
        q = unsigned_preimage(k)
        target = PauliOp(n, 1 << k, 0) if k < n else PauliOp(n, 0, 1 << (k - n))
        if conjugate(g, q).sign != target.sign:
            q = -q
        (xs if k < n else zs).append(q)
    u = None if g.unitary is None else g.unitary.conj().T
    return CliffordGate(n, tuple(xs), tuple(zs), f"{g.name}^-1", g.support, u)


def gate_order(g: CliffordGate) -> int:
    """Smallest m >= 1 with g^m acting as the identity (signs included)."""
    cap = 4 ** (2 * g.n)
    h = g
    for m in range(1, cap + 1):
        if h.is_identity():
            return m
        h = compose(g, h)
    raise RuntimeError(f"gate order of {g.name!r} exceeds {cap}")


def identity_gate(n: int, name: str = "I") -> CliffordGate:
    return CliffordGate(
        n,
        tuple(PauliOp(n, 1 << j, 0) for j in range(n)),
        tuple(PauliOp(n, 0, 1 << j) for j in range(n)),
        name,
        unitary=np.eye(2**n, dtype=complex),
    )


def _gate(n, x_labels, z_labels, name, unitary=None) -> CliffordGate:
    return CliffordGate(
        n,
        tuple(PauliOp.from_label(s) for s in x_labels),
        tuple(PauliOp.from_label(s) for s in z_labels),
        name,
        unitary=None if unitary is None else np.asarray(unitary, dtype=complex),
    )


def cnot(control: int = 0, target: int = 1, n: int = 2, name: str | None = None) -> CliffordGate:
    g = _gate(
        2,
        ["XX", "IX"],
        ["ZI", "ZZ"],
        "CNOT",
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    )
    if (control, target, n) == (0, 1, 2):
        return g if name is None else g.renamed(name)
    return embed(g, [control, target], n, name or f"CNOT_{control}{target}")


def cz(a: int = 0, b: int = 1, n: int = 2, name: str | None = None) -> CliffordGate:
    g = _gate(2, ["XZ", "ZX"], ["ZI", "IZ"], "CZ", np.diag([1, 1, 1, -1]))
    if (a, b, n) == (0, 1, 2):
        return g if name is None else g.renamed(name)
    return embed(g, [a, b], n, name or f"CZ_{a}{b}")


def swap(a: int = 0, b: int = 1, n: int = 2, name: str | None = None) -> CliffordGate:
    g = _gate(
        2,
        ["IX", "XI"],
        ["IZ", "ZI"],
        "SWAP",
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
    )
    if (a, b, n) == (0, 1, 2):
        return g if name is None else g.renamed(name)
    return embed(g, [a, b], n, name or f"SWAP_{a}{b}")


def hadamard() -> CliffordGate:
    return _gate(1, ["Z"], ["X"], "H", np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def phase() -> CliffordGate:
    """S = sqrt(Z): X -> Y."""
    return _gate(1, ["Y"], ["Z"], "S", np.diag([1, 1j]))


def sqrt_x() -> CliffordGate:
    """sqrt(X) = exp(-i pi X / 4) up to phase: Z -> -Y."""
    u = np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2)
    return _gate(1, ["X"], ["-Y"], "SX", u)


def pauli_gate(label: str) -> CliffordGate:
    """Conjugation by a Pauli: flips signs of anticommuting generators."""
    p = PauliOp.from_label(label)
    n = p.n
    xs = tuple(PauliOp(n, 1 << j, 0, -1 if symplectic(p, PauliOp(n, 1 << j, 0)) else 1) for j in range(n))
    zs = tuple(PauliOp(n, 0, 1 << j, -1 if symplectic(p, PauliOp(n, 0, 1 << j)) else 1) for j in range(n))
    return CliffordGate(n, xs, zs, label, unitary=p.matrix())


def _qubit_permutation_unitary(perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - j)) & 1 for j in range(n)]  # qubit 0 most significant
        out = [0] * n
        for j in range(n):
            out[perm[j]] = bits[j]
        row = sum(b << (n - 1 - j) for j, b in enumerate(out))
        u[row, col] = 1
    return u


def permutation_gate(perm: Sequence[int], name: str | None = None) -> CliffordGate:
    """Moves the state of qubit j onto qubit perm[j]."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation")
    xs = tuple(PauliOp(n, 1 << perm[j], 0) for j in range(n))
    zs = tuple(PauliOp(n, 0, 1 << perm[j]) for j in range(n))
    return CliffordGate(n, xs, zs, name or "PERM" + "".join(map(str, perm)),
                        unitary=_qubit_permutation_unitary(perm))


def _embed_unitary(u: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    k = len(support)
    rest = [q for q in range(n) if q not in support]
    order = list(support) + rest
    full = np.kron(u, np.eye(2 ** (n - k)))
    # full acts on qubits in `order`; permute axes back to 0..n-1
    t = full.reshape([2] * (2 * n))
    inv = [order.index(q) for q in range(n)]
    t = t.transpose(inv + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def _lift(p: PauliOp, support: Sequence[int], n: int) -> PauliOp:
    x = z = 0
    for i, q in enumerate(support):
        x |= ((p.x >> i) & 1) << q
        z |= ((p.z >> i) & 1) << q
    return PauliOp(n, x, z, p.sign)


def embed(g: CliffordGate, support: Sequence[int], n: int, name: str | None = None) -> CliffordGate:
    """Act as ``g`` on the ordered qubits ``support`` of an n-qubit register."""
    support = list(support)
    if len(support) != g.n:
        raise ValueError(f"support has {len(support)} qubits, gate has {g.n}")
    if len(set(support)) != len(support) or any(not 0 <= q < n for q in support):
        raise ValueError(f"bad support {support} for n={n}")
    xs = [PauliOp(n, 1 << j, 0) for j in range(n)]
    zs = [PauliOp(n, 0, 1 << j) for j in range(n)]
    for i, q in enumerate(support):
        xs[q] = _lift(g.x_images[i], support, n)
        zs[q] = _lift(g.z_images[i], support, n)
    u = None if g.unitary is None else _embed_unitary(g.unitary, support, n)
    return CliffordGate(n, tuple(xs), tuple(zs), name or g.name, tuple(support), u)


def tensor_layer(gates: Sequence[CliffordGate], name: str | None = None) -> CliffordGate:
    """Tensor product of single-qubit gates, gates[j] on qubit j."""
    n = len(gates)
    layer = identity_gate(n)
    for j, g in enumerate(gates):
        if g.n != 1:
            raise ValueError("tensor_layer takes single-qubit gates")
        layer = compose(embed(g, [j], n), layer)
    return layer.renamed(name or "(" + ",".join(g.name for g in gates) + ")")


_SQ_CACHE: list[CliffordGate] = []


def single_qubit_cliffords() -> list[CliffordGate]:
    """The 24 single-qubit Cliffords (signed action), generated from H and S."""
    if _SQ_CACHE:
        return list(_SQ_CACHE)
    gens = [hadamard(), phase()]
    found = [identity_gate(1, "I")]
    frontier = list(found)
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                c = compose(h, g, name=(h.name + g.name if g.name != "I" else h.name))
                if not any(c.same_action(f) for f in found):
                    found.append(c)
                    nxt.append(c)
        frontier = nxt
    assert len(found) == 24
    _SQ_CACHE.extend(found)
    return list(found)


def random_clifford(n: int, rng: np.random.Generator, depth: int | None = None,
                    name: str = "RAND") -> CliffordGate:
    """Random Clifford as a random word in H, S and CNOT (not Haar/uniform)."""
    depth = depth if depth is not None else 10 * n * n
    h, s = hadamard(), phase()
    g = identity_gate(n)
    for _ in range(depth):
        r = rng.integers(3) if n > 1 else rng.integers(2)
        if r == 0:
            g = compose(embed(h, [int(rng.integers(n))], n), g)
        elif r == 1:
            g = compose(embed(s, [int(rng.integers(n))], n), g)
        else:
            a, b = rng.choice(n, size=2, replace=False)
            g = compose(cnot(int(a), int(b), n), g)
    return g.renamed(name)


# JSON tableau format


def gate_to_json(g: CliffordGate) -> dict:
    return {
        "n": g.n,
        "name": g.name,
        "x_images": [p.signed_label() for p in g.x_images],
        "z_images": [p.signed_label() for p in g.z_images],
    }


def gate_from_json(obj: dict | str) -> CliffordGate:
    if isinstance(obj, str):
        obj = json.loads(obj)
    n = int(obj["n"])
    xs = tuple(PauliOp.from_label(s) for s in obj["x_images"])
    zs = tuple(PauliOp.from_label(s) for s in obj["z_images"])
    for p in xs + zs:
        if p.n != n:
            raise ValueError(f"image {p} does not have n={n} qubits")
    return CliffordGate(n, xs, zs, obj.get("name", "G"))


def iter_paulis(n: int) -> Iterable[PauliOp]:
    for a in range(4**n):
        yield PauliOp.from_index(a, n)


def local_closing_layer(target: PauliOp, current: PauliOp) -> CliffordGate | None:
    """Layer of single-qubit Cliffords U with U(current) = target (signs included).

    Returns None when the two Paulis have different patterns, since no local
    layer can change a pattern.
    """
    if target.n != current.n:
        raise ValueError("Paulis act on different qubit counts")
    if target.pattern != current.pattern:
        return None
    n = target.n
    sq = single_qubit_cliffords()
    picks = []
    for j in range(n):
        a = PauliOp.from_label(current.label[j])
        b = PauliOp.from_label(target.label[j])
        picks.append(next(c for c in sq if conjugate(c, a).unsigned() == b))
    layer = tensor_layer(picks)
    if conjugate(layer, current).sign != target.sign:
        j = next((j for j in range(n) if target.label[j] != "I"), None)
        if j is None:
            return None  # +I can never become -I
        flip = {"X": "Z", "Y": "Z", "Z": "X"}[target.label[j]]
        layer = compose(pauli_gate("".join(flip if k == j else "I" for k in range(n))), layer)
    return layer


_NAMED_1Q = {
    "I": lambda: identity_gate(1, "I"),
    "H": hadamard,
    "S": phase,
    "SX": sqrt_x,
    "SDG": lambda: inverse(phase()).renamed("SDG"),
    "SXDG": lambda: inverse(sqrt_x()).renamed("SXDG"),
    "X": lambda: pauli_gate("X"),
    "Y": lambda: pauli_gate("Y"),
    "Z": lambda: pauli_gate("Z"),
}


def parse_layer(spec: str) -> CliffordGate:
    """Layer from comma-separated single-qubit gate names, qubit 0 first (e.g. "S,SX")."""
    names = [s.strip().upper() for s in spec.split(",")]
    try:
        gates = [_NAMED_1Q[s]() for s in names]
    except KeyError as exc:
        raise ValueError(f"unknown single-qubit gate {exc.args[0]!r} in layer {spec!r}; "
                         f"known: {sorted(_NAMED_1Q)}") from None
    return tensor_layer(gates, name=",".join(names))


_LIB_RE = re.compile(r"^(CNOT|CZ|SWAP)(?:_?(\d)(\d))?$")


def library_gate(name: str, n: int | None = None) -> CliffordGate:
    """Named library gate: CNOT, CZ, SWAP (optionally CNOT_01 style on n qubits) or CIRC<n>."""
    key = name.strip().upper()
    m = _LIB_RE.match(key)
    if m:
        a, b = (int(m.group(2)), int(m.group(3))) if m.group(2) else (0, 1)
        n = n or max(2, a + 1, b + 1)
        ctor = {"CNOT": cnot, "CZ": cz, "SWAP": swap}[m.group(1)]
        return ctor(a, b, n, name=name)
    if key.startswith("CIRC") and key[4:].isdigit():
        k = int(key[4:])
        return permutation_gate([(j + 1) % k for j in range(k)], name=name)
    if key in _NAMED_1Q:
        return _NAMED_1Q[key]().renamed(name)
    raise ValueError(f"unknown library gate {name!r}")
