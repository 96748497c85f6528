"""Dense Pauli-transfer-matrix helpers for small n (oracle use only)."""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .pauli import PauliOp

__all__ = [
    "pauli_matrices",
    "unitary_ptm",
    "kraus_ptm",
    "amplitude_damping_kraus",
    "bit_flip_kraus",
    "depolarizing_kraus",
    "tensor_kraus",
    "embed_kraus",
    "check_kraus",
]

MAX_DENSE_QUBITS = 3


@lru_cache(maxsize=None)
def pauli_matrices(n: int) -> np.ndarray:
    """Stack of the 4^n Pauli matrices in canonical index order."""
    if n > MAX_DENSE_QUBITS + 1:
        raise ValueError(f"dense Pauli basis refused for n={n}")
    mats = np.stack([PauliOp.from_index(a, n).matrix() for a in range(4**n)])
    mats.setflags(write=False)
    return mats


def _apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)


def kraus_ptm(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """R[a, b] = Tr(P_a E(P_b)) / 2^n."""
    dim = kraus[0].shape[0]
    n = int(round(np.log2(dim)))
    ps = pauli_matrices(n)
    out = np.stack([_apply_kraus(kraus, p) for p in ps])
    r = np.einsum("aij,bji->ab", ps, out) / dim
    return r.real


def unitary_ptm(u: np.ndarray) -> np.ndarray:
    return kraus_ptm([np.asarray(u, dtype=complex)])


def check_kraus(kraus: Sequence[np.ndarray], tol: float = 1e-10) -> None:
    dim = kraus[0].shape[0]
    total = sum(k.conj().T @ k for k in kraus)
    err = np.max(np.abs(total - np.eye(dim)))
    if err > tol:
        raise ValueError(f"Kraus set is not trace preserving (deviation {err:.2e})")


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    if not 0 <= gamma <= 1:
        raise ValueError(f"damping rate {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return [k0, k1]


def bit_flip_kraus(q: float) -> list[np.ndarray]:
    if not 0 <= q <= 1:
        raise ValueError(f"flip rate {q} outside [0, 1]")
    return [np.sqrt(1 - q) * np.eye(2, dtype=complex),
            np.sqrt(q) * np.array([[0, 1], [1, 0]], dtype=complex)]


def depolarizing_kraus(q: float) -> list[np.ndarray]:
    """Single-qubit depolarizing with fidelity 1 - q on X, Y, Z."""
    ops = [np.eye(2), [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]]
    w = [1 - 3 * q / 4, q / 4, q / 4, q / 4]
    return [np.sqrt(wi) * np.asarray(o, dtype=complex) for wi, o in zip(w, ops)]


def tensor_kraus(per_qubit: Sequence[Sequence[np.ndarray]]) -> list[np.ndarray]:
    """Kraus set of a product channel, first entry on qubit 0 (most significant)."""
    out = [np.ones((1, 1), dtype=complex)]
    for ks in per_qubit:
        out = [np.kron(a, k) for a in out for k in ks]
    return out


def embed_kraus(kraus: Sequence[np.ndarray], qubit: int, n: int) -> list[np.ndarray]:
    eye = [np.eye(2, dtype=complex)]
    return tensor_kraus([kraus if j == qubit else eye for j in range(n)])


# Pauli-vector states and product-basis measurements


def pauli_vector(rho: np.ndarray) -> np.ndarray:
    """r_a = Tr(P_a rho)."""
    n = int(round(np.log2(rho.shape[0])))
    return np.einsum("aij,ji->a", pauli_matrices(n), rho).real


def product_eigenstate(labels: str, signs: Sequence[int]) -> np.ndarray:
    """Density matrix of the product state with qubit j stabilized by signs[j] * labels[j]."""
    rho = np.ones((1, 1), dtype=complex)
    for ch, s in zip(labels, signs):
        p = PauliOp.from_label(ch).matrix()
        rho = np.kron(rho, (np.eye(2) + s * p) / 2)
    return rho


def stabilizer_vector(p: PauliOp) -> np.ndarray:
    """Pauli vector of the pure product state stabilized by every factor of p (and its sign).

    Identity factors are replaced by Z eigenstates with sign +1.
    """
    labels = "".join(ch if ch != "I" else "Z" for ch in p.label)
    signs = [1] * p.n
    signs[0] = p.sign
    return pauli_vector(product_eigenstate(labels, signs))


def outcome_distribution(r: np.ndarray, basis: str) -> np.ndarray:
    """Probabilities of the 2^n outcomes of measuring each qubit j in Pauli basis[j].

    Outcome bit j = 1 means eigenvalue -1 on qubit j; outcome integer has qubit 0 as bit 0.
    """
    n = len(basis)
    probs = np.zeros(2**n)
    outcomes = np.arange(2**n)
    for t in range(2**n):
        lab = "".join(basis[j] if (t >> j) & 1 else "I" for j in range(n))
        val = r[PauliOp.from_label(lab).index]
        parity = np.zeros(2**n, dtype=np.int64)
        for j in range(n):
            if (t >> j) & 1:
                parity ^= (outcomes >> j) & 1
        probs += (1 - 2 * parity) * val
    return probs / 2**n
