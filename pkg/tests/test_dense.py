import numpy as np
import pytest
from hypothesis import given, strategies as st

from paulilearn.dense import (
    amplitude_damping_kraus,
    bit_flip_kraus,
    check_kraus,
    depolarizing_kraus,
    embed_kraus,
    kraus_ptm,
    outcome_distribution,
    pauli_matrices,
    pauli_vector,
    product_eigenstate,
    stabilizer_vector,
    unitary_ptm,
)
from paulilearn.pauli import PauliOp, cnot, random_clifford


def born_probabilities(rho, basis):
    """Outcome probabilities by projecting onto product eigenvectors."""
    n = len(basis)
    out = np.zeros(2**n)
    for t in range(2**n):
        proj = np.ones((1, 1), dtype=complex)
        for j in range(n):
            s = -1 if (t >> j) & 1 else 1
            p = PauliOp.from_label(basis[j]).matrix()
            proj = np.kron(proj, (np.eye(2) + s * p) / 2)
        out[t] = np.trace(proj @ rho).real
    return out


def random_density(n, rng):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_pauli_matrices_are_orthogonal():
    ps = pauli_matrices(2)
    gram = np.einsum("aji,bji->ab", ps.conj(), ps) / 4
    assert np.allclose(gram, np.eye(16))


def test_ptm_acts_on_pauli_vectors(rng):
    rho = random_density(2, rng)
    kraus = embed_kraus(amplitude_damping_kraus(0.2), 1, 2)
    out = sum(k @ rho @ k.conj().T for k in kraus)
    assert np.allclose(kraus_ptm(kraus) @ pauli_vector(rho), pauli_vector(out), atol=1e-12)


def test_unitary_ptm_is_signed_permutation():
    r = unitary_ptm(cnot().unitary)
    assert np.allclose(np.abs(r).sum(axis=0), 1)
    assert np.allclose(r @ r.T, np.eye(16))
    xz, yy = PauliOp.from_label("XZ"), PauliOp.from_label("YY")
    assert r[yy.index, xz.index] == pytest.approx(-1)


def test_depolarizing_kraus_fidelities():
    assert np.allclose(np.diag(kraus_ptm(depolarizing_kraus(0.1))), [1, 0.9, 0.9, 0.9])


def test_kraus_validation():
    check_kraus(amplitude_damping_kraus(0.3))
    with pytest.raises(ValueError):
        check_kraus([np.eye(2) * 0.9])
    with pytest.raises(ValueError):
        bit_flip_kraus(1.5)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["ZZ", "XY", "YZ", "XX"]))
def test_outcome_distribution_matches_born_rule(seed, basis):
    rho = random_density(2, np.random.default_rng(seed))
    probs = outcome_distribution(pauli_vector(rho), basis)
    assert np.allclose(probs, born_probabilities(rho, basis), atol=1e-12)


def test_stabilizer_vector_signs():
    r = stabilizer_vector(PauliOp.from_label("-XZ"))
    assert r[PauliOp.from_label("XI").index] == pytest.approx(-1)
    assert r[PauliOp.from_label("IZ").index] == pytest.approx(1)
    assert r[PauliOp.from_label("XZ").index] == pytest.approx(-1)
    rho = product_eigenstate("XZ", [-1, 1])
    assert np.allclose(pauli_vector(rho), r)


@given(st.integers(0, 2**32 - 1))
def test_clifford_ptm_matches_tableau(seed):
    g = random_clifford(2, np.random.default_rng(seed))
    if g.unitary is None:
        return
    assert np.allclose(unitary_ptm(g.unitary), g.ptm(), atol=1e-12)
