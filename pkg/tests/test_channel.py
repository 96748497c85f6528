import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from paulilearn.channel import (
    NoiseModel,
    PauliChannel,
    naive_wht,
    pauli_twirl_diagonal,
    validate,
    wht,
    wht_lambda_to_p,
    wht_p_to_lambda,
)
from paulilearn.dense import (
    amplitude_damping_kraus,
    bit_flip_kraus,
    kraus_ptm,
    pauli_matrices,
    tensor_kraus,
)


def pauli_mixture_ptm(p):
    """PTM of rho -> sum_a p_a P_a rho P_a, built from dense matrices."""
    n = int(round(np.log(len(p)) / np.log(4)))
    mats = pauli_matrices(n)
    return kraus_ptm([np.sqrt(max(w, 0.0)) * m for w, m in zip(p, mats)])


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_fast_wht_matches_naive(n, seed):
    v = np.random.default_rng(seed).normal(size=4**n)
    assert np.max(np.abs(wht(v) - naive_wht(v))) < 1e-12


def test_wht_is_batched_over_leading_axes(rng):
    v = rng.normal(size=(3, 5, 16))
    out = wht(v)
    for i in range(3):
        for j in range(5):
            assert np.allclose(out[i, j], naive_wht(v[i, j]))


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_p_lambda_roundtrip(n, seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(4**n))
    assert np.allclose(wht_lambda_to_p(wht_p_to_lambda(p)), p, atol=1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_lambda_from_p_matches_dense_channel(n, rng):
    p = rng.dirichlet(np.ones(4**n))
    ch = PauliChannel.from_p(p)
    r = pauli_mixture_ptm(p)
    assert np.allclose(np.diag(r), ch.lambdas, atol=1e-12)
    assert np.allclose(r, np.diag(np.diag(r)), atol=1e-12)


def test_depolarizing_error_rates():
    ch = PauliChannel.depolarizing(1, 0.04)
    assert np.allclose(ch.p, [0.97, 0.01, 0.01, 0.01])


def test_validate_cptp_and_strict():
    ok = PauliChannel.from_p([0.97, 0.01, 0.01, 0.01])
    assert validate(ok, "cptp").ok and validate(ok, "strict").ok
    edge = PauliChannel.from_p([0.98, 0.01, 0.01, 0.0])
    assert validate(edge, "cptp").ok
    assert not validate(edge, "strict").ok
    bad = PauliChannel(1, [1.0, 1.0, 1.0, 0.9])
    rep = validate(bad, "cptp")
    assert not rep.ok
    assert {v.label for v in rep.violations} == {"Y"}
    with pytest.raises(ValueError):
        validate(ok, "lenient")


def test_identity_fidelity_enforced():
    with pytest.raises(ValueError):
        PauliChannel(1, [0.9, 1, 1, 1])
    with pytest.raises(ValueError):
        PauliChannel.from_p([0.5, 0.1, 0.1, 0.1])


def test_twirled_amplitude_damping_fidelities():
    gamma = 0.05
    r = kraus_ptm(amplitude_damping_kraus(gamma))
    ch = pauli_twirl_diagonal(r)
    a = np.sqrt(1 - gamma)
    assert np.allclose(ch.lambdas, [1, a, 1 - gamma, a], atol=1e-14)
    two = pauli_twirl_diagonal(kraus_ptm(tensor_kraus([amplitude_damping_kraus(gamma)] * 2)))
    assert two.fidelity("XX") == pytest.approx(1 - gamma)
    assert two.fidelity("ZZ") == pytest.approx((1 - gamma) ** 2)
    assert two.fidelity("XZ") == pytest.approx(a * (1 - gamma))


def test_x_flip_matches_dense_bit_flip():
    rates = [0.03, 0.07]
    r = kraus_ptm(tensor_kraus([bit_flip_kraus(q) for q in rates]))
    assert np.allclose(np.diag(r), PauliChannel.x_flip(rates).lambdas, atol=1e-13)


def test_pattern_flip_damps_every_factor():
    ch = PauliChannel.pattern_flip([0.1, 0.0])
    assert ch.fidelity("XI") == pytest.approx(0.8)
    assert ch.fidelity("YZ") == pytest.approx(0.8)
    assert ch.fidelity("IZ") == pytest.approx(1.0)


def test_random_channel_floor(rng):
    ch = PauliChannel.random(2, rng, 0.05, floor=0.5)
    assert ch.p[0] == pytest.approx(0.95)
    assert np.min(ch.p[1:]) >= 0.5 * 0.05 / 15 - 1e-15
    assert validate(ch, "strict").ok


@given(st.integers(0, 2**32 - 1))
def test_compose_multiplies_fidelities(seed):
    rng = np.random.default_rng(seed)
    a, b = PauliChannel.random(2, rng), PauliChannel.random(2, rng)
    c = a.compose(b)
    assert np.allclose(c.lambdas, a.lambdas * b.lambdas)
    # composing Pauli mixtures convolves the error distributions
    assert np.allclose(pauli_mixture_ptm(c.p), pauli_mixture_ptm(a.p) @ pauli_mixture_ptm(b.p),
                       atol=1e-12)


@given(arrays(float, 4, elements=st.floats(0.01, 1.0)))
def test_channel_json_roundtrip(w):
    p = w / w.sum()
    ch = PauliChannel.from_p(p)
    for basis in ("lambda", "p"):
        back = PauliChannel.from_json(ch.to_json(basis))
        assert np.allclose(back.lambdas, ch.lambdas, atol=1e-14)


def test_noise_model_json_and_min_rate(rng):
    m = NoiseModel(2, PauliChannel.pattern_flip([0.01, 0.02]), PauliChannel.identity(2),
                   {"CNOT": PauliChannel.random(2, rng)})
    back = NoiseModel.from_json(m.to_json())
    assert np.allclose(back.gate("CNOT").lambdas, m.gate("CNOT").lambdas)
    assert m.min_error_rate() == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(KeyError):
        m.gate("SWAP")
