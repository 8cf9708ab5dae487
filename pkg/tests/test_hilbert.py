from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecrbudget import hilbert
from ecrbudget.hilbert import PAULI


def random_state(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=hilbert.DIM) + 1j * rng.normal(size=hilbert.DIM)
    return v / np.linalg.norm(v)


def random_2x2(rng):
    return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))


def test_basis_ordering_is_control_major():
    assert hilbert.index(1, 0) == 3
    assert hilbert.index(0, 2) == 2
    assert hilbert.basis_state(2, 1)[7] == 1


def test_identity_on_target_is_qubit_projector():
    e = hilbert.embed_qubit_operator(np.eye(2), "target")
    assert np.allclose(e @ e, e)
    assert np.allclose(np.diag(e), [1, 1, 0, 1, 1, 0, 0, 0, 0])


def test_control_z_eigenvalues():
    z = hilbert.embed_qubit_operator(PAULI["Z"], "control")
    assert np.vdot(hilbert.basis_state(0, 0), z @ hilbert.basis_state(0, 0)).real == pytest.approx(1)
    assert np.vdot(hilbert.basis_state(1, 0), z @ hilbert.basis_state(1, 0)).real == pytest.approx(-1)


def test_zx_word_matches_tensor_product():
    product = hilbert.embed_qubit_operator(PAULI["Z"], "control") @ hilbert.embed_qubit_operator(PAULI["X"], "target")
    brute = np.zeros((9, 9), dtype=complex)
    for c in range(2):
        for t in range(2):
            for c2 in range(2):
                for t2 in range(2):
                    brute[3 * c + t, 3 * c2 + t2] = PAULI["Z"][c, c2] * PAULI["X"][t, t2]
    assert np.allclose(product, brute)
    assert np.allclose(hilbert.pauli_word("ZX"), brute)


def test_annihilation_operator():
    a = hilbert.annihilation_operator()
    assert np.allclose(a @ [1, 0, 0], 0)
    assert np.allclose(a @ [0, 0, 1], [0, np.sqrt(2), 0])
    assert np.allclose(np.linalg.eigvalsh(a.conj().T @ a), [0, 1, 2])


def test_partial_trace_product_state():
    red = hilbert.partial_trace(hilbert.basis_state(1, 0), "target")
    assert np.allclose(red, np.diag([1, 0, 0]))


@pytest.mark.parametrize("keep", ["control", "target"])
def test_partial_trace_bell_state(keep):
    psi = (hilbert.basis_state(0, 0) + hilbert.basis_state(1, 1)) / np.sqrt(2)
    assert np.allclose(hilbert.partial_trace(psi, keep), np.diag([0.5, 0.5, 0]))


def test_partial_trace_random_state_has_unit_trace():
    rng = np.random.default_rng(1)
    for _ in range(20):
        psi = random_state(rng)
        for keep in ("control", "target"):
            assert np.trace(hilbert.partial_trace(psi, keep)).real == pytest.approx(1, abs=1e-12)


def test_partial_trace_is_linear():
    rng = np.random.default_rng(2)
    r1, r2 = (hilbert.to_density(random_state(rng)) for _ in range(2))
    mix = 0.3 * r1 + 0.7 * r2
    for keep in ("control", "target"):
        lhs = hilbert.partial_trace(mix, keep)
        rhs = 0.3 * hilbert.partial_trace(r1, keep) + 0.7 * hilbert.partial_trace(r2, keep)
        assert np.allclose(lhs, rhs)


def test_bloch_vectors():
    assert hilbert.bloch_vector(np.diag([1, 0, 0])) == pytest.approx((0, 0, 1, 0))
    assert hilbert.bloch_vector(np.diag([0, 0, 1])) == pytest.approx((0, 0, 0, 1))
    plus = np.array([1, 1, 0]) / np.sqrt(2)
    assert hilbert.bloch_vector(np.outer(plus, plus)) == pytest.approx((1, 0, 0, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["control", "target"]))
def test_embedding_preserves_commutators(seed, subsystem):
    rng = np.random.default_rng(seed)
    a, b = random_2x2(rng), random_2x2(rng)
    ea, eb = (hilbert.embed_qubit_operator(m, subsystem) for m in (a, b))
    lhs = ea @ eb - eb @ ea
    rhs = hilbert.embed_qubit_operator(a @ b - b @ a, subsystem)
    q = np.ix_(hilbert.COMPUTATIONAL, hilbert.COMPUTATIONAL)
    assert np.max(np.abs(lhs[q] - rhs[q])) < 1e-12


def test_unitarity_error_and_validation():
    assert hilbert.unitarity_error(np.eye(9)) == 0
    with pytest.raises(ValueError):
        hilbert.validate_state(np.ones(9))


def test_average_gate_fidelity_bounds():
    assert hilbert.average_gate_fidelity(np.eye(4), np.eye(4)) == pytest.approx(1)
    x = np.kron(PAULI["X"], PAULI["I"])
    assert hilbert.average_gate_fidelity(x, np.eye(4)) == pytest.approx(1 / 5)
