"""Operator and state algebra on the two-qutrit (control x target) space.

Basis ordering is control-major: ``|c, t>`` has index ``3 * c + t``, which is
exactly what ``np.kron(control_op, target_op)`` produces.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

LEVELS = 3
DIM = LEVELS * LEVELS

Subsystem = Literal["control", "target"]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

QUBIT_PROJECTOR = np.diag([1.0, 1.0, 0.0]).astype(complex)

# indices of |00>, |01>, |10>, |11> inside the 9-dim space
COMPUTATIONAL = np.array([0, 1, 3, 4])


def index(control: int, target: int) -> int:
    return LEVELS * control + target


def basis_state(control: int, target: int) -> np.ndarray:
    psi = np.zeros(DIM, dtype=complex)
    psi[index(control, target)] = 1.0
    return psi


def pad_qubit(op2x2: np.ndarray) -> np.ndarray:
    """Zero-pad a 2x2 operator into the 3x3 qutrit space."""
    out = np.zeros((LEVELS, LEVELS), dtype=complex)
    out[:2, :2] = np.asarray(op2x2, dtype=complex)
    return out


def embed_qubit_operator(op2x2: np.ndarray, subsystem: Subsystem) -> np.ndarray:
    """Embed a qubit operator on one transmon, projecting the other onto its qubit subspace.

    Matrix elements touching level ``|2>`` of the embedded factor are zero.
    """
    op = pad_qubit(op2x2)
    if subsystem == "control":
        return np.kron(op, QUBIT_PROJECTOR)
    if subsystem == "target":
        return np.kron(QUBIT_PROJECTOR, op)
    raise ValueError(f"unknown subsystem {subsystem!r}")


def pauli_word(word: str) -> np.ndarray:
    """Two-qubit Pauli word such as ``"ZX"`` (control letter first) on the qubit subspace."""
    if len(word) != 2:
        raise ValueError("expected a two-letter Pauli word")
    return np.kron(pad_qubit(PAULI[word[0]]), pad_qubit(PAULI[word[1]]))


def annihilation_operator(levels: int = LEVELS) -> np.ndarray:
    if levels != LEVELS:
        raise ValueError("the transmon model is fixed at 3 levels")
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def on_control(op3x3: np.ndarray) -> np.ndarray:
    return np.kron(op3x3, np.eye(LEVELS))


def on_target(op3x3: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(LEVELS), op3x3)


def to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def partial_trace(state: np.ndarray, keep: Subsystem) -> np.ndarray:
    """Reduced 3x3 density matrix of one transmon from a pure vector or 9x9 density matrix."""
    rho = to_density(state).reshape(LEVELS, LEVELS, LEVELS, LEVELS)
    if keep == "control":
        return np.einsum("itjt->ij", rho)
    if keep == "target":
        return np.einsum("ctcs->ts", rho)
    raise ValueError(f"unknown subsystem {keep!r}")


def bloch_vector(reduced: np.ndarray) -> tuple[float, float, float, float]:
    """``(x, y, z, leak)`` of a single-transmon density matrix.

    The Pauli expectations use the unnormalized qubit block, so a leaked state
    shrinks the vector; ``leak`` is the ``|2>`` population.
    """
    rq = reduced[:2, :2]
    x = float(np.real(np.trace(PAULI["X"] @ rq)))
    y = float(np.real(np.trace(PAULI["Y"] @ rq)))
    z = float(np.real(np.trace(PAULI["Z"] @ rq)))
    return x, y, z, float(np.real(reduced[2, 2]))


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.allclose(op, op.conj().T, atol=atol))


def validate_state(state: np.ndarray, atol: float = 1e-10) -> None:
    """Raise ``ValueError`` if ``state`` is not a normalized vector or valid density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        if abs(np.linalg.norm(state) - 1.0) > atol:
            raise ValueError("state vector is not normalized")
        return
    if abs(np.trace(state) - 1.0) > atol:
        raise ValueError("density matrix trace differs from 1")
    if not is_hermitian(state, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if np.min(np.linalg.eigvalsh(state)) < -atol:
        raise ValueError("density matrix has negative eigenvalues")


def average_gate_fidelity(actual: np.ndarray, ideal: np.ndarray) -> float:
    """Average gate fidelity of a (possibly leaky, non-unitary) block against a unitary.

    Both arguments are ``d x d`` matrices on the same computational subspace;
    ``actual`` may be the compression of a larger unitary, in which case the
    lost norm counts as error.
    """
    d = ideal.shape[0]
    m = ideal.conj().T @ actual
    return float((np.real(np.trace(m @ m.conj().T)) + abs(np.trace(m)) ** 2) / (d * (d + 1)))


def computational_block(u: np.ndarray) -> np.ndarray:
    """The 4x4 compression of a 9x9 operator onto the two-qubit subspace."""
    return u[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]


def lift_two_qubit(u4: np.ndarray) -> np.ndarray:
    """Place a 4x4 operator into the 9x9 space, acting as zero outside the qubit subspace."""
    out = np.zeros((DIM, DIM), dtype=complex)
    out[np.ix_(COMPUTATIONAL, COMPUTATIONAL)] = u4
    return out


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm distance between two unitaries after removing the best global phase."""
    overlap = np.trace(b.conj().T @ a)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(a - phase * b)))
