"""Two-qubit Clifford group: enumeration, class decomposition, sampling and native compilation.

Every element is written as ``(A x B) . R_k . (s x s')`` where ``A, B`` are
single-qubit Cliffords, ``R_k`` is the representative of one of four
entangling classes and ``s, s'`` run over the three-element group ``S1``
(the CNOT and iSWAP classes only).  The class representatives are built from
the native echoed CR gate, so class ``k`` costs exactly ``k`` ECRs:

=========  =========  ===========
class      ECR count  size
=========  =========  ===========
identity   0          576
cnot       1          5184
iswap      2          5184
swap       3          576
=========  =========  ===========

Qubit order is (control, target); ``kron(control_op, target_op)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gates import SX, ideal_ecr, rz

CLASSES = ("identity", "cnot", "iswap", "swap")
CLASS_SIZES = {"identity": 576, "cnot": 5184, "iswap": 5184, "swap": 576}
GROUP_ORDER = 11520
CLASS_WEIGHTS = {k: v / GROUP_ORDER for k, v in CLASS_SIZES.items()}

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
PAULIS_1Q = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0 + 0j, -1.0]),
}


def phase_key(u: np.ndarray, decimals: int = 6) -> bytes:
    """Hashable key of ``u`` up to a global phase."""
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = flat * (abs(flat[k]) / flat[k])
    parts = np.concatenate([v.real, v.imag])
    return (np.round(parts, decimals) + 0.0).tobytes()  # + 0.0 clears negative zeros


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    overlap = np.trace(b.conj().T @ a)
    if abs(overlap) < 1e-12:
        return False
    return bool(np.allclose(a, b * overlap / abs(overlap), atol=atol))


# -- single-qubit Cliffords ----------------------------------------------------


@dataclass(frozen=True)
class NativeOp:
    """``kind`` is "rz" (angle), "sx" or "ecr"; ``qubit`` is 0 (control) or 1 (target)."""

    kind: str
    qubit: int = 0
    angle: float = 0.0


def _native_1q(ops: tuple[tuple[str, float], ...]) -> np.ndarray:
    u = I2
    for kind, angle in ops:
        u = (rz(angle) if kind == "rz" else SX) @ u
    return u


@lru_cache(maxsize=None)
def single_qubit_cliffords() -> tuple[tuple[np.ndarray, tuple], ...]:
    """The 24 single-qubit Cliffords with their shortest Rz/SX realizations (time order)."""
    found: dict[bytes, tuple] = {}
    quarter = [0.0, np.pi / 2, np.pi, -np.pi / 2]
    candidates = [()]
    candidates += [(("rz", a),) for a in quarter[1:]]
    candidates += [(("rz", a), ("sx", 0), ("rz", b)) for a in quarter for b in quarter]
    candidates += [(("rz", a), ("sx", 0), ("rz", b), ("sx", 0), ("rz", c))
                   for a in quarter for b in quarter for c in quarter]
    for seq in candidates:
        seq = tuple(op for op in seq if not (op[0] == "rz" and op[1] == 0.0))
        key = phase_key(_native_1q(seq))
        if key not in found:
            found[key] = seq
    elements = _closure([H, S], 2)
    out = []
    for u in elements:
        seq = found[phase_key(u)]
        out.append((_native_1q(seq), seq))
    if len(out) != 24:
        raise AssertionError("single-qubit Clifford enumeration failed")
    return tuple(out)


def _closure(generators: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Breadth-first closure of the generated group, one matrix per phase class."""
    identity = np.eye(dim, dtype=complex)
    seen = {phase_key(identity): identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for u in frontier:
            for g in generators:
                w = g @ u
                k = phase_key(w)
                if k not in seen:
                    seen[k] = w
                    nxt.append(w)
        frontier = nxt
    return list(seen.values())


def brute_force_group(generators: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """All two-qubit Cliffords generated by H, S on each qubit and CNOT, up to global phase."""
    if generators is None:
        generators = [np.kron(H, I2), np.kron(I2, H), np.kron(S, I2), np.kron(I2, S), CNOT]
    return _closure(generators, 4)


@lru_cache(maxsize=None)
def _s1() -> tuple[int, ...]:
    """Indices (into ``single_qubit_cliffords``) of the S1 subgroup."""
    cl = single_qubit_cliffords()
    # 120-degree rotation about (1, 1, 1): X -> Y -> Z -> X
    r = np.array([[1 - 1j, -1 - 1j], [1 - 1j, 1 + 1j]]) / 2
    targets = [I2, r, r @ r]
    return tuple(next(i for i, (u, _) in enumerate(cl) if equal_up_to_phase(u, t)) for t in targets)


def _local(a: int, b: int) -> np.ndarray:
    cl = single_qubit_cliffords()
    return np.kron(cl[a][0], cl[b][0])


@lru_cache(maxsize=None)
def class_representatives() -> dict[str, tuple[np.ndarray, tuple]]:
    """Entangling-class representatives as (unitary, native sequence).

    ``cnot`` is one ECR.  ``iswap`` and ``swap`` are ECRs interleaved with
    local Cliffords found by search so that the resulting class sets tile the
    group.
    """
    ecr = ideal_ecr()
    reps = {"identity": (np.eye(4, dtype=complex), ()), "cnot": (ecr, ("ecr",))}
    for n, name in ((2, "iswap"), (3, "swap")):
        seq = _KNOWN_REPS[name]
        u = _sequence_unitary(seq)
        reps[name] = (u, seq) if entangling_class(u) == name else search_representative(n)
    return reps


# results of ``search_representative`` for the enumeration order above
_KNOWN_REPS = {
    "iswap": ("ecr", ("local", 1, 2), "ecr"),
    "swap": ("ecr", ("local", 1, 2), "ecr", ("local", 4, 1), "ecr"),
}


def _sequence_unitary(seq) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for item in seq:
        u = (ideal_ecr() if item == "ecr" else _local(item[1], item[2])) @ u
    return u


def _entangling_power_signature(u: np.ndarray) -> tuple:
    """Local-equivalence invariants (Makhlin) rounded, identifying the class of ``u``."""
    b = np.array([[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]]) / np.sqrt(2)
    ub = b.conj().T @ u @ b
    m = ub.T @ ub
    det = np.linalg.det(u)
    g1 = np.trace(m) ** 2 / (16 * det)
    g2 = (np.trace(m) ** 2 - np.trace(m @ m)) / (4 * det)
    return (round(g1.real, 6) + 0.0, round(g1.imag, 6) + 0.0, round(g2.real, 6) + 0.0)


_CLASS_INVARIANTS = {
    "identity": _entangling_power_signature(np.eye(4)),
    "cnot": _entangling_power_signature(CNOT),
    "iswap": _entangling_power_signature(
        np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]])),
    "swap": _entangling_power_signature(
        np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)),
}


def entangling_class(u: np.ndarray) -> str:
    sig = _entangling_power_signature(u)
    for name, ref in _CLASS_INVARIANTS.items():
        if np.allclose(sig, ref, atol=1e-5):
            return name
    raise ValueError("matrix is not in a Clifford entangling class")


def search_representative(n_ecr: int) -> tuple[np.ndarray, tuple]:
    """First ECR (locals ECR)^(n-1) product in the class with ``n_ecr`` entangling gates."""
    want = CLASSES[n_ecr]
    ecr = ideal_ecr()
    cl = single_qubit_cliffords()
    # prefer locals built from few SX pulses
    order = sorted(range(24), key=lambda i: (sum(op[0] == "sx" for op in cl[i][1]), i))
    for combo in itertools.product(itertools.product(order, order), repeat=n_ecr - 1):
        u = ecr
        seq: tuple = ("ecr",)
        for a, b in combo:
            u = ecr @ _local(a, b) @ u
            seq = seq + (("local", a, b), "ecr")
        if entangling_class(u) == want:
            return u, seq
    raise AssertionError(f"no {n_ecr}-ECR representative found")


# -- elements -------------------------------------------------------------------


@dataclass(frozen=True)
class CliffordElement:
    """``(left_c x left_t) . R_class . (right_c x right_t)`` with right factors in S1."""

    left: tuple[int, int]
    entangling: str
    right: tuple[int, int] = (0, 0)  # indices into S1 (always (0, 0) for identity/swap)

    def __post_init__(self):
        if self.entangling not in CLASSES:
            raise ValueError(f"unknown entangling class {self.entangling!r}")

    @property
    def unitary(self) -> np.ndarray:
        return _element_unitary(self)

    @property
    def ecr_count(self) -> int:
        return CLASSES.index(self.entangling)

    @property
    def flat_index(self) -> int:
        base = 0
        for name in CLASSES:
            if name == self.entangling:
                break
            base += CLASS_SIZES[name]
        i = self.left[0] * 24 + self.left[1]
        if self.entangling in ("cnot", "iswap"):
            i = i * 9 + self.right[0] * 3 + self.right[1]
        return base + i

    @classmethod
    def from_index(cls, index: int) -> CliffordElement:
        if not 0 <= index < GROUP_ORDER:
            raise ValueError("Clifford index out of range")
        for name in CLASSES:
            size = CLASS_SIZES[name]
            if index < size:
                if name in ("cnot", "iswap"):
                    left, right = divmod(index, 9)
                    return cls(divmod(left, 24), name, divmod(right, 3))
                return cls(divmod(index, 24), name)
            index -= size
        raise AssertionError


@lru_cache(maxsize=None)
def _element_unitary_cached(left, entangling, right) -> np.ndarray:
    s1 = _s1()
    rep = class_representatives()[entangling][0]
    return _local(*left) @ rep @ _local(s1[right[0]], s1[right[1]])


def _element_unitary(c: CliffordElement) -> np.ndarray:
    return _element_unitary_cached(c.left, c.entangling, c.right)


@lru_cache(maxsize=None)
def _index_table() -> dict[bytes, int]:
    """Phase-free key of every element mapped to its flat index."""
    table = {}
    for i in range(GROUP_ORDER):
        k = phase_key(CliffordElement.from_index(i).unitary)
        if k in table:
            raise AssertionError("class decomposition is not a bijection")
        table[k] = i
    return table


def all_elements() -> list[CliffordElement]:
    return [CliffordElement.from_index(i) for i in range(GROUP_ORDER)]


def lookup(u: np.ndarray) -> CliffordElement:
    """The element equal to ``u`` up to global phase."""
    try:
        return CliffordElement.from_index(_index_table()[phase_key(u)])
    except KeyError:
        raise ValueError("matrix is not a two-qubit Clifford") from None


def sample_clifford(rng: np.random.Generator) -> CliffordElement:
    """Uniform element: class by its weight, then uniform factors within the class."""
    name = CLASSES[rng.choice(4, p=[CLASS_WEIGHTS[k] for k in CLASSES])]
    left = (int(rng.integers(24)), int(rng.integers(24)))
    right = (int(rng.integers(3)), int(rng.integers(3))) if name in ("cnot", "iswap") else (0, 0)
    return CliffordElement(left, name, right)


def identity_element() -> CliffordElement:
    return lookup(np.eye(4))


def is_clifford(u: np.ndarray, atol: float = 1e-9) -> bool:
    """Pauli-conjugation test: ``u P u^dag`` is a signed Pauli for every Pauli ``P``."""
    paulis = [np.kron(PAULIS_1Q[a], PAULIS_1Q[b]) for a in "IXYZ" for b in "IXYZ"]
    for p in paulis[1:]:
        q = u @ p @ u.conj().T
        if not any(abs(abs(np.trace(r.conj().T @ q)) / 4 - 1) < atol for r in paulis):
            return False
    return True


# -- compilation ------------------------------------------------------------------


def _local_ops(a: int, b: int) -> list[NativeOp]:
    cl = single_qubit_cliffords()
    ops = []
    for qubit, idx in ((0, a), (1, b)):
        for kind, angle in cl[idx][1]:
            ops.append(NativeOp("rz", qubit, angle) if kind == "rz" else NativeOp("sx", qubit))
    return ops


@lru_cache(maxsize=None)
def _compiled(left, entangling, right) -> tuple[NativeOp, ...]:
    s1 = _s1()
    ops = _local_ops(s1[right[0]], s1[right[1]])
    for item in class_representatives()[entangling][1]:
        if item == "ecr":
            ops.append(NativeOp("ecr"))
        else:
            ops.extend(_local_ops(item[1], item[2]))
    ops.extend(_local_ops(*left))
    return tuple(ops)


def compile_to_natives(c: CliffordElement) -> tuple[NativeOp, ...]:
    """Time-ordered native sequence over {SX, Rz, ECR} realizing ``c`` up to global phase."""
    return _compiled(c.left, c.entangling, c.right)


def native_unitary(op: NativeOp) -> np.ndarray:
    if op.kind == "ecr":
        return ideal_ecr()
    u = rz(op.angle) if op.kind == "rz" else SX
    return np.kron(u, I2) if op.qubit == 0 else np.kron(I2, u)


def realize(ops) -> np.ndarray:
    """Ideal 4x4 unitary of a native sequence."""
    u = np.eye(4, dtype=complex)
    for op in ops:
        u = native_unitary(op) @ u
    return u
