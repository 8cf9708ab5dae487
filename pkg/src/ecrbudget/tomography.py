"""Effective-Hamiltonian tomography of a cross-resonance drive.

The effective two-qubit Hamiltonian is written as
``H = sum_P (Omega_P / 2) P`` over the seven Pauli words IX, IY, IZ, ZI, ZX, ZY,
ZZ (control letter first).  With the control in ``|c>`` the target precesses
about the Bloch rate vector ``Omega_I + s_c Omega_Z`` with ``s_0 = +1`` and
``s_1 = -1``.

Two reconstructions are provided:

* trajectory fitting: target Bloch vectors for the preparations ``|+>``,
  ``|+i>``, ``|0>`` are recorded while the flat part of the CR pulse is
  stretched, and each control block is fitted to ``R(d) = Rot(n d) Q``.  The
  rates describe the flat part of the pulse;
* gate level: the rotation vector of one complete segment (ramps included)
  divided by its duration.  This is the Hamiltonian that generates exactly the
  segment's computational-subspace unitary and is what calibration and error
  attribution use.

``Omega_ZI`` is not visible in target Bloch vectors; it is read from the phase
of the determinant of each control block, which the simulator exposes.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.spatial.transform import Rotation

from . import hilbert
from .dynamics import PairHamiltonian
from .gates import CRPulseConfig, SingleQubitGateConfig, X_CONTROL, cr_segment

TERMS = ("ix", "iy", "iz", "zi", "zx", "zy", "zz")
_WORDS = {"ix": "IX", "iy": "IY", "iz": "IZ", "zi": "ZI", "zx": "ZX", "zy": "ZY", "zz": "ZZ"}
# target preparations; their Bloch images are the columns of the block rotation
PREPARATIONS = {
    "+": np.array([1, 1]) / np.sqrt(2),
    "+i": np.array([1, 1j]) / np.sqrt(2),
    "0": np.array([1, 0]),
}
RESIDUAL_WARN = 1e-2


class NonBlockDiagonalWarning(UserWarning):
    """Trajectories do not fit a block-diagonal unitary (leakage or control flips)."""


def _pauli4(word: str) -> np.ndarray:
    return np.kron(hilbert.PAULI[word[0]], hilbert.PAULI[word[1]])


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Seven effective rates in rad/ns plus fit diagnostics."""

    omega_ix: float = 0.0
    omega_iy: float = 0.0
    omega_iz: float = 0.0
    omega_zi: float = 0.0
    omega_zx: float = 0.0
    omega_zy: float = 0.0
    omega_zz: float = 0.0
    residual_rms: float = 0.0
    covariance: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("effective rates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, "omega_" + t) for t in TERMS])

    @classmethod
    def from_array(cls, rates, **kw) -> EffectiveHamiltonian:
        return cls(**{"omega_" + t: float(r) for t, r in zip(TERMS, rates)}, **kw)

    def rate(self, term: str) -> float:
        return getattr(self, "omega_" + term.lower())

    def with_rate(self, term: str, value: float) -> EffectiveHamiltonian:
        return replace(self, **{"omega_" + term.lower(): value})

    def operator(self) -> np.ndarray:
        """4x4 Hamiltonian in rad/ns on the two-qubit space."""
        return sum(0.5 * r * _pauli4(_WORDS[t]) for t, r in zip(TERMS, self.as_array()))

    def unitary(self, duration: float) -> np.ndarray:
        return scipy.linalg.expm(-1j * self.operator() * duration)

    def mirrored(self) -> EffectiveHamiltonian:
        """Rates of the same drive with a pi phase shift on both tones."""
        r = self.as_array() * np.array([-1, -1, 1, 1, -1, -1, 1])
        return EffectiveHamiltonian.from_array(r)

    def conditional_angle(self, duration: float) -> float:
        return self.omega_zx * duration

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "covariance"}
        d["units"] = "rad/ns"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> EffectiveHamiltonian:
        return cls(**{k: v for k, v in d.items() if k != "units"})


@dataclass(frozen=True, eq=False)
class BlochTrajectory:
    """Target Bloch data versus flat length.

    ``points[k, p]`` is ``(x, y, z, leak)`` for duration ``k`` and preparation
    ``p`` in the order ``|+>, |+i>, |0>``.  ``block_phase[k]`` is the phase of
    the determinant of the control block (simulator bookkeeping).
    """

    durations: np.ndarray
    control_init: int
    points: np.ndarray
    block_phase: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if self.control_init not in (0, 1):
            raise ValueError("control_init must be 0 or 1")
        if pts.shape != (len(d), 3, 4):
            raise ValueError("points must have shape (n_durations, 3, 4)")
        if np.any(np.linalg.norm(pts[..., :3], axis=-1) > 1 + 1e-6):
            raise ValueError("Bloch vectors longer than 1")
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "block_phase", np.asarray(self.block_phase, dtype=float))

    def matrices(self) -> np.ndarray:
        """Stack of 3x3 matrices whose columns are the Bloch images of x, y, z."""
        return np.transpose(self.points[..., :3], (0, 2, 1))


# -- measurement ---------------------------------------------------------------


def _block(u: np.ndarray, control: int) -> np.ndarray:
    idx = [hilbert.index(control, 0), hilbert.index(control, 1)]
    return u[np.ix_(idx, idx)]


def _bloch_points(u: np.ndarray, control: int) -> np.ndarray:
    out = np.empty((3, 4))
    for p, psi_t in enumerate(PREPARATIONS.values()):
        psi = np.zeros(hilbert.DIM, dtype=complex)
        psi[hilbert.index(control, 0)] = psi_t[0]
        psi[hilbert.index(control, 1)] = psi_t[1]
        out[p] = hilbert.bloch_vector(hilbert.partial_trace(u @ psi, "target"))
    return out


def trajectory_from_unitaries(unitaries, durations, control_init: int) -> BlochTrajectory:
    """Exact Bloch data from 9x9 (or 4x4, lifted) propagators."""
    pts, phases = [], []
    for u in unitaries:
        if u.shape == (4, 4):
            u = hilbert.lift_two_qubit(u)
        pts.append(_bloch_points(u, control_init))
        phases.append(np.angle(np.linalg.det(_block(u, control_init))))
    return BlochTrajectory(np.asarray(durations, float), control_init, np.array(pts), np.array(phases))


def simulate_trajectory(h: EffectiveHamiltonian, durations, control_init: int) -> BlochTrajectory:
    """Forward model: trajectories generated by ``exp(-i H d)``."""
    return trajectory_from_unitaries([h.unitary(d) for d in durations], durations, control_init)


def measure_bloch_trajectories(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    durations,
    control_init: int,
    target_sq: SingleQubitGateConfig | None = None,
    corrected: bool = False,
) -> BlochTrajectory:
    """Record target Bloch vectors while the CR flat-top is set to each of ``durations``."""
    durations = np.asarray(durations, dtype=float)
    if np.any(np.diff(durations) <= 0):
        raise ValueError("durations must be strictly increasing")
    us = [ham.propagate(cr_segment(cfg, target_sq, +1, corrected, flat=d), cfg.dt) for d in durations]
    return trajectory_from_unitaries(us, durations, control_init)


# -- fitting -------------------------------------------------------------------


def _nearest_rotation(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1
        r = u @ vt
    return r


def _fit_block(traj: BlochTrajectory) -> tuple[np.ndarray, float, np.ndarray | None]:
    """Rate vector ``n`` of ``R(d) = Rot(n d) Q``; returns (n, rms residual, covariance)."""
    d = traj.durations
    b = traj.matrices()
    rots = [Rotation.from_matrix(_nearest_rotation(m)) for m in b]
    if len(d) == 1:
        return rots[0].as_rotvec() / d[0], 0.0, None
    incs = np.array([(r1 * r0.inv()).as_rotvec() / (d1 - d0)
                     for r0, r1, d0, d1 in zip(rots, rots[1:], d, d[1:])])
    n0 = np.median(incs, axis=0)
    q0 = (Rotation.from_rotvec(-n0 * d[0]) * rots[0]).as_rotvec()

    def residual(p):
        n, q = p[:3], Rotation.from_rotvec(p[3:])
        model = (Rotation.from_rotvec(np.outer(d, n)) * q).as_matrix()
        return (model - b).ravel()

    sol = scipy.optimize.least_squares(residual, np.concatenate([n0, q0]), method="lm",
                                       xtol=1e-15, ftol=1e-15, gtol=1e-15)
    res = sol.fun
    rms = float(np.sqrt(np.mean(res**2)))
    cov = None
    dof = res.size - sol.x.size
    if dof > 0:
        try:
            cov = np.linalg.pinv(sol.jac.T @ sol.jac) * (res @ res) / dof
        except np.linalg.LinAlgError:
            cov = None
    return sol.x[:3], rms, cov


def fit_effective_hamiltonian(traj0: BlochTrajectory, traj1: BlochTrajectory) -> EffectiveHamiltonian:
    """Least-squares fit of the seven rates from control-|0> and control-|1> trajectories."""
    if traj0.control_init != 0 or traj1.control_init != 1:
        raise ValueError("expected trajectories for control |0> and |1> in that order")
    if not np.array_equal(traj0.durations, traj1.durations):
        raise ValueError("trajectories must share one duration grid")
    n0, rms0, cov0 = _fit_block(traj0)
    n1, rms1, cov1 = _fit_block(traj1)
    omega_i = (n0 + n1) / 2
    omega_z = (n0 - n1) / 2
    # det M1 / det M0 = exp(2 i Omega_ZI d)
    d = traj0.durations
    dphi = np.unwrap(traj1.block_phase - traj0.block_phase)
    zi = np.polyfit(d, dphi, 1)[0] / 2 if len(d) > 1 else dphi[0] / (2 * d[0])
    rms = float(np.hypot(rms0, rms1) / np.sqrt(2))
    if rms > RESIDUAL_WARN:
        warnings.warn(
            f"trajectory fit residual {rms:.3g}: dynamics are not block diagonal (leakage?)",
            NonBlockDiagonalWarning,
            stacklevel=2,
        )
    cov = None
    if cov0 is not None and cov1 is not None:
        # propagate the rate-vector covariances into the I and Z combinations
        c0, c1 = cov0[:3, :3], cov1[:3, :3]
        cov = 0.25 * (c0 + c1)
    return EffectiveHamiltonian.from_array([*omega_i, zi, *omega_z], residual_rms=rms, covariance=cov)


def block_rotation_vector(m: np.ndarray) -> np.ndarray:
    """Bloch rotation vector of a (possibly leaky) 2x2 block."""
    u, _, vh = np.linalg.svd(m)
    w = u @ vh  # closest unitary
    w = w / np.sqrt(np.linalg.det(w))
    r = np.empty((3, 3))
    paulis = [hilbert.PAULI[k] for k in "XYZ"]
    for j, pj in enumerate(paulis):
        img = w @ pj @ w.conj().T
        for i, pi in enumerate(paulis):
            r[i, j] = 0.5 * np.real(np.trace(pi @ img))
    return Rotation.from_matrix(r).as_rotvec()


def unitary_hamiltonian(u: np.ndarray, duration: float) -> EffectiveHamiltonian:
    """Gate-level effective Hamiltonian generating the computational part of ``u``."""
    if u.shape == (4, 4):
        u = hilbert.lift_two_qubit(u)
    r0 = block_rotation_vector(_block(u, 0))
    r1 = block_rotation_vector(_block(u, 1))
    ph = np.angle(np.linalg.det(_block(u, 1)) / np.linalg.det(_block(u, 0)))
    omega_i = (r0 + r1) / (2 * duration)
    omega_z = (r0 - r1) / (2 * duration)
    return EffectiveHamiltonian.from_array([*omega_i, ph / (2 * duration), *omega_z])


def segment_hamiltonian(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    sign: int = 1,
    corrected: bool = False,
    target_sq: SingleQubitGateConfig | None = None,
) -> tuple[EffectiveHamiltonian, float]:
    """Gate-level Hamiltonian of one CR segment and the segment duration (ns)."""
    sched = cr_segment(cfg, target_sq, sign, corrected)
    u = ham.propagate(sched, cfg.dt)
    return unitary_hamiltonian(u, sched.duration), sched.duration


# -- error attribution ---------------------------------------------------------


def ecr_from_hamiltonians(h_plus: EffectiveHamiltonian, h_minus: EffectiveHamiltonian,
                          duration: float) -> np.ndarray:
    """Echoed gate built from two segments of ``duration`` and an ideal control X."""
    return h_minus.unitary(duration) @ X_CONTROL @ h_plus.unitary(duration)


def term_epg(
    h: EffectiveHamiltonian,
    term: str,
    duration: float,
    h_minus: EffectiveHamiltonian | None = None,
) -> float:
    """Error per gate attributable to one rate: 1 - F_avg(ECR with all terms, ECR without it).

    ``duration`` is the length of one CR segment.  ``h_minus`` describes the
    second (phase-flipped) segment; it defaults to ``h.mirrored()``.
    """
    term = term.lower()
    if term not in TERMS:
        raise ValueError(f"unknown term {term!r}")
    h_minus = h.mirrored() if h_minus is None else h_minus
    if h.rate(term) == 0 and h_minus.rate(term) == 0:
        return 0.0
    full = ecr_from_hamiltonians(h, h_minus, duration)
    ablated = ecr_from_hamiltonians(h.with_rate(term, 0.0), h_minus.with_rate(term, 0.0), duration)
    return max(0.0, 1.0 - hilbert.average_gate_fidelity(full, ablated))
