r"""Driven two-transmon dynamics.

Model (lab frame, :math:`\hbar = 1`, rates in rad/ns)

.. math::

    H = \sum_q \left[\omega_q n_q + \tfrac{\alpha_q}{2} n_q (n_q - 1)\right]
        + J (a_c^\dagger a_t + a_c a_t^\dagger)
        + \sum_{\mathrm{drives}} \mathrm{Re}\left[s(t) e^{i \omega_d t}\right] (a_q + a_q^\dagger)

Drives are kept in the rotating-wave approximation, which in a frame rotating
at :math:`\omega_F` on both transmons gives
``(conj(s) e^{-i(w_d - w_F) t} a^dag + s e^{i(w_d - w_F) t} a) / 2``.
Whenever all active drives share one carrier the frame is placed on that
carrier, so the Hamiltonian is exactly piecewise constant.

Results are reported in the *logical frame*: the dressed eigenbasis of the
undriven Hamiltonian, rotating at the dressed transition frequencies of each
transmon measured with the other one in ``|0>``.  In this frame an idle pair
only accumulates the static ZZ phase on ``|11>`` (and anharmonic phases on
levels involving ``|2>``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.linalg

from . import hilbert
from .pulses import Pulse, Schedule

TWO_PI = 2 * np.pi
DEFAULT_DT = 0.25


class DegenerateAssignmentError(RuntimeError):
    """Dressed eigenstates cannot be matched one-to-one with bare states."""


@dataclass(frozen=True)
class TransmonParams:
    frequency: float  # GHz
    anharmonicity: float  # MHz
    t1: float  # us
    t2e: float  # us

    def __post_init__(self):
        if not 1 < self.frequency < 20:
            raise ValueError(f"frequency {self.frequency} GHz outside the (1, 20) GHz band")
        if self.anharmonicity >= 0:
            raise ValueError("transmon anharmonicity must be negative")
        if not (self.t1 > 0 and 0 < self.t2e <= 2 * self.t1):
            raise ValueError("coherence times must satisfy 0 < T2e <= 2 T1")

    @property
    def f12(self) -> float:
        """1-2 transition frequency in GHz."""
        return self.frequency + self.anharmonicity * 1e-3


@dataclass(frozen=True)
class PairParams:
    control: TransmonParams
    target: TransmonParams
    coupling: float  # J, MHz
    label: str = "pair"

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")
        if self.control.frequency == self.target.frequency:
            raise ValueError("control and target must be detuned")

    @property
    def detuning(self) -> float:
        """Control minus target frequency, MHz."""
        return (self.control.frequency - self.target.frequency) * 1e3

    def swapped(self) -> PairParams:
        return PairParams(self.target, self.control, self.coupling, self.label + "-swapped")

    def to_dict(self) -> dict:
        def q(t: TransmonParams) -> dict:
            return {
                "frequency_ghz": t.frequency,
                "anharmonicity_mhz": t.anharmonicity,
                "t1_us": t.t1,
                "t2e_us": t.t2e,
            }

        return {
            "label": self.label,
            "control": q(self.control),
            "target": q(self.target),
            "coupling_mhz": self.coupling,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PairParams:
        def q(x: dict) -> TransmonParams:
            return TransmonParams(
                x["frequency_ghz"], x["anharmonicity_mhz"], x["t1_us"], x["t2e_us"]
            )

        return cls(q(d["control"]), q(d["target"]), d["coupling_mhz"], d["label"])


@dataclass(frozen=True)
class NoiseModel:
    """Markovian relaxation and white dephasing; rates in 1/ns."""

    gamma1: tuple[float, float] = (0.0, 0.0)  # (control, target)
    gamma_phi: tuple[float, float] = (0.0, 0.0)
    enabled: bool = True

    def __post_init__(self):
        if min(self.gamma1) < 0 or min(self.gamma_phi) < 0:
            raise ValueError("noise rates must be non-negative")

    @classmethod
    def from_pair(cls, pair: PairParams, enabled: bool = True) -> NoiseModel:
        g1, gp = [], []
        for q in (pair.control, pair.target):
            t1, t2 = q.t1 * 1e3, q.t2e * 1e3
            g1.append(1.0 / t1)
            # T2e == 2 T1 leaves a rounding-level negative rate
            gp.append(max(0.0, 1.0 / t2 - 1.0 / (2 * t1)))
        return cls(tuple(g1), tuple(gp), enabled)

    @property
    def is_trivial(self) -> bool:
        return not self.enabled or (max(self.gamma1) == 0 and max(self.gamma_phi) == 0)


def _expm_hermitian_batch(h: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """``exp(-i h[k] tau[k])`` for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * tau[:, None])
    return np.einsum("kij,kj,klj->kil", v, phases, v.conj())


def _ad(u: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> u rho u^dag`` for row-major vectorization."""
    return np.kron(u, u.conj())


def _ad_diag(p: np.ndarray) -> np.ndarray:
    return np.outer(p, p.conj()).ravel()


@dataclass(eq=False)
class PairHamiltonian:
    """Static and drive terms of a pair plus the logical-frame bookkeeping."""

    pair: PairParams
    frame: Literal["dressed", "bare"] = "dressed"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c, t = self.pair.control, self.pair.target
        self.omega = np.array([TWO_PI * c.frequency, TWO_PI * t.frequency])
        self.alpha = np.array([TWO_PI * c.anharmonicity * 1e-3, TWO_PI * t.anharmonicity * 1e-3])
        self.j = TWO_PI * self.pair.coupling * 1e-3
        self.omega_ref = float(np.mean(self.omega))

        a = hilbert.annihilation_operator()
        self.a_ops = (hilbert.on_control(a), hilbert.on_target(a))
        self.n_ops = tuple(op.conj().T @ op for op in self.a_ops)
        self.n_diag = tuple(np.real(np.diag(n)) for n in self.n_ops)
        self.n_total = self.n_diag[0] + self.n_diag[1]

        # static Hamiltonian relative to a common frame at omega_ref (keeps numbers small)
        h = np.zeros((hilbert.DIM, hilbert.DIM), dtype=complex)
        for q in range(2):
            n = self.n_ops[q]
            h += (self.omega[q] - self.omega_ref) * n + 0.5 * self.alpha[q] * (n @ n - n)
        ac, at = self.a_ops
        h += self.j * (ac.conj().T @ at + ac @ at.conj().T)
        self.h_static = h

        energies, vectors = np.linalg.eigh(h)
        order = self._assign(vectors)
        self.energies = energies[order]
        vecs = vectors[:, order]
        # fix phases so each dressed state has a real positive bare component
        diag = np.diag(vecs)
        vecs = vecs * (np.abs(diag) / diag)[None, :]
        self.dressed = vecs

        e = self.energies
        i00, i01, i10 = hilbert.index(0, 0), hilbert.index(0, 1), hilbert.index(1, 0)
        if self.frame == "dressed":
            self.basis = vecs
            self.frame_freq = np.array(
                [e[i10] - e[i00] + self.omega_ref, e[i01] - e[i00] + self.omega_ref]
            )
            e0 = e[i00]
        elif self.frame == "bare":
            self.basis = np.eye(hilbert.DIM, dtype=complex)
            self.frame_freq = self.omega.copy()
            e0 = 0.0
        else:
            raise ValueError(f"unknown frame {self.frame!r}")
        # reference energies (relative to omega_ref N) defining the rotating logical frame
        self.e_ref = (
            e0
            + (self.frame_freq[0] - self.omega_ref) * self.n_diag[0]
            + (self.frame_freq[1] - self.omega_ref) * self.n_diag[1]
        )

    @staticmethod
    def _assign(vectors: np.ndarray) -> np.ndarray:
        overlaps = np.abs(vectors) ** 2  # [bare, eigen]
        order = np.argmax(overlaps, axis=1)
        if len(set(order.tolist())) != len(order) or np.min(overlaps.max(axis=1)) < 0.5:
            raise DegenerateAssignmentError(
                "dressed states overlap less than 50% with their bare states"
            )
        return order

    # -- frequencies -------------------------------------------------------

    @property
    def dressed_frequencies(self) -> np.ndarray:
        """Dressed 0-1 angular frequencies (rad/ns) of control and target."""
        return self.frame_freq.copy()

    def channel_frequency(self, channel: str) -> float:
        return float(self.frame_freq[0 if channel == "control" else 1])

    def carrier(self, pulse: Pulse) -> float:
        return self.channel_frequency(pulse.channel) + TWO_PI * pulse.envelope.carrier_detuning * 1e-3

    @cached_property
    def zz_rate(self) -> float:
        """Static ZZ rate in rad/ns from dressed energies."""
        e = self.energies
        return float(
            e[hilbert.index(1, 1)] - e[hilbert.index(1, 0)] - e[hilbert.index(0, 1)] + e[hilbert.index(0, 0)]
        )

    # -- frame algebra -----------------------------------------------------

    def _k(self, omega_f: float) -> np.ndarray:
        """Diagonal generator relating the frame at omega_f to the logical frame."""
        return self.e_ref + (self.omega_ref - omega_f) * self.n_total

    def _static_in_frame(self, omega_f: float) -> np.ndarray:
        return self.h_static + (self.omega_ref - omega_f) * np.diag(self.n_total)

    def virtual_z_diag(self, channel: str, angle: float) -> np.ndarray:
        # exp(+i angle n) equals Rz(angle) on the qubit levels up to a global phase
        n = self.n_diag[0 if channel == "control" else 1]
        return np.exp(1j * angle * n)

    # -- propagation core --------------------------------------------------

    def _interval_hamiltonians(
        self, pulses: list[tuple[Pulse, np.ndarray]], omega_f: float, t_mid: np.ndarray | None
    ) -> np.ndarray:
        """Stack of frame Hamiltonians, one per row of the per-pulse sample arrays."""
        n = len(pulses[0][1])
        h = np.repeat(self._static_in_frame(omega_f)[None], n, axis=0)
        for pulse, s in pulses:
            a = self.a_ops[0 if pulse.channel == "control" else 1]
            coeff = np.conj(s)
            if t_mid is not None:
                coeff = coeff * np.exp(-1j * (self.carrier(pulse) - omega_f) * t_mid)
            term = 0.5 * coeff[:, None, None] * a.conj().T[None]
            h += term + term.conj().transpose(0, 2, 1)
        return h

    def _interval(
        self,
        ta: float,
        tb: float,
        active: list[Pulse],
        dt: float,
        noise: NoiseModel | None,
    ) -> np.ndarray:
        """Logical-frame propagator (unitary or superoperator) over ``[ta, tb)``."""
        superop = noise is not None and not noise.is_trivial
        n_steps = int(round((tb - ta) / dt))
        if not active:
            omega_f = self.omega_ref
            key = ("idle", round(tb - ta, 9), superop, noise)
            w = self._cache.get(key)
            if w is None:
                h = self._static_in_frame(omega_f)[None]
                w = self._evolve(h, np.array([tb - ta]), noise)
                w = self._to_logical(w, superop)
                self._cache[key] = w
            return self._place(w, omega_f, ta, tb, superop)

        carriers = [self.carrier(p) for p in active]
        omega_f = carriers[0]
        single = all(abs(c - omega_f) < 1e-12 for c in carriers)
        t_sub = ta + (np.arange(n_steps) + 0.5) * dt
        samples = []
        for p in active:
            env = p.envelope
            idx = np.floor((t_sub - p.start) / env.dt + 1e-9).astype(int)
            samples.append((p, env.complex_samples()[idx]))

        if single:
            key = (
                "drive",
                round(omega_f, 12),
                superop,
                noise,
                round(dt, 12),
                tuple((p.channel, round(self.carrier(p), 12), s.tobytes()) for p, s in samples),
            )
            w = self._cache.get(key)
            if w is None:
                stacked = np.stack([s for _, s in samples], axis=1)
                change = np.ones(n_steps, dtype=bool)
                change[1:] = np.any(stacked[1:] != stacked[:-1], axis=1)
                starts = np.flatnonzero(change)
                counts = np.diff(np.append(starts, n_steps))
                runs = [(p, s[starts]) for p, s in samples]
                h = self._interval_hamiltonians(runs, omega_f, None)
                w = self._evolve(h, counts * dt, noise)
                w = self._to_logical(w, superop)
                self._cache[key] = w
            return self._place(w, omega_f, ta, tb, superop)

        h = self._interval_hamiltonians(samples, omega_f, t_sub)
        w = self._evolve(h, np.full(n_steps, dt), noise)
        w = self._to_logical(w, superop)
        return self._place(w, omega_f, ta, tb, superop)

    def _evolve(self, h: np.ndarray, tau: np.ndarray, noise: NoiseModel | None) -> np.ndarray:
        """Time-ordered product of piecewise-constant steps in the bare basis."""
        if noise is None or noise.is_trivial:
            steps = _expm_hermitian_batch(h, tau)
            u = steps[0]
            for s in steps[1:]:
                u = s @ u
            return u
        dissipator = self._dissipator(noise)
        eye = np.eye(hilbert.DIM)
        out = None
        for hk, tk in zip(h, tau):
            gen = -1j * (np.kron(hk, eye) - np.kron(eye, hk.T)) + dissipator
            s = scipy.linalg.expm(gen * tk)
            out = s if out is None else s @ out
        return out

    def _dissipator(self, noise: NoiseModel) -> np.ndarray:
        key = ("dissipator", noise)
        if key not in self._cache:
            eye = np.eye(hilbert.DIM)
            d = np.zeros((hilbert.DIM**2, hilbert.DIM**2), dtype=complex)
            ops = []
            for q in range(2):
                ops.append(np.sqrt(noise.gamma1[q]) * self.a_ops[q])
                ops.append(np.sqrt(2 * noise.gamma_phi[q]) * self.n_ops[q])
            for c in ops:
                cdc = c.conj().T @ c
                d += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
            self._cache[key] = d
        return self._cache[key]

    def _to_logical(self, w: np.ndarray, superop: bool) -> np.ndarray:
        b = self.basis
        if superop:
            return _ad(b.conj().T) @ w @ _ad(b)
        return b.conj().T @ w @ b

    def _place(self, w: np.ndarray, omega_f: float, ta: float, tb: float, superop: bool) -> np.ndarray:
        k = self._k(omega_f)
        pb, pa = np.exp(1j * k * tb), np.exp(-1j * k * ta)
        if superop:
            return _ad_diag(pb)[:, None] * w * _ad_diag(pa)[None, :]
        return pb[:, None] * w * pa[None, :]

    def propagate(self, schedule: Schedule, dt: float = DEFAULT_DT, noise: NoiseModel | None = None) -> np.ndarray:
        """Logical-frame propagator of a whole schedule (superoperator when noisy)."""
        superop = noise is not None and not noise.is_trivial
        for p in schedule.pulses:
            ratio = p.envelope.dt / dt
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError("integration dt must divide every pulse sample interval")
            if abs(p.start / dt - round(p.start / dt)) > 1e-9:
                raise ValueError("pulse start times must lie on the integration grid")
        total = schedule.duration
        events = {0.0, round(total, 9)}
        for p in schedule.pulses:
            events.update({round(p.start, 9), round(p.end, 9)})
        for op in schedule.frame_ops:
            events.add(round(op.time, 9))
        times = sorted(events)
        dim = hilbert.DIM**2 if superop else hilbert.DIM
        u = np.eye(dim, dtype=complex)
        ops_at: dict[float, np.ndarray] = {}
        for op in schedule.frame_ops:
            t = round(op.time, 9)
            z = ops_at.get(t, np.ones(hilbert.DIM, dtype=complex))
            ops_at[t] = z * self.virtual_z_diag(op.channel, op.angle)

        def apply_frame(t: float, u: np.ndarray) -> np.ndarray:
            if t in ops_at:
                z = _ad_diag(ops_at[t]) if superop else ops_at[t]
                return z[:, None] * u
            return u

        for ta, tb in zip(times, times[1:]):
            u = apply_frame(ta, u)
            active = [p for p in schedule.pulses if p.start < tb - 1e-9 and p.end > ta + 1e-9]
            active.sort(key=lambda p: p.channel)
            u = self._interval(ta, tb, active, dt, noise if superop else None) @ u
        return apply_frame(times[-1], u) if len(times) > 1 else apply_frame(0.0, u)


def build_hamiltonian(pair: PairParams, frame: Literal["dressed", "bare"] = "dressed") -> PairHamiltonian:
    return PairHamiltonian(pair, frame)


def propagate_unitary(ham: PairHamiltonian, schedule: Schedule, dt: float = DEFAULT_DT) -> np.ndarray:
    """9x9 logical-frame unitary of ``schedule``."""
    return ham.propagate(schedule, dt)


def propagate_lindblad(
    ham: PairHamiltonian,
    schedule: Schedule,
    noise: NoiseModel,
    initial: np.ndarray,
    dt: float = DEFAULT_DT,
) -> np.ndarray:
    """Density matrix after ``schedule`` under relaxation and dephasing."""
    rho0 = hilbert.to_density(initial)
    hilbert.validate_state(rho0 if np.ndim(initial) == 2 else np.asarray(initial))
    if noise.is_trivial:
        u = ham.propagate(schedule, dt)
        return u @ rho0 @ u.conj().T
    s = ham.propagate(schedule, dt, noise)
    return (s @ rho0.ravel()).reshape(hilbert.DIM, hilbert.DIM)


def apply_superop(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return (s @ rho.ravel()).reshape(rho.shape)


def unitary_superop(u: np.ndarray) -> np.ndarray:
    return _ad(u)


def static_zz_rate(pair: PairParams) -> float:
    """Static ZZ rate in kHz from exact diagonalization of the undriven pair."""
    ham = build_hamiltonian(pair)
    return ham.zz_rate / TWO_PI * 1e6


def perturbative_zz(pair: PairParams) -> float:
    """Second-order estimate of the static ZZ rate in kHz (for cross-checks)."""
    d = pair.detuning
    ac, at = pair.control.anharmonicity, pair.target.anharmonicity
    # |11> is pushed by |02> (gap d - at) and |20> (gap -d - ac)
    return 2 * pair.coupling**2 * (1 / (d - at) - 1 / (d + ac)) * 1e3
