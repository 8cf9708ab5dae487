"""Standard and interleaved randomized benchmarking of the echoed CR gate.

A *gate set* turns native operations into state updates.  Two are provided:

* :class:`DepolarizingGateSet`: ideal two-qubit Cliffords followed by a
  depolarizing channel, with an optional extra channel on the interleaved
  gate.  It has closed-form decays and serves as the self-consistency oracle.
* :class:`SimulatedGateSet`: superoperators of SX pulses and the ECR from the
  three-level pulse simulator, exact virtual Z rotations and a readout model
  that assigns |2> to outcome 1 with a configurable probability.

Survival is the probability of reading ``00`` after the inverting Clifford.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.optimize

from . import clifford, hilbert
from .clifford import CliffordElement, NativeOp
from .gates import ideal_ecr

DEFAULT_LENGTHS = (2, 4, 8, 16, 32)
DEFAULT_SEEDS = 30
DEFAULT_SHOTS = 1024
LEAK_AS_ONE = 0.9
READOUT_ERROR = 0.04
D = 4


class NegativeEPGWarning(UserWarning):
    """The interleaved decay is slower than the reference beyond its uncertainty."""


# -- readout ----------------------------------------------------------------------


def _qubit_confusion(error: float, leak_as_one: float) -> np.ndarray:
    """Rows: prepared level 0/1/2, columns: read 0/1."""
    return np.array([[1 - error, error], [error, 1 - error], [1 - leak_as_one, leak_as_one]])


def p00_from_populations(pops: np.ndarray, error: float = 0.0, leak_as_one: float = LEAK_AS_ONE) -> float:
    """P(read 00) from a 3x3 (control level, target level) population table."""
    c = _qubit_confusion(error, leak_as_one)[:, 0]
    return float(np.clip(c @ pops @ c, 0.0, 1.0))


# -- gate sets ----------------------------------------------------------------------


class DepolarizingGateSet:
    """Ideal Cliffords on a 4x4 density matrix plus depolarizing channels."""

    def __init__(self, per_clifford: float = 0.0, interleaved: float = 0.0, readout_error: float = 0.0):
        for lam in (per_clifford, interleaved):
            if not 0 <= lam <= 4 / 3:
                raise ValueError("depolarizing parameter out of range")
        self.per_clifford = per_clifford
        self.interleaved = interleaved
        self.readout_error = readout_error

    def initial(self) -> np.ndarray:
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = 1
        return rho

    @staticmethod
    def _depolarize(rho: np.ndarray, lam: float) -> np.ndarray:
        return (1 - lam) * rho + lam * np.trace(rho) * np.eye(4) / 4 if lam else rho

    def apply_clifford(self, c: CliffordElement, rho: np.ndarray) -> np.ndarray:
        u = c.unitary
        return self._depolarize(u @ rho @ u.conj().T, self.per_clifford)

    def apply_interleaved(self, rho: np.ndarray) -> np.ndarray:
        u = ideal_ecr()
        return self._depolarize(u @ rho @ u.conj().T, self.interleaved)

    def p00(self, rho: np.ndarray) -> float:
        pops = np.zeros((3, 3))
        pops[:2, :2] = np.real(np.diag(rho)).reshape(2, 2)
        return p00_from_populations(pops, self.readout_error)


class SimulatedGateSet:
    """Pulse-level superoperators on the two-transmon (9-level) space.

    ``sx`` holds the 81x81 superoperators of the SX pulse on the control
    (index 0) and target (index 1); ``ecr`` is the superoperator of the whole
    echoed gate.  Rz is applied exactly as a diagonal phase.
    """

    def __init__(self, sx: tuple[np.ndarray, np.ndarray], ecr: np.ndarray,
                 readout_error: float = READOUT_ERROR, leak_as_one: float = LEAK_AS_ONE):
        self.sx = sx
        self.ecr = ecr
        self.readout_error = readout_error
        self.leak_as_one = leak_as_one
        n = np.diag(hilbert.annihilation_operator().conj().T @ hilbert.annihilation_operator()).real
        eye = np.ones(3)
        self._levels = (np.kron(n, eye), np.kron(eye, n))
        self._compiled: dict[int, list] = {}

    @classmethod
    def from_unitaries(cls, sx_control: np.ndarray, sx_target: np.ndarray, ecr: np.ndarray, **kw):
        from .dynamics import unitary_superop

        return cls((unitary_superop(sx_control), unitary_superop(sx_target)), unitary_superop(ecr), **kw)

    def initial(self) -> np.ndarray:
        rho = np.zeros(hilbert.DIM**2, dtype=complex)
        rho[0] = 1
        return rho

    def _rz(self, qubit: int, angle: float) -> np.ndarray:
        p = np.exp(1j * angle * self._levels[qubit])
        return np.outer(p, p.conj()).ravel()

    def _ops(self, c: CliffordElement) -> list:
        key = c.flat_index
        if key not in self._compiled:
            ops = []
            for op in clifford.compile_to_natives(c):
                if op.kind == "rz":
                    ops.append(("diag", self._rz(op.qubit, op.angle)))
                elif op.kind == "sx":
                    ops.append(("mat", self.sx[op.qubit]))
                else:
                    ops.append(("mat", self.ecr))
            self._compiled[key] = ops
        return self._compiled[key]

    def apply_clifford(self, c: CliffordElement, rho: np.ndarray) -> np.ndarray:
        for kind, m in self._ops(c):
            rho = m * rho if kind == "diag" else m @ rho
        return rho

    def apply_interleaved(self, rho: np.ndarray) -> np.ndarray:
        return self.ecr @ rho

    def apply_native(self, op: NativeOp, rho: np.ndarray) -> np.ndarray:
        if op.kind == "rz":
            return self._rz(op.qubit, op.angle) * rho
        return (self.sx[op.qubit] if op.kind == "sx" else self.ecr) @ rho

    def p00(self, rho: np.ndarray) -> float:
        pops = np.real(np.diag(rho.reshape(hilbert.DIM, hilbert.DIM))).reshape(3, 3)
        return p00_from_populations(pops, self.readout_error, self.leak_as_one)


# -- sequences ----------------------------------------------------------------------


def random_sequence(rng: np.random.Generator, length: int, interleave: bool) -> list[CliffordElement]:
    """``length`` random Cliffords followed by the element inverting the ideal sequence."""
    seq = [clifford.sample_clifford(rng) for _ in range(length)]
    net = np.eye(4, dtype=complex)
    ecr = ideal_ecr()
    for c in seq:
        net = c.unitary @ net
        if interleave:
            net = ecr @ net
    return seq + [clifford.lookup(net.conj().T)]


def sequence_survival(gateset, seq: list[CliffordElement], interleave: bool) -> float:
    rho = gateset.initial()
    for i, c in enumerate(seq):
        rho = gateset.apply_clifford(c, rho)
        if interleave and i < len(seq) - 1:
            rho = gateset.apply_interleaved(rho)
    return gateset.p00(rho)


@dataclass
class RBCurve:
    lengths: tuple
    survival: np.ndarray  # (n_lengths, n_seeds)

    @property
    def mean(self) -> np.ndarray:
        return self.survival.mean(axis=1)

    @property
    def std(self) -> np.ndarray:
        return self.survival.std(axis=1, ddof=1) if self.survival.shape[1] > 1 else np.zeros(len(self.lengths))


def run_rb(
    gateset,
    lengths=DEFAULT_LENGTHS,
    n_seeds: int = DEFAULT_SEEDS,
    shots: int | None = DEFAULT_SHOTS,
    interleave: bool = False,
    seed: int = 0,
) -> RBCurve:
    """Survival of ``n_seeds`` random sequences per length; ``shots=None`` gives expectation values.

    Each sequence draws from its own child stream of ``seed`` so results do
    not depend on evaluation order.
    """
    lengths = tuple(int(m) for m in lengths)
    if len(lengths) < 3 or min(lengths) < 1:
        raise ValueError("need at least three positive sequence lengths")
    streams = np.random.SeedSequence(seed).spawn(len(lengths) * n_seeds)
    out = np.empty((len(lengths), n_seeds))
    for i, m in enumerate(lengths):
        for j in range(n_seeds):
            rng = np.random.default_rng(streams[i * n_seeds + j])
            seq = random_sequence(rng, m, interleave)
            p = sequence_survival(gateset, seq, interleave)
            out[i, j] = p if shots is None else rng.binomial(shots, p) / shots
    return RBCurve(lengths, out)


# -- fitting --------------------------------------------------------------------------


@dataclass
class DecayFit:
    a: float
    alpha: float
    b: float
    alpha_err: float
    residual_rms: float


def fit_decay(lengths, survival, sigma=None) -> DecayFit:
    """Least squares of ``A alpha^m + B`` with ``0 <= alpha <= 1``.

    Starts from a log-linear regression of ``survival - 1/4``.
    """
    m = np.asarray(lengths, float)
    y = np.asarray(survival, float)
    b0 = 1 / D
    shifted = np.clip(y - b0, 1e-6, None)
    slope, intercept = np.polyfit(m, np.log(shifted), 1)
    alpha0 = float(np.clip(np.exp(slope), 1e-3, 1 - 1e-9))
    p0 = [float(np.clip(np.exp(intercept), -0.99, 1.99)), alpha0, b0]
    if sigma is not None:
        sigma = np.maximum(np.asarray(sigma, float), 1e-4)

    def model(x, a, alpha, b):
        return a * alpha**x + b

    popt, pcov = scipy.optimize.curve_fit(model, m, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                                          bounds=([-1.0, 0.0, -0.5], [2.0, 1.0, 1.5]), maxfev=20000)
    err = float(np.sqrt(pcov[1, 1])) if np.all(np.isfinite(pcov)) else float("inf")
    rms = float(np.sqrt(np.mean((model(m, *popt) - y) ** 2)))
    return DecayFit(float(popt[0]), float(popt[1]), float(popt[2]), err, rms)


@dataclass
class IRBResult:
    lengths: tuple
    ref_mean: list
    ref_std: list
    int_mean: list
    int_std: list
    alpha_ref: float
    alpha_int: float
    alpha_ref_err: float
    alpha_int_err: float
    n_seeds: int
    shots: int | None
    epg: float = field(init=False)
    epg_err: float = field(init=False)

    def __post_init__(self):
        for a in (self.alpha_ref, self.alpha_int):
            if not 0 <= a <= 1:
                raise ValueError("decay parameters must lie in [0, 1]")
        self.epg, self.epg_err = fit_epg(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lengths"] = list(self.lengths)
        d["units"] = {"epg": "probability", "lengths": "Cliffords", "shots": "None means exact expectation"}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> IRBResult:
        keep = {k: v for k, v in d.items() if k not in ("units", "epg", "epg_err")}
        keep["lengths"] = tuple(keep["lengths"])
        return cls(**keep)


def epg_from_alphas(alpha_ref: float, alpha_int: float) -> float:
    return (D - 1) / D * (1 - alpha_int / alpha_ref)


def fit_epg(result: IRBResult) -> tuple[float, float]:
    """Interleaved EPG and its uncertainty from the two decay-parameter errors."""
    ar, ai = result.alpha_ref, result.alpha_int
    if ar == 0:
        return float("nan"), float("inf")
    epg = epg_from_alphas(ar, ai)
    k = (D - 1) / D
    err = k * np.hypot(result.alpha_int_err / ar, ai * result.alpha_ref_err / ar**2)
    if epg < 0 and -epg > err:
        warnings.warn(f"negative EPG {epg:.2e} beyond its uncertainty {err:.1e}", NegativeEPGWarning, stacklevel=2)
    return float(epg), float(err)


def run_irb(
    gateset,
    lengths=DEFAULT_LENGTHS,
    n_seeds: int = DEFAULT_SEEDS,
    shots: int | None = DEFAULT_SHOTS,
    seed: int = 0,
) -> IRBResult:
    """Reference and ECR-interleaved RB on shared random streams, fitted to an EPG."""
    ref = run_rb(gateset, lengths, n_seeds, shots, False, seed)
    inter = run_rb(gateset, lengths, n_seeds, shots, True, seed)
    fits = []
    for curve in (ref, inter):
        sem = curve.std / np.sqrt(n_seeds) if n_seeds > 1 and np.any(curve.std > 0) else None
        fits.append(fit_decay(curve.lengths, curve.mean, sem))
    return IRBResult(
        lengths=ref.lengths, ref_mean=ref.mean.tolist(), ref_std=ref.std.tolist(),
        int_mean=inter.mean.tolist(), int_std=inter.std.tolist(),
        alpha_ref=fits[0].alpha, alpha_int=fits[1].alpha,
        alpha_ref_err=fits[0].alpha_err, alpha_int_err=fits[1].alpha_err,
        n_seeds=n_seeds, shots=shots,
    )
