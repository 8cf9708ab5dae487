"""Closed-loop calibration of SX pulses and the ZX(pi/4) cross-resonance segment.

All measurements are noiseless gate-level tomography of simulated segments
(see :func:`ecrbudget.tomography.segment_hamiltonian`).  The conditional
rotation angle of a segment is ``Omega_ZX * T`` with ``T`` the segment length.
"""

from __future__ import annotations

import warnings
from dataclasses import replace

import numpy as np
import scipy.optimize

from . import hilbert
from .dynamics import PairHamiltonian, TWO_PI
from .gates import SX, CRPulseConfig, SingleQubitGateConfig, DEFAULT_RISE
from .pulses import Schedule, gaussian
from .tomography import EffectiveHamiltonian, segment_hamiltonian

DEFAULT_AMP_CEILING = TWO_PI * 0.016  # rad/ns
DEFAULT_MIN_FLAT = 40.0  # ns
FLAT_QUANTUM = 4.0  # ns
MAX_FLAT = 1000.0
RATE_FLOOR = 1e-12  # rad/ns; rates below this count as zero


class CalibrationError(RuntimeError):
    """A calibration loop failed to converge or to bracket its target."""


class StraddlingWarning(UserWarning):
    """The pair is outside the straddling regime."""


# -- single-qubit gates ---------------------------------------------------------


def _qubit_block(u: np.ndarray, qubit: str) -> np.ndarray:
    idx = [hilbert.index(0, 0), hilbert.index(1, 0)] if qubit == "control" else [0, 1]
    return u[np.ix_(idx, idx)]


def sx_fidelity(ham: PairHamiltonian, sq: SingleQubitGateConfig, qubit: str) -> float:
    """Average gate fidelity of one SX pulse with the other transmon in ``|0>``."""
    u = ham.propagate(Schedule().append(qubit, sq.sx()), sq.dt)
    return hilbert.average_gate_fidelity(_qubit_block(u, qubit), SX)


def calibrate_sx(
    ham: PairHamiltonian,
    qubit: str,
    sigma: float = 5.0,
    duration: float = 20.0,
    dt: float = 0.25,
    min_fidelity: float = 0.998,
    max_iter: int = 400,
) -> SingleQubitGateConfig:
    """Nelder-Mead over (amplitude, DRAG) maximizing the SX average gate fidelity."""
    if qubit not in ("control", "target"):
        raise ValueError(f"unknown qubit {qubit!r}")
    shape = gaussian(1.0, sigma, duration, dt).samples.real
    amp0 = (np.pi / 2) / (shape.sum() * dt)

    def cost(p):
        return 1 - sx_fidelity(ham, SingleQubitGateConfig(p[0], sigma, p[1], duration, dt), qubit)

    res = scipy.optimize.minimize(cost, [amp0, 0.0], method="Nelder-Mead",
                                  options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": max_iter})
    sq = SingleQubitGateConfig(float(res.x[0]), sigma, float(res.x[1]), duration, dt)
    if 1 - res.fun < min_fidelity:
        raise CalibrationError(f"SX fidelity {1 - res.fun:.6f} below {min_fidelity}")
    return sq


# -- cross resonance ------------------------------------------------------------


def cr_detuning(ham: PairHamiltonian) -> float:
    """CR carrier offset (MHz) that places the control drive on the dressed target frequency."""
    f = ham.dressed_frequencies
    return float((f[1] - f[0]) / TWO_PI * 1e3)


def measure(ham: PairHamiltonian, cfg: CRPulseConfig) -> tuple[EffectiveHamiltonian, float]:
    """Gate-level Hamiltonian and duration of the uncorrected CR(+) segment."""
    return segment_hamiltonian(ham, cfg, +1, False)


def conditional_angle(ham: PairHamiltonian, cfg: CRPulseConfig) -> float:
    h, t = measure(ham, cfg)
    return h.conditional_angle(t)


def _with_amplitude(cfg: CRPulseConfig, amp: float) -> CRPulseConfig:
    """Change the CR amplitude, scaling the cancellation tone along with it."""
    ratio = amp / cfg.cr_amplitude if cfg.cr_amplitude else 0.0
    return replace(cfg, cr_amplitude=amp, cancel_amplitude=cfg.cancel_amplitude * ratio)


def _solve_amplitude(ham, cfg, target_angle, ceiling) -> CRPulseConfig | None:
    """Root of the conditional angle in amplitude, or ``None`` if it needs more than ``ceiling``."""

    def f(a):
        return conditional_angle(ham, _with_amplitude(cfg, a)) - target_angle

    lo, hi = 0.0, min(ceiling, 2 * cfg.cr_amplitude) if cfg.cr_amplitude > 0 else ceiling
    f_hi = f(hi)
    while f_hi < 0 and hi < ceiling:
        hi = min(ceiling, 2 * hi)
        f_hi = f(hi)
    if f_hi < 0:
        return None
    amp = scipy.optimize.brentq(f, lo, hi, xtol=1e-10, rtol=1e-10)
    return _with_amplitude(cfg, amp)


def _align_phase(ham, cfg, rounds: int = 4) -> CRPulseConfig:
    """Rotate the CR (and cancellation) phase until Omega_ZY vanishes with Omega_ZX > 0.

    The conditional axis of a drive with phase ``p`` sits at ``-p``, so adding
    ``arg(ZX + i ZY)`` to the phase rotates it onto +x.
    """
    for _ in range(rounds):
        h, _ = measure(ham, cfg)
        err = np.arctan2(h.omega_zy, h.omega_zx)
        if abs(err) < 1e-7:
            break
        cfg = replace(cfg, cr_phase=cfg.cr_phase + err, cancel_phase=cfg.cancel_phase + err)
    return cfg


def calibrate_zx_quarter(
    ham: PairHamiltonian,
    target_angle: float = np.pi / 4,
    amp_ceiling: float = DEFAULT_AMP_CEILING,
    min_flat: float = DEFAULT_MIN_FLAT,
    rise: float = DEFAULT_RISE,
    start: CRPulseConfig | None = None,
    rounds: int = 3,
) -> CRPulseConfig:
    """Calibrate phase, flat length and amplitude of a ZX(``target_angle``) segment.

    The flat length is the shortest multiple of 4 ns (at least ``min_flat``)
    for which the required amplitude stays below ``amp_ceiling``; the
    amplitude is then found by Brent's method on the conditional angle and the
    phase by nulling Omega_ZY.  ``start`` keeps an existing cancellation tone
    (scaled with the CR amplitude) and flat length.
    """
    detuning = abs(ham.pair.detuning)
    if detuning >= abs(ham.pair.control.anharmonicity):
        warnings.warn(
            f"detuning {detuning:.0f} MHz is outside the straddling regime", StraddlingWarning, stacklevel=2
        )
    if start is not None:
        cfg = start
    else:
        cfg = _align_phase(ham, CRPulseConfig(0.25 * amp_ceiling, 0.0, min_flat, cr_detuning(ham), rise))
        if abs(conditional_angle(ham, cfg)) < 1e-12:
            raise CalibrationError("CR drive produces no conditional rotation")
        # grow the flat top until the target angle is reachable below the ceiling
        while True:
            solved = _solve_amplitude(ham, cfg, target_angle, amp_ceiling)
            if solved is not None:
                cfg = solved
                break
            angle = conditional_angle(ham, _with_amplitude(cfg, amp_ceiling))
            grow = max(1.1, target_angle / max(angle, 1e-9))
            flat = np.ceil(((cfg.cr_flat + 1.2 * rise) * grow - 1.2 * rise) / FLAT_QUANTUM) * FLAT_QUANTUM
            if flat > MAX_FLAT:
                raise CalibrationError("conditional angle cannot be reached below the amplitude ceiling")
            cfg = _with_amplitude(replace(cfg, cr_flat=float(flat)), amp_ceiling)
    for _ in range(rounds):
        cfg = _align_phase(ham, cfg)
        solved = _solve_amplitude(ham, cfg, target_angle, 1.5 * amp_ceiling)
        if solved is None:
            raise CalibrationError("amplitude bisection failed to bracket the target angle")
        cfg = solved
        h, t = measure(ham, cfg)
        if abs(h.omega_zy) < 1e-4 * abs(h.omega_zx) and abs(h.conditional_angle(t) - target_angle) < 1e-5:
            break
    return cfg


def calibrate_cancellation(
    ham: PairHamiltonian, cfg: CRPulseConfig, tol: float = 2e-3, max_iter: int = 8
) -> CRPulseConfig:
    """Null Omega_IX and Omega_IY with a target tone sharing the CR envelope.

    The unconditional rate ``w = IX + i IY`` responds to the complex cancel
    amplitude ``c`` as ``w0 + g conj(c)``; ``g`` is estimated from a probe and
    refined by secant updates.
    """
    def w_of(c: complex) -> complex:
        trial = replace(cfg, cancel_amplitude=abs(c), cancel_phase=float(np.angle(c)))
        h, _ = measure(ham, trial)
        return complex(h.omega_ix, h.omega_iy), h

    c0 = cfg.cancel_amplitude * np.exp(1j * cfg.cancel_phase)
    w0, h = w_of(c0)
    zx = abs(h.omega_zx)
    if abs(w0) <= max(tol * zx, RATE_FLOOR):
        return cfg
    probe = c0 + 0.1 * cfg.cr_amplitude * np.exp(1j * np.angle(w0))
    w1, h = w_of(probe)
    for _ in range(max_iter):
        g = (w1 - w0) / np.conj(probe - c0)
        if g == 0:
            break
        c_new = np.conj(np.conj(probe) - w1 / g)
        c0, w0 = probe, w1
        probe = c_new
        w1, h = w_of(probe)
        if abs(w1) <= 0.1 * tol * abs(h.omega_zx):
            break
    if abs(w1) > max(tol * abs(h.omega_zx), RATE_FLOOR):
        raise CalibrationError(f"cancellation left |IX + i IY| = {abs(w1):.3g} rad/ns")
    return replace(cfg, cancel_amplitude=float(abs(probe)), cancel_phase=float(np.angle(probe)))


def calibrate_cr(
    ham: PairHamiltonian,
    target_angle: float = np.pi / 4,
    amp_ceiling: float = DEFAULT_AMP_CEILING,
    min_flat: float = DEFAULT_MIN_FLAT,
    rise: float = DEFAULT_RISE,
    start: CRPulseConfig | None = None,
) -> CRPulseConfig:
    """ZX calibration, cancellation tone, then a final ZX touch-up with the tone in place."""
    cfg = calibrate_zx_quarter(ham, target_angle, amp_ceiling, min_flat, rise, start)
    cfg = calibrate_cancellation(ham, cfg)
    cfg = calibrate_zx_quarter(ham, target_angle, amp_ceiling, min_flat, rise, cfg)
    return calibrate_cancellation(ham, cfg)
