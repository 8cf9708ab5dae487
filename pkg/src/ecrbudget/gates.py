"""Gate configurations, pulse-level schedule builders and ideal target unitaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg

from . import hilbert
from .pulses import Envelope, Schedule, apply_drag, gaussian, gaussian_square, virtual_z

DEFAULT_RISE = 30.0
DEFAULT_SX_SIGMA = 5.0
DEFAULT_SX_DURATION = 20.0


@dataclass(frozen=True)
class CorrectionSet:
    theta_c: float = 0.0  # virtual-Z on the target after each CR segment, rad
    zy_phase_fix: float = 0.0  # added to the CR drive phase, rad
    y_comp_angle: float = 0.0  # Y rotation of the target around each CR segment, rad
    zx_rescale: float = 1.0

    def __post_init__(self):
        values = (self.theta_c, self.zy_phase_fix, self.y_comp_angle, self.zx_rescale)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("corrections must be finite")
        if not 0 < self.zx_rescale <= 1:
            raise ValueError("zx_rescale must lie in (0, 1]")

    @property
    def is_zero(self) -> bool:
        return self == CorrectionSet()


@dataclass(frozen=True)
class SingleQubitGateConfig:
    """Native SX pulse: lifted Gaussian with DRAG on one transmon's drive line."""

    sx_amplitude: float  # rad/ns
    sx_sigma: float = DEFAULT_SX_SIGMA
    sx_drag_alpha: float = 0.0
    duration: float = DEFAULT_SX_DURATION
    dt: float = 0.25

    def __post_init__(self):
        if self.sx_sigma <= 0 or self.duration <= 0:
            raise ValueError("SX pulse sigma and duration must be positive")

    def rotation(self, angle: float, axis_phase: float = 0.0) -> Envelope:
        """Pulse rotating by ``angle`` about the equatorial axis at ``axis_phase``.

        ``axis_phase = 0`` is +x and ``pi/2`` is +y.  The drive convention maps
        envelope phase ``p`` to the axis at ``-p``.
        """
        env = gaussian(self.sx_amplitude * angle / (np.pi / 2), self.sx_sigma, self.duration, self.dt)
        return apply_drag(env, self.sx_drag_alpha).with_phase(-axis_phase)

    def sx(self) -> Envelope:
        return self.rotation(np.pi / 2)


@dataclass(frozen=True)
class CRPulseConfig:
    cr_amplitude: float  # rad/ns
    cr_phase: float
    cr_flat: float  # ns
    cr_detuning: float  # MHz, CR carrier relative to the control frame
    rise: float = DEFAULT_RISE
    drag_alpha: float = 0.0  # ns
    cancel_amplitude: float = 0.0  # rad/ns
    cancel_phase: float = 0.0
    corrections: CorrectionSet = field(default_factory=CorrectionSet)
    dt: float = 0.25

    def __post_init__(self):
        if self.cr_flat < 0:
            raise ValueError("cr_flat must be non-negative")
        values = (self.cr_amplitude, self.cr_phase, self.cr_flat, self.drag_alpha,
                  self.cancel_amplitude, self.cancel_phase, self.rise)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("CR pulse parameters must be finite")

    @property
    def sigma(self) -> float:
        return self.rise / 4

    @property
    def pulse_duration(self) -> float:
        return 2 * self.rise + self.cr_flat

    def with_corrections(self, **changes) -> CRPulseConfig:
        return replace(self, corrections=replace(self.corrections, **changes))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = {
            "cr_amplitude": "rad/ns", "cancel_amplitude": "rad/ns", "cr_flat": "ns",
            "rise": "ns", "drag_alpha": "ns", "cr_detuning": "MHz", "phases": "rad",
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CRPulseConfig:
        d = {k: v for k, v in d.items() if k != "units"}
        d["corrections"] = CorrectionSet(**d["corrections"])
        return cls(**d)


# -- schedule builders -------------------------------------------------------


def cr_tones(cfg: CRPulseConfig, sign: int = 1, corrected: bool = False, flat: float | None = None):
    """(CR envelope on the control line, cancellation envelope on the target line)."""
    flat = cfg.cr_flat if flat is None else flat
    base = gaussian_square(1.0, cfg.sigma, cfg.rise, flat, cfg.dt)
    phase_shift = 0.0 if sign > 0 else np.pi
    scale = 1.0
    if corrected:
        phase_shift += cfg.corrections.zy_phase_fix
        scale = cfg.corrections.zx_rescale
    cr = apply_drag(base.scaled(cfg.cr_amplitude * scale), cfg.drag_alpha)
    cr = Envelope(cr.dt, cr.samples, cfg.cr_detuning, cfg.cr_phase + phase_shift)
    cancel = base.scaled(cfg.cancel_amplitude * scale).with_phase(cfg.cancel_phase + phase_shift)
    return cr, cancel


def cr_segment(
    cfg: CRPulseConfig,
    target_sq: SingleQubitGateConfig | None = None,
    sign: int = 1,
    corrected: bool = False,
    flat: float | None = None,
) -> Schedule:
    """One ZX(+-pi/4) segment, including its target-side corrections when ``corrected``."""
    cr, cancel = cr_tones(cfg, sign, corrected, flat)
    sched = Schedule()
    y = cfg.corrections.y_comp_angle * sign if corrected else 0.0
    if y != 0:
        if target_sq is None:
            raise ValueError("Y compensation needs the target's single-qubit configuration")
        # Y(-y) before and Y(y) after map ZZ onto ZX for y = arctan(ZZ / ZX)
        sched = sched.append("target", target_sq.rotation(-y, np.pi / 2))
    start = sched.duration
    sched = sched.add("control", start, cr)
    if cfg.cancel_amplitude != 0:
        sched = sched.add("target", start, cancel)
    else:
        sched = Schedule(sched.pulses, sched.frame_ops, start + cr.duration)
    if y != 0:
        sched = sched.append("target", target_sq.rotation(y, np.pi / 2))
    if corrected and cfg.corrections.theta_c != 0:
        sched = virtual_z(sched, "target", cfg.corrections.theta_c, sched.duration)
    return sched


def x_gate(sq: SingleQubitGateConfig, channel: str = "control") -> Schedule:
    """X as two back-to-back SX pulses."""
    return Schedule().append(channel, sq.sx()).append(channel, sq.sx())


def assemble_ecr(
    cfg: CRPulseConfig,
    sq_control: SingleQubitGateConfig,
    corrected: bool = False,
    sq_target: SingleQubitGateConfig | None = None,
) -> Schedule:
    """ZX(pi/4), X on the control, ZX(-pi/4); corrected segments add RY/RZ on the target."""
    first = cr_segment(cfg, sq_target, +1, corrected)
    second = cr_segment(cfg, sq_target, -1, corrected)
    return first.then(x_gate(sq_control)).then(second)


def ecr_duration(cfg: CRPulseConfig, sq_control: SingleQubitGateConfig, corrected: bool = False,
                 sq_target: SingleQubitGateConfig | None = None) -> float:
    return assemble_ecr(cfg, sq_control, corrected, sq_target).duration


# -- ideal operators ----------------------------------------------------------


def zx_rotation(theta: float) -> np.ndarray:
    zx = np.kron(hilbert.PAULI["Z"], hilbert.PAULI["X"])
    return scipy.linalg.expm(-0.5j * theta * zx)


X_CONTROL = np.kron(hilbert.PAULI["X"], hilbert.PAULI["I"])
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])


def ideal_ecr() -> np.ndarray:
    """Time-ordered ZX(pi/4), X on the control, ZX(-pi/4) as a 4x4 matrix."""
    return zx_rotation(-np.pi / 4) @ X_CONTROL @ zx_rotation(np.pi / 4)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
