"""Pulse envelopes, DRAG shaping, spectral diagnostics and schedules.

Units: time in ns, drive amplitudes in rad/ns (the resonant Rabi rate of the
0-1 transition), frequencies in GHz unless a name says MHz.  An envelope is a
list of piecewise-constant samples; sample ``k`` spans ``[k*dt, (k+1)*dt)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Literal

import numpy as np

Channel = Literal["control", "target"]
CHANNELS: tuple[Channel, ...] = ("control", "target")


@dataclass(frozen=True, eq=False)
class Envelope:
    dt: float
    samples: np.ndarray
    carrier_detuning: float = 0.0  # MHz, relative to the channel frame
    phase: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("envelope needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("envelope samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) * self.dt

    def complex_samples(self) -> np.ndarray:
        """Samples including the envelope phase."""
        return self.samples * np.exp(1j * self.phase)

    def with_phase(self, phase: float) -> Envelope:
        return replace(self, phase=phase)

    def scaled(self, factor: complex) -> Envelope:
        return replace(self, samples=self.samples * factor)

    def to_dict(self) -> dict:
        return {
            "dt_ns": self.dt,
            "samples_re": self.samples.real.tolist(),
            "samples_im": self.samples.imag.tolist(),
            "carrier_detuning_mhz": self.carrier_detuning,
            "phase_rad": self.phase,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Envelope:
        samples = np.asarray(d["samples_re"]) + 1j * np.asarray(d["samples_im"])
        return cls(d["dt_ns"], samples, d["carrier_detuning_mhz"], d["phase_rad"])

    def __eq__(self, other):
        if not isinstance(other, Envelope):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.carrier_detuning == other.carrier_detuning
            and self.phase == other.phase
            and np.array_equal(self.samples, other.samples)
        )

    def __hash__(self):
        return hash((self.dt, self.carrier_detuning, self.phase, self.samples.tobytes()))


def _n_samples(length: float, dt: float) -> int:
    n = length / dt
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"length {length} ns is not a multiple of dt = {dt} ns")
    return int(round(n))


def _lifted_gaussian(t: np.ndarray, center: float, sigma: float, zero_at: float) -> np.ndarray:
    g = np.exp(-0.5 * ((t - center) / sigma) ** 2)
    g0 = np.exp(-0.5 * ((zero_at - center) / sigma) ** 2)
    return (g - g0) / (1.0 - g0)


def gaussian_square(
    amplitude: float, sigma: float, rise: float, flat: float, dt: float
) -> Envelope:
    """Flat-top pulse with lifted-Gaussian edges of length ``rise`` on each side."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if flat < 0:
        raise ValueError("flat length must be non-negative")
    n_rise = _n_samples(rise, dt)
    n_flat = _n_samples(flat, dt)
    t = (np.arange(n_rise) + 0.5) * dt
    edge = _lifted_gaussian(t, rise, sigma, 0.0)
    shape = np.concatenate([edge, np.ones(n_flat), edge[::-1]])
    return Envelope(dt, amplitude * shape)


def gaussian(amplitude: float, sigma: float, duration: float, dt: float) -> Envelope:
    """Lifted Gaussian bump centred in a window of ``duration`` ns (peak ``amplitude``)."""
    n = _n_samples(duration, dt)
    t = (np.arange(n) + 0.5) * dt
    return Envelope(dt, amplitude * _lifted_gaussian(t, duration / 2, sigma, 0.0))


def apply_drag(env: Envelope, alpha: float) -> Envelope:
    """``F -> (1 + i alpha d/dt) F`` with a centred finite-difference derivative."""
    if np.any(np.abs(env.samples.imag) > 0) and alpha != 0:
        warnings.warn("applying DRAG to an envelope that already has a Q component", stacklevel=2)
    if alpha == 0:
        return env
    derivative = np.gradient(env.samples, env.dt)
    return replace(env, samples=env.samples + 1j * alpha * derivative)


def drag_alpha(f_transition: float, f_cr: float, two_photon: bool = False) -> float:
    """DRAG parameter (ns) nulling drive spectral weight at a transition (GHz inputs)."""
    detuning = f_transition - f_cr
    if detuning == 0:
        raise ZeroDivisionError("drive is resonant with the transition; no DRAG parameter exists")
    factor = 4 * np.pi if two_photon else 2 * np.pi
    return 1.0 / (factor * detuning)


def spectral_weight(env: Envelope, f_offset: float) -> float:
    """Power (dB relative to DC) seen by a transition ``f_offset`` MHz above the carrier."""
    s = env.complex_samples()
    t = (np.arange(len(s)) + 0.5) * env.dt
    dc = abs(np.sum(s)) ** 2
    if dc == 0:
        raise ValueError("envelope has no DC component to normalize against")
    component = abs(np.sum(s * np.exp(-2j * np.pi * f_offset * 1e-3 * t))) ** 2
    return float(10 * np.log10(max(component, 1e-300) / dc))


@dataclass(frozen=True)
class Pulse:
    channel: Channel
    start: float
    envelope: Envelope

    @property
    def end(self) -> float:
        return self.start + self.envelope.duration


@dataclass(frozen=True)
class FrameOp:
    channel: Channel
    time: float
    angle: float


@dataclass(frozen=True)
class Schedule:
    """Pulses on the two drive lines plus zero-duration virtual-Z frame updates.

    A virtual Z on a channel rotates that transmon's frame; in simulation it is
    applied as the exact diagonal rotation ``exp(i angle n)`` in the logical
    (dressed, rotating) frame at the given time.
    """

    pulses: tuple[Pulse, ...] = ()
    frame_ops: tuple[FrameOp, ...] = ()
    min_duration: float = 0.0

    def __post_init__(self):
        for p in self.pulses:
            if p.channel not in CHANNELS:
                raise ValueError(f"unknown channel {p.channel!r}")
            if p.start < 0:
                raise ValueError("pulse start times must be non-negative")
        for op in self.frame_ops:
            if op.time < 0 or not np.isfinite(op.angle):
                raise ValueError("invalid frame operation")
        for ch in CHANNELS:
            spans = sorted((p.start, p.end) for p in self.pulses if p.channel == ch)
            for (s0, e0), (s1, _) in zip(spans, spans[1:]):
                if s1 < e0 - 1e-9:
                    raise ValueError(f"overlapping pulses on channel {ch}")

    @property
    def duration(self) -> float:
        ends = [p.end for p in self.pulses] + [op.time for op in self.frame_ops]
        return max([self.min_duration, *ends])

    def add(self, channel: Channel, start: float, envelope: Envelope) -> Schedule:
        return replace(self, pulses=self.pulses + (Pulse(channel, start, envelope),))

    def append(self, channel: Channel, envelope: Envelope) -> Schedule:
        """Add a pulse starting at the current end of the schedule."""
        return self.add(channel, self.duration, envelope)

    def delay(self, length: float) -> Schedule:
        return replace(self, min_duration=self.duration + length)

    def shifted(self, offset: float) -> Schedule:
        return Schedule(
            tuple(replace(p, start=p.start + offset) for p in self.pulses),
            tuple(replace(op, time=op.time + offset) for op in self.frame_ops),
            self.min_duration + offset if self.min_duration else 0.0,
        )

    def then(self, other: Schedule) -> Schedule:
        """Concatenate ``other`` after the end of this schedule."""
        shifted = other.shifted(self.duration)
        merged = self
        for op in shifted.frame_ops:
            merged = virtual_z(merged, op.channel, op.angle, op.time)
        return Schedule(
            merged.pulses + shifted.pulses,
            merged.frame_ops,
            max(self.duration + other.duration, merged.min_duration),
        )

    def to_dict(self) -> dict:
        return {
            "pulses": [
                {"channel": p.channel, "start_ns": p.start, "envelope": p.envelope.to_dict()}
                for p in self.pulses
            ],
            "frame_ops": [
                {"channel": op.channel, "time_ns": op.time, "angle_rad": op.angle}
                for op in self.frame_ops
            ],
            "min_duration_ns": self.min_duration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Schedule:
        return cls(
            tuple(
                Pulse(p["channel"], p["start_ns"], Envelope.from_dict(p["envelope"]))
                for p in d["pulses"]
            ),
            tuple(FrameOp(o["channel"], o["time_ns"], o["angle_rad"]) for o in d["frame_ops"]),
            d.get("min_duration_ns", 0.0),
        )


def virtual_z(schedule: Schedule, channel: Channel, angle: float, time: float) -> Schedule:
    """Zero-duration Rz(angle) of ``channel``'s transmon at ``time`` (applied exactly by the simulator).

    Updates at the same time and channel are merged; a net angle of zero
    removes the update, so ``Z(a) Z(-a)`` leaves the schedule unchanged.
    """
    if not np.isfinite(angle):
        raise ValueError("virtual-Z angle must be finite")
    if angle == 0:
        return schedule
    ops = list(schedule.frame_ops)
    for i, op in enumerate(ops):
        if op.channel == channel and abs(op.time - time) < 1e-12:
            total = op.angle + angle
            if abs(total) < 1e-15:
                del ops[i]
            else:
                ops[i] = FrameOp(channel, op.time, total)
            return replace(schedule, frame_ops=tuple(ops))
    ops.append(FrameOp(channel, time, angle))
    ops.sort(key=lambda o: o.time)
    return replace(schedule, frame_ops=tuple(ops))


def sequence(parts: Iterable[Schedule]) -> Schedule:
    out = Schedule()
    for part in parts:
        out = out.then(part)
    return out

