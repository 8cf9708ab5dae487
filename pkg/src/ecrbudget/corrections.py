"""Coherent-error corrections of the echoed CR gate.

Four knobs are stored in :class:`~ecrbudget.gates.CorrectionSet` and only
realized when a gate is assembled with ``corrected=True``:

* ``theta_c``: virtual Rz on the target after each CR segment, cancelling IZ;
* ``zy_phase_fix``: CR phase offset removing the ZY term that ``theta_c``
  creates through the commutator with ZX;
* ``y_comp_angle``: target Y(-theta) / Y(theta) around each segment, which
  rotates ZZ into ZX;
* ``zx_rescale``: amplitude factor restoring the conditional angle after the
  ZZ rotation adds to ZX.

Each refinement step is incremental from the corrections already present, so
a second pass over a converged configuration barely moves them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .budget import incoherent_epg
from .dynamics import PairHamiltonian
from .gates import CRPulseConfig, SingleQubitGateConfig, ecr_duration
from .tomography import EffectiveHamiltonian, segment_hamiltonian, term_epg

ZZ_GAIN_FACTOR = 1.5
ANGLE_TOL = 1e-3  # relative conditional-angle tolerance of the closed-loop rescale
ZZ_TOL = 2e-3  # |ZZ / ZX| at which the ZZ secant stops


class UndefinedAngleError(ValueError):
    """The ZZ compensation angle needs a non-zero ZX rate."""


def iz_correction_angle(h: EffectiveHamiltonian, pulse_duration: float) -> float:
    """Virtual-Z angle undoing the IZ phase accumulated over one segment."""
    return -h.omega_iz * pulse_duration


def zy_phase_fix(
    h: EffectiveHamiltonian,
    theta_c: float,
    ham: PairHamiltonian | None = None,
    cfg: CRPulseConfig | None = None,
    target_sq: SingleQubitGateConfig | None = None,
) -> float:
    """CR phase offset cancelling the ZY term induced by the virtual Z.

    Composing Rz(theta_c) with a ZX-dominated segment tilts its conditional
    axis by theta_c / 2 to first order.  With ``ham`` and ``cfg`` (whose
    corrections already hold ``theta_c``) one tomography round adds the
    remaining tilt.
    """
    if h.omega_zx == 0:
        raise UndefinedAngleError("ZY fix needs a non-zero ZX rate")
    fix = theta_c / 2
    if ham is None or cfg is None:
        return fix
    trial = cfg.with_corrections(theta_c=theta_c, zy_phase_fix=fix)
    h1, _ = segment_hamiltonian(ham, trial, +1, True, target_sq)
    return float(fix + np.arctan2(h1.omega_zy, h1.omega_zx))


def zz_compensation_angle(h: EffectiveHamiltonian) -> float:
    """Y conjugation angle arctan(ZZ / ZX) turning ZZ into ZX."""
    if h.omega_zx == 0:
        raise UndefinedAngleError("ZZ compensation angle undefined for ZX = 0")
    return float(np.arctan(h.omega_zz / h.omega_zx))


def rescale_factor(h: EffectiveHamiltonian) -> float:
    return float(abs(h.omega_zx) / np.hypot(h.omega_zx, h.omega_zz)) if h.omega_zx else 1.0


def rescale_zx_amplitude(cfg: CRPulseConfig, h: EffectiveHamiltonian) -> CRPulseConfig:
    """Shrink the CR amplitude by ZX / sqrt(ZX^2 + ZZ^2) of the uncompensated segment."""
    return cfg.with_corrections(zx_rescale=min(1.0, cfg.corrections.zx_rescale * rescale_factor(h)))


def ecr_segment_hamiltonians(ham, cfg, target_sq=None, corrected=True):
    """(H+, H-, T): gate-level Hamiltonians of both segments and the segment length."""
    hp, t = segment_hamiltonian(ham, cfg, +1, corrected, target_sq)
    hm, _ = segment_hamiltonian(ham, cfg, -1, corrected, target_sq)
    return hp, hm, t


def term_epgs(hp: EffectiveHamiltonian, hm: EffectiveHamiltonian, t: float) -> dict:
    return {"iz": term_epg(hp, "iz", t, hm), "zz": term_epg(hp, "zz", t, hm)}


def y_pulse_cost(ham: PairHamiltonian, cfg: CRPulseConfig, sq_control: SingleQubitGateConfig,
                 target_sq: SingleQubitGateConfig) -> float:
    """Incoherent EPG added by two target Y pulses per segment."""
    c, t = ham.pair.control, ham.pair.target
    base = ecr_duration(cfg, sq_control)
    extra = 4 * target_sq.duration
    return (incoherent_epg(c.t1, c.t2e, t.t1, t.t2e, base + extra)
            - incoherent_epg(c.t1, c.t2e, t.t1, t.t2e, base))


def zz_compensation_warranted(zz_epg: float, cost: float, factor: float = ZZ_GAIN_FACTOR) -> bool:
    return zz_epg > factor * cost


def _secant(f, x0: float, x1: float, tol: float, max_iter: int = 8) -> float:
    f0, f1 = f(x0), f(x1)
    for _ in range(max_iter):
        if abs(f1) < tol or f1 == f0:
            break
        x0, x1, f0 = x1, x1 - f1 * (x1 - x0) / (f1 - f0), f1
        f1 = f(x1)
    return x1


def refine_zz(ham, cfg: CRPulseConfig, target_sq, h_ref: EffectiveHamiltonian) -> CRPulseConfig:
    """Y angle from arctan(ZZ/ZX), then secant iterations zeroing the refit ZZ."""
    theta0 = cfg.corrections.y_comp_angle + zz_compensation_angle(h_ref)

    def zz_ratio(theta):
        h, _ = segment_hamiltonian(ham, cfg.with_corrections(y_comp_angle=theta), +1, True, target_sq)
        return h.omega_zz / h.omega_zx

    r0 = zz_ratio(theta0)
    if abs(r0) < ZZ_TOL:
        return cfg.with_corrections(y_comp_angle=theta0)
    theta1 = theta0 + np.arctan(r0)
    theta = _secant(zz_ratio, theta0, theta1, ZZ_TOL)
    return cfg.with_corrections(y_comp_angle=float(theta))


def refine_angle(ham, cfg: CRPulseConfig, target_sq, target_angle: float = np.pi / 4) -> CRPulseConfig:
    """Secant on ``zx_rescale`` until the corrected conditional angle hits the target."""

    def err(s):
        h, t = segment_hamiltonian(ham, cfg.with_corrections(zx_rescale=float(min(s, 1.0))), +1, True, target_sq)
        return h.conditional_angle(t) / target_angle - 1

    s0 = cfg.corrections.zx_rescale
    e0 = err(s0)
    if abs(e0) < ANGLE_TOL:
        return cfg
    s1 = min(1.0, s0 / (1 + e0))
    s = _secant(err, s0, s1, ANGLE_TOL)
    return cfg.with_corrections(zx_rescale=float(np.clip(s, 1e-3, 1.0)))


def _measure(ham, cfg, target_sq):
    return segment_hamiltonian(ham, cfg, +1, True, target_sq)


def _converged(h: EffectiveHamiltonian, t: float, zz: bool, target_angle: float = np.pi / 4) -> bool:
    ok = abs(h.omega_iz * t) < 1e-3 and abs(h.omega_zy) < 1e-3 * abs(h.omega_zx)
    if zz:
        ok = ok and abs(h.omega_zz) < ZZ_TOL * abs(h.omega_zx)
        ok = ok and abs(h.conditional_angle(t) / target_angle - 1) < ANGLE_TOL
    return ok


@dataclass
class CorrectionResult:
    cfg: CRPulseConfig
    h_plus: EffectiveHamiltonian
    h_minus: EffectiveHamiltonian
    segment_duration: float
    zz_applied: bool
    before: dict = field(default_factory=dict)  # term EPGs of the uncorrected gate
    after: dict = field(default_factory=dict)


def correct_pair(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    sq_control: SingleQubitGateConfig,
    target_sq: SingleQubitGateConfig,
    zz: bool | None = None,
    iz_rounds: int = 2,
    max_rounds: int = 4,
) -> CorrectionResult:
    """Full correction pass: ZZ (if warranted or forced), IZ virtual Z, then the ZY phase fix.

    ``zz=None`` applies ZZ compensation only when its term EPG exceeds
    ``ZZ_GAIN_FACTOR`` times the incoherent cost of the extra Y pulses.
    """
    hp, hm, t = ecr_segment_hamiltonians(ham, cfg, target_sq)
    before = term_epgs(hp, hm, t)
    if zz is None:
        zz = zz_compensation_warranted(before["zz"], y_pulse_cost(ham, cfg, sq_control, target_sq))
    ref = hp
    for _ in range(max_rounds):
        if zz:
            cfg = refine_zz(ham, cfg, target_sq, _measure(ham, cfg, target_sq)[0])
            if cfg.corrections.zx_rescale == 1.0:
                # first pass: shrink by the ZZ that the rotation folds into ZX
                cfg = rescale_zx_amplitude(cfg, ref)
            cfg = refine_angle(ham, cfg, target_sq)
        for _ in range(iz_rounds):
            h, t = _measure(ham, cfg, target_sq)
            cfg = cfg.with_corrections(theta_c=float(cfg.corrections.theta_c + iz_correction_angle(h, t)))
        h, _ = _measure(ham, cfg, target_sq)
        if cfg.corrections.zy_phase_fix == 0 and cfg.corrections.theta_c != 0:
            # first pass: first-order BCH value plus one tomography round
            fix = zy_phase_fix(h, cfg.corrections.theta_c, ham, cfg, target_sq)
        else:
            fix = cfg.corrections.zy_phase_fix + float(np.arctan2(h.omega_zy, h.omega_zx))
        cfg = cfg.with_corrections(zy_phase_fix=float(fix))
        if _converged(*_measure(ham, cfg, target_sq), zz):
            break
    hp, hm, t = ecr_segment_hamiltonians(ham, cfg, target_sq)
    return CorrectionResult(cfg, hp, hm, t, bool(zz), before, term_epgs(hp, hm, t))

