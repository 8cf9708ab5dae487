from __future__ import annotations

from dataclasses import asdict

import numpy as np
import pytest
from scipy.linalg import expm

from ecrbudget import hilbert
from ecrbudget.corrections import (
    UndefinedAngleError,
    correct_pair,
    iz_correction_angle,
    rescale_factor,
    rescale_zx_amplitude,
    y_pulse_cost,
    zz_compensation_angle,
    zz_compensation_warranted,
    zy_phase_fix,
)
from ecrbudget.device import DeviceConfig
from ecrbudget.dynamics import build_hamiltonian
from ecrbudget.gates import assemble_ecr, ideal_ecr
from ecrbudget.pipeline import load_pair_state
from ecrbudget.tomography import EffectiveHamiltonian, segment_hamiltonian

MHZ = 2 * np.pi * 1e-3


def ecr_infidelity(ham, cr, sqc, sqt, corrected: bool) -> float:
    u = ham.propagate(assemble_ecr(cr, sqc, corrected, sqt))
    return 1 - hilbert.average_gate_fidelity(hilbert.computational_block(u), ideal_ecr())


@pytest.fixture(scope="module")
def high_zz(ensemble_state):
    """Corrected high-ZZ pairs of the default ensemble: (ham, cr, sqc, sqt, result)."""
    config = DeviceConfig.from_dict(ensemble_state["config"])
    out = []
    for spec in config.pairs:
        if spec.high_zz:
            ham = build_hamiltonian(spec.params)
            cr, sqc, sqt = load_pair_state(ensemble_state["pairs"][spec.label])
            out.append((ham, cr, sqc, sqt, correct_pair(ham, cr, sqc, sqt)))
    assert len(out) == 4
    return out


# -- closed-form angles -------------------------------------------------------------


def test_iz_angle():
    assert iz_correction_angle(EffectiveHamiltonian(), 100.0) == 0.0
    h = EffectiveHamiltonian(omega_iz=0.5 * MHZ)
    assert iz_correction_angle(h, 100.0) == pytest.approx(-0.1 * np.pi, rel=1e-12)


def test_zy_fix_first_order():
    h = EffectiveHamiltonian(omega_zx=MHZ)
    assert zy_phase_fix(h, 0.0) == 0.0
    assert zy_phase_fix(h, 0.3) == pytest.approx(0.15)
    with pytest.raises(UndefinedAngleError):
        zy_phase_fix(EffectiveHamiltonian(), 0.1)


def test_zz_angle():
    assert zz_compensation_angle(EffectiveHamiltonian(omega_zx=MHZ)) == 0.0
    h = EffectiveHamiltonian(omega_zx=MHZ, omega_zz=0.1 * MHZ)
    assert zz_compensation_angle(h) == pytest.approx(np.arctan(0.1), rel=1e-12)
    assert zz_compensation_angle(h) == pytest.approx(0.0997, abs=1e-4)
    with pytest.raises(UndefinedAngleError):
        zz_compensation_angle(EffectiveHamiltonian(omega_zz=MHZ))


def test_rescale_factor(clean_pair):
    assert rescale_factor(EffectiveHamiltonian(omega_zx=MHZ)) == 1.0
    assert rescale_factor(EffectiveHamiltonian(omega_zx=MHZ, omega_zz=MHZ)) == pytest.approx(1 / np.sqrt(2))
    cfg = rescale_zx_amplitude(clean_pair.cr, EffectiveHamiltonian(omega_zx=MHZ, omega_zz=MHZ))
    assert cfg.corrections.zx_rescale == pytest.approx(1 / np.sqrt(2))
    assert cfg.cr_amplitude == clean_pair.cr.cr_amplitude


def test_gain_rule():
    assert zz_compensation_warranted(2e-3, 1e-3)
    assert not zz_compensation_warranted(1.4e-3, 1e-3)


def test_y_pulse_cost(clean_pair):
    """Four extra 20 ns target pulses at median coherence cost roughly 0.1 %."""
    cost = y_pulse_cost(clean_pair.ham, clean_pair.cr, clean_pair.sqc, clean_pair.sqt)
    assert 5e-4 < cost < 1.5e-3


@pytest.mark.parametrize("theta", [0.0, 0.3, -0.7, 1.2])
def test_zz_conjugation_identity(theta):
    """Target Y rotation turns ZX into a ZX/ZZ mixture on the qubit subspace."""
    iy, zx, zz = (hilbert.pauli_word(w) for w in ("IY", "ZX", "ZZ"))
    u = expm(-0.5j * theta * iy)
    lhs = u @ zx @ u.conj().T
    rhs = np.cos(theta) * zx - np.sin(theta) * zz
    assert np.max(np.abs(lhs - rhs)) < 1e-10


# -- closed loop on the simulator ----------------------------------------------------------


def test_bch_slope(clean_pair):
    """Small theta_c tilts the segment axis: d(ZY)/d(theta_c) = ZX / 2."""
    ham, cr, sqt = clean_pair.ham, clean_pair.cr, clean_pair.sqt
    h0, _ = segment_hamiltonian(ham, cr, +1, True, sqt)
    thetas = np.array([0.01, 0.02, 0.04])
    zy = [segment_hamiltonian(ham, cr.with_corrections(theta_c=float(t)), +1, True, sqt)[0].omega_zy
          for t in thetas]
    slope = np.polyfit(thetas, np.array(zy) - h0.omega_zy, 1)[0]
    assert slope == pytest.approx(h0.omega_zx / 2, rel=0.1)


def test_zy_fix_closed_loop(clean_pair):
    ham, cr, sqt = clean_pair.ham, clean_pair.cr, clean_pair.sqt
    trial = cr.with_corrections(theta_c=0.1)
    h, _ = segment_hamiltonian(ham, trial, +1, True, sqt)
    assert abs(h.omega_zy) > 0.02 * abs(h.omega_zx)
    fix = zy_phase_fix(h, 0.1, ham, trial, sqt)
    h, _ = segment_hamiltonian(ham, trial.with_corrections(zy_phase_fix=fix), +1, True, sqt)
    assert abs(h.omega_zy) < 0.01 * abs(h.omega_zx)


def test_iz_correction_on_clean_pair(clean_pair):
    res = correct_pair(clean_pair.ham, clean_pair.cr, clean_pair.sqc, clean_pair.sqt)
    assert res.before["iz"] > 1e-3
    assert res.after["iz"] < 1e-3
    cost = y_pulse_cost(clean_pair.ham, clean_pair.cr, clean_pair.sqc, clean_pair.sqt)
    assert res.zz_applied == zz_compensation_warranted(res.before["zz"], cost)


def test_high_zz_pairs_compensated(high_zz):
    for *_, res in high_zz:
        h, t = res.h_plus, res.segment_duration
        assert res.zz_applied
        assert abs(h.omega_zz) < 0.01 * abs(h.omega_zx)
        assert h.conditional_angle(t) == pytest.approx(np.pi / 4, rel=5e-3)
        assert 0 < res.cfg.corrections.zx_rescale < 1


def test_correction_is_idempotent(high_zz):
    for ham, _, sqc, sqt, res in high_zz:
        again = correct_pair(ham, res.cfg, sqc, sqt)
        first, second = asdict(res.cfg.corrections), asdict(again.cfg.corrections)
        for key, value in first.items():
            assert abs(second[key] - value) <= 0.05 * abs(value)


def test_corrections_never_hurt(high_zz):
    for ham, cr, sqc, sqt, res in high_zz:
        assert ecr_infidelity(ham, res.cfg, sqc, sqt, True) < ecr_infidelity(ham, cr, sqc, sqt, False)


def test_forced_zz_off(high_zz):
    ham, cr, sqc, sqt, _ = high_zz[0]
    res = correct_pair(ham, cr, sqc, sqt, zz=False)
    assert not res.zz_applied and res.cfg.corrections.y_comp_angle == 0.0
    assert res.after["iz"] < 1e-3
