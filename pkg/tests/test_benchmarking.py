from __future__ import annotations

import numpy as np
import pytest

from ecrbudget import hilbert
from ecrbudget.benchmarking import (
    DepolarizingGateSet,
    IRBResult,
    NegativeEPGWarning,
    SimulatedGateSet,
    epg_from_alphas,
    fit_decay,
    p00_from_populations,
    run_irb,
    run_rb,
)
from ecrbudget.gates import SX, ideal_ecr

LENGTHS = (2, 4, 8, 16, 32)


def irb(alpha_ref: float, alpha_int: float, err: float = 1e-3) -> IRBResult:
    return IRBResult(LENGTHS, [0.9] * 5, [0.0] * 5, [0.9] * 5, [0.0] * 5, alpha_ref, alpha_int, err, err, 30, None)


def ideal_simulated(phase: float = 0.0) -> SimulatedGateSet:
    sx3 = np.eye(3, dtype=complex)
    sx3[:2, :2] = SX
    ecr = hilbert.lift_two_qubit(np.exp(1j * phase) * ideal_ecr())
    ecr[[2, 5, 6, 7, 8], [2, 5, 6, 7, 8]] = 1  # identity on the leaked levels
    return SimulatedGateSet.from_unitaries(np.kron(sx3, np.eye(3)), np.kron(np.eye(3), sx3), ecr, readout_error=0.0)


# -- fitting and EPG -------------------------------------------------------------------


def test_epg_formula():
    assert irb(0.98, 0.98).epg == 0.0
    assert irb(0.98, 0.94).epg == pytest.approx(0.75 * (1 - 0.94 / 0.98))
    assert irb(0.98, 0.94).epg == pytest.approx(0.0306, abs=1e-4)
    assert epg_from_alphas(0.9, 0.9) == 0.0


def test_negative_epg_warns():
    with pytest.warns(NegativeEPGWarning):
        irb(0.94, 0.98, err=1e-4)


def test_alpha_range_enforced():
    with pytest.raises(ValueError):
        irb(1.01, 0.9)


def test_irb_serialization():
    r = irb(0.97, 0.95)
    back = IRBResult.from_dict(r.to_dict())
    assert back == r and back.epg == r.epg


def test_fit_decay_recovers_parameters():
    m = np.array(LENGTHS)
    y = 0.7 * 0.95**m + 0.26
    fit = fit_decay(m, y)
    assert fit.alpha == pytest.approx(0.95, abs=1e-6)
    assert fit.a == pytest.approx(0.7, abs=1e-5) and fit.b == pytest.approx(0.26, abs=1e-5)
    assert fit.residual_rms < 1e-8


# -- depolarizing oracle ------------------------------------------------------------------


def test_noiseless_survival_is_one():
    curve = run_rb(DepolarizingGateSet(), LENGTHS, 5, None)
    assert np.allclose(curve.survival, 1.0)


def test_depolarizing_alpha_exact():
    """With lam per Clifford the survival is 3/4 (1 - lam)^(m+1) + 1/4."""
    curve = run_rb(DepolarizingGateSet(0.02), LENGTHS, 3, None)
    m = np.array(LENGTHS)
    assert np.allclose(curve.mean, 0.75 * 0.98 ** (m + 1) + 0.25, atol=1e-12)
    assert fit_decay(curve.lengths, curve.mean).alpha == pytest.approx(0.98, abs=1e-9)


def test_depolarizing_alpha_with_shots():
    res = run_irb(DepolarizingGateSet(0.02), LENGTHS, 30, 1024, seed=0)
    assert res.alpha_ref == pytest.approx(0.98, abs=0.005)


def test_interleaved_injection_recovered():
    lam_g = 0.03
    res = run_irb(DepolarizingGateSet(0.02, lam_g), LENGTHS, 30, 1024, seed=0)
    assert res.epg == pytest.approx(0.75 * lam_g, rel=0.15)


def test_interleaved_estimator_is_unbiased():
    """Across seeds the shot-limited estimate scatters by about 8 % around 0.75 lam_g."""
    lam_g = 0.03
    ratios = np.array([run_irb(DepolarizingGateSet(0.02, lam_g), LENGTHS, 30, 1024, seed=s).epg / (0.75 * lam_g)
                       for s in range(12)])
    assert np.median(ratios) == pytest.approx(1.0, abs=0.05)
    assert np.mean(np.abs(ratios - 1) < 0.15) >= 0.8


def test_irb_is_deterministic():
    gs = DepolarizingGateSet(0.01, 0.02)
    a = run_irb(gs, LENGTHS, 5, 256, seed=3)
    b = run_irb(gs, LENGTHS, 5, 256, seed=3)
    assert a.to_dict() == b.to_dict()
    assert run_irb(gs, LENGTHS, 5, 256, seed=4).to_dict() != a.to_dict()


def test_rb_input_checks():
    with pytest.raises(ValueError):
        run_rb(DepolarizingGateSet(), (2, 4), 2, None)
    with pytest.raises(ValueError):
        DepolarizingGateSet(1.5)


# -- readout and the pulse-level gate set --------------------------------------------------------


def test_readout_model():
    pops = np.zeros((3, 3))
    pops[0, 0] = 1
    assert p00_from_populations(pops, 0.04) == pytest.approx(0.96**2)
    pops = np.zeros((3, 3))
    pops[2, 0] = 1  # leaked control reads 1 with probability 0.9
    assert p00_from_populations(pops, 0.0) == pytest.approx(0.1)
    assert p00_from_populations(pops, 0.0, leak_as_one=1.0) == 0.0


def test_ideal_simulated_gates_survive():
    curve = run_rb(ideal_simulated(), (1, 2, 4), 4, None, interleave=True)
    assert np.allclose(curve.survival, 1.0, atol=1e-9)


def test_global_phase_invariance():
    a = run_rb(ideal_simulated(), (1, 2, 4), 4, None, interleave=True)
    b = run_rb(ideal_simulated(0.7), (1, 2, 4), 4, None, interleave=True)
    assert np.allclose(a.survival, b.survival, atol=1e-12)
