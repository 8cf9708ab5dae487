from __future__ import annotations

import warnings
from dataclasses import replace

import numpy as np
import pytest

from ecrbudget import leakage
from ecrbudget.calibration import conditional_angle, cr_detuning
from ecrbudget.dynamics import build_hamiltonian
from ecrbudget.gates import CRPulseConfig
from ecrbudget.leakage import (
    LeakageReport,
    LeakageScan,
    RateSaturationError,
    UnclassifiedPatternError,
    classify_leakage,
    default_phis,
    estimate_leakage_rate,
    find_peaks,
    fit_rate,
    rate_from_peak,
    run_amplification,
    stretch,
    suppress_leakage,
)

from conftest import SCENARIOS, calibrated, leakage_scenario, make_pair

PHIS = default_phis()


def bump(center: float, height: float, width: float = 0.15) -> np.ndarray:
    d = np.angle(np.exp(1j * (PHIS - center)))
    return height * np.exp(-0.5 * (d / width) ** 2)


def scan(control: int, p2=None, flip=None, n: int = 12) -> LeakageScan:
    zero = np.zeros_like(PHIS)
    return LeakageScan(PHIS, n, control, zero if p2 is None else p2, zero if flip is None else flip)


# -- amplification experiment -----------------------------------------------------------


def test_zero_amplitude_scans_are_flat(clean_pair):
    cfg = replace(clean_pair.cr, cr_amplitude=0.0, cancel_amplitude=0.0)
    for c in (0, 1):
        s = run_amplification(clean_pair.ham, cfg, 8, control_init=c)
        assert np.max(s.p2) < 1e-12 and np.max(s.p_flip) < 1e-12


def test_near_12_collision_gives_single_peak():
    """CR tone 5 MHz from the control 1-2 transition (weak, uncalibrated pulse)."""
    ham = build_hamiltonian(make_pair(177.0))
    cfg = CRPulseConfig(0.005, 0.0, 100.0, cr_detuning(ham))
    s1 = run_amplification(ham, cfg, 4, control_init=1)
    s0 = run_amplification(ham, cfg, 4, control_init=0)
    assert len(find_peaks(s1.p2)) == 1
    assert s1.p2.max() > 0.05
    assert find_peaks(s0.p2) == [] and s0.p2.max() < 1e-6


def test_peak_grows_quadratically_with_repetitions():
    c = calibrated(136.0)
    with pytest.warns(UserWarning):
        p2 = run_amplification(c.ham, c.cr, 2, control_init=1).p2.max()
    p4 = run_amplification(c.ham, c.cr, 4, control_init=1).p2.max()
    assert p4 / p2 == pytest.approx(4.0, rel=0.3)


def test_amplification_input_checks(clean_pair):
    with pytest.raises(ValueError):
        run_amplification(clean_pair.ham, clean_pair.cr, 0)
    with pytest.warns(UserWarning):
        run_amplification(clean_pair.ham, clean_pair.cr, 2)


def test_scan_validation():
    with pytest.raises(ValueError):
        LeakageScan(PHIS[::-1], 12, 0, np.zeros(48), np.zeros(48))
    with pytest.raises(ValueError):
        LeakageScan(PHIS, 12, 0, np.full(48, 1.5), np.zeros(48))


# -- classification -------------------------------------------------------------------------


def test_flat_scans_give_empty_report():
    assert classify_leakage(scan(0), scan(1)).rates == {}


def test_synthetic_two_photon():
    p2 = bump(1.0, 0.1) + bump(1.0 + np.pi, 0.1)
    report = classify_leakage(scan(0, p2=p2), scan(1))
    assert report.detected == {"L02_2"}
    a, b = report.peak_phis["L02_2"]
    assert abs(abs(np.angle(np.exp(1j * (a - b)))) - np.pi) < 0.2


def test_synthetic_01_leakage():
    report = classify_leakage(scan(0, flip=bump(2.0, 0.08)), scan(1, flip=bump(2.0, 0.08)))
    assert report.detected == {"L01"}


def test_synthetic_12_leakage():
    assert classify_leakage(scan(0), scan(1, p2=bump(4.0, 0.2))).detected == {"L12"}


def test_synthetic_mixture():
    p2 = bump(1.0, 0.1) + bump(1.0 + np.pi, 0.1)
    report = classify_leakage(scan(0, p2=p2), scan(1, p2=bump(3.0, 0.05)))
    assert report.detected == {"L02_2", "L12"}


def test_unmatched_peaks_raise():
    # a single |2> peak for control |0> matches no rule
    with pytest.raises(UnclassifiedPatternError) as err:
        classify_leakage(scan(0, p2=bump(1.0, 0.2)), scan(1))
    assert len(err.value.scans) == 2


def test_mismatched_scans_rejected():
    with pytest.raises(ValueError):
        classify_leakage(scan(0), scan(1, n=8))
    with pytest.raises(ValueError):
        classify_leakage(scan(1), scan(0))


def test_report_invariants():
    with pytest.raises(ValueError):
        LeakageReport({"L12": -1e-3})
    with pytest.raises(ValueError):
        LeakageReport({"L02_2": 1e-3}, {"L02_2": [0.0, 1.0]})
    r = LeakageReport({"L12": 2e-3, "L01": 1e-3})
    assert r.dominant() == "L12" and r.total == pytest.approx(3e-3)
    assert LeakageReport.from_dict(r.to_dict()) == r


# -- rate estimation --------------------------------------------------------------------------


def test_injected_rate_is_recovered():
    p, n = 1e-3, 10
    peak = np.sin(n * np.arcsin(np.sqrt(p))) ** 2
    assert peak == pytest.approx(0.1, rel=0.05)
    s = scan(1, p2=bump(2.0, peak), n=n)
    assert estimate_leakage_rate(s) == pytest.approx(p, rel=0.2)
    assert estimate_leakage_rate(s, phi=2.0) == pytest.approx(p, rel=0.2)


def test_small_peak_limit():
    assert rate_from_peak(0.05, 12) == pytest.approx(0.05 / 144, rel=0.02)


def test_zero_peak_zero_rate():
    assert rate_from_peak(0.0, 12) == 0.0
    assert estimate_leakage_rate(scan(1)) == 0.0


def test_saturation_raises():
    with pytest.raises(RateSaturationError):
        rate_from_peak(0.95, 12)
    with pytest.raises(RateSaturationError):
        fit_rate([4, 8], [0.3, 0.95])


def test_fit_rate_on_coherent_sweep():
    theta = 2 * np.arcsin(np.sqrt(4e-3))
    ns = np.array([1, 2, 4, 8])
    assert fit_rate(ns, np.sin(ns * theta / 2) ** 2) == pytest.approx(4e-3, rel=1e-9)


def test_peak_detector_floor():
    flat = 1e-6 * np.random.default_rng(0).normal(size=48) ** 2
    assert find_peaks(flat) == []
    assert find_peaks(flat + bump(3.0, 0.05)) == [int(np.argmin(np.abs(PHIS - 3.0)))]


# -- scenarios and suppression ---------------------------------------------------------------


@pytest.mark.parametrize("detuning", sorted(SCENARIOS))
def test_scenario_classification(detuning):
    sc = leakage_scenario(detuning)
    assert sc.report.detected == SCENARIOS[detuning]


@pytest.mark.parametrize("detuning", sorted(SCENARIOS))
def test_scenario_suppression(detuning):
    sc = leakage_scenario(detuning)
    assert sc.total_after < 1e-3
    assert sc.total_after < sc.total_before


def test_two_photon_scan_is_pi_periodic():
    p2 = leakage_scenario(80.0).scans[0].p2
    assert np.max(np.abs(p2 - np.roll(p2, len(p2) // 2))) < leakage.PEAK_FLOOR


@pytest.mark.parametrize("detuning", [40.0, 136.0, 142.0])
def test_drag_sweep_is_unimodal(detuning):
    sweep = leakage_scenario(detuning).suppression.sweep
    assert sweep, "single-type scenarios take the DRAG path"
    residuals = np.array([r for _, r in sweep])
    k = int(np.argmin(residuals))
    assert np.all(np.diff(residuals[: k + 1]) <= 0)
    assert np.all(np.diff(residuals[k:]) >= 0)


def test_no_leakage_returns_config_unchanged(clean_pair):
    out = suppress_leakage(clean_pair.ham, clean_pair.cr, LeakageReport())
    assert out.cfg == clean_pair.cr and out.path == "none"


def test_stretch_preserves_angle():
    c = calibrated(80.0)
    st = stretch(c.ham, c.cr, 1.15)
    assert st.cr_flat >= 1.15 * c.cr.cr_flat
    assert conditional_angle(c.ham, st) == pytest.approx(np.pi / 4, rel=5e-3)
    area = leakage._ramp_area(c.cr)
    expect = c.cr.cr_amplitude * (c.cr.cr_flat + area) / (st.cr_flat + area)
    assert st.cr_amplitude == pytest.approx(expect, rel=0.05)


def test_transition_alpha_signs():
    c = calibrated(136.0)
    a01 = leakage.transition_alpha(c.ham, c.cr, "L01")
    a12 = leakage.transition_alpha(c.ham, c.cr, "L12")
    a02 = leakage.transition_alpha(c.ham, c.cr, "L02_2")
    # the tone (at the target) sits below the control 0-1 line and above its 1-2 line
    assert a12 < 0 < a01
    with pytest.raises(ValueError):
        leakage.transition_alpha(c.ham, c.cr, "L03")
    assert np.isfinite(a02)


def test_scan_serialization(clean_pair):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = run_amplification(clean_pair.ham, clean_pair.cr, 4)
    back = LeakageScan.from_dict(s.to_dict())
    assert np.array_equal(back.p2, s.p2) and back.n_reps == 4
