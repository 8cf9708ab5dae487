from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass

import pytest

from ecrbudget import device, leakage, pipeline
from ecrbudget.calibration import calibrate_cr, calibrate_sx
from ecrbudget.dynamics import PairParams, TransmonParams, build_hamiltonian

MEDIAN_T1, MEDIAN_T2E, ALPHA = 69.0, 103.0, -182.0


def make_pair(detuning: float, coupling: float = 2.7, f_target: float = 4.3, label: str | None = None,
              alpha: float = ALPHA, t1: float = MEDIAN_T1, t2e: float = MEDIAN_T2E) -> PairParams:
    """Control above the target by ``detuning`` MHz; median device coherence otherwise."""
    return PairParams(
        TransmonParams(f_target + detuning * 1e-3, alpha, t1, t2e),
        TransmonParams(f_target, alpha, t1, t2e),
        coupling,
        label or f"d{detuning:g}-j{coupling:g}",
    )


class Calibrated:
    """A pair with its Hamiltonian and calibrated gates, built once per session."""

    def __init__(self, pair: PairParams):
        self.pair = pair
        self.ham = build_hamiltonian(pair)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.sqc = calibrate_sx(self.ham, "control")
            self.sqt = calibrate_sx(self.ham, "target")
            self.cr = calibrate_cr(self.ham)


_CACHE: dict = {}


def calibrated(detuning: float, coupling: float = 2.7) -> Calibrated:
    key = (detuning, coupling)
    if key not in _CACHE:
        _CACHE[key] = Calibrated(make_pair(detuning, coupling))
    return _CACHE[key]


@dataclass
class LeakageScenario:
    """A collision pair characterized, suppressed and characterized again."""

    detuning: float
    cal: Calibrated
    scans: tuple
    report: leakage.LeakageReport
    total_before: float
    suppression: leakage.SuppressionResult
    after_scans: tuple
    after_report: leakage.LeakageReport
    total_after: float
    type_rates_after: dict
    seconds: float


_SCENARIOS: dict = {}


def leakage_scenario(detuning: float) -> LeakageScenario:
    if detuning not in _SCENARIOS:
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cal = Calibrated(make_pair(detuning))
            s0, s1, report, total = leakage.characterize(cal.ham, cal.cr)
            sup = leakage.suppress_leakage(cal.ham, cal.cr, report)
            a0, a1, after, total_after = leakage.characterize(cal.ham, sup.cfg)
        rates = leakage.type_rates(cal.ham, sup.cfg)
        _SCENARIOS[detuning] = LeakageScenario(detuning, cal, (s0, s1), report, total, sup, (a0, a1), after,
                                               total_after, rates, time.perf_counter() - start)
    return _SCENARIOS[detuning]


# collision scenarios: detuning (MHz) -> injected leakage types
SCENARIOS = {
    40.0: {"L01"},
    80.0: {"L02_2"},
    136.0: {"L12"},
    142.0: {"L12"},
    100.0: {"L02_2", "L12"},
}


@pytest.fixture(scope="session")
def clean_pair() -> Calibrated:
    """Well-detuned pair without frequency collisions (Δ = 105 MHz)."""
    return calibrated(105.0)


# wall-clock seconds of the session-wide ensemble runs
TIMINGS: dict = {}


@pytest.fixture(scope="session")
def ensemble_state():
    start = time.perf_counter()
    state = pipeline.calibrate_device(device.default_ensemble(), workers=os.cpu_count() or 1)
    TIMINGS["calibrate"] = time.perf_counter() - start
    return state


@pytest.fixture(scope="session")
def ensemble_results(ensemble_state):
    """The default ensemble, naive and suppressed, in exact-expectation mode."""
    start = time.perf_counter()
    doc = pipeline.run_pipeline(ensemble_state, suppress=True, exact=True, workers=os.cpu_count() or 1)
    TIMINGS["pipeline"] = time.perf_counter() - start
    return doc


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
