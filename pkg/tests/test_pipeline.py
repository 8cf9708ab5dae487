"""End-to-end checks on the default ensemble (exact-expectation RB, run once per session)."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from ecrbudget import device, pipeline, plots
from ecrbudget.budget import COMPONENTS
from ecrbudget.dynamics import PairParams
from ecrbudget.tomography import EffectiveHamiltonian


def after(doc, label):
    return doc["pairs"][label]["suppressed"]


def test_every_pair_processed(ensemble_results):
    assert ensemble_results["failures"] == {}
    assert len(ensemble_results["pairs"]) == 15
    assert Counter(p["cohort"] for p in ensemble_results["pairs"].values()) == {
        "strong": 3, "intermediate": 7, "clean": 5}


def test_naive_gates_carry_coherent_error(ensemble_results):
    iz = [p["naive"]["term_epg"]["iz"] for p in ensemble_results["pairs"].values()]
    zz = [p["naive"]["term_epg"]["zz"] for p in ensemble_results["pairs"].values()]
    assert max(iz) > 0.02
    assert np.mean(zz) < 0.01


def test_collisions_detected_before(ensemble_results):
    strong = [p for p in ensemble_results["pairs"].values() if p["cohort"] == "strong"]
    for p in strong:
        assert p["naive"]["leakage_rate"] > 5e-3


def test_suppressed_components_below_a_tenth_percent(ensemble_results):
    for label, p in ensemble_results["pairs"].items():
        comps = p["suppressed"]["budget"]["components"]
        for key in ("iz", "zz", "leakage"):
            assert comps[key] < 1e-3, (label, key)


def test_high_zz_pairs_after_compensation(ensemble_results):
    high = [k for k, p in ensemble_results["pairs"].items() if p["high_zz"]]
    assert len(high) == 4
    for label in high:
        res = after(ensemble_results, label)
        h = EffectiveHamiltonian.from_dict(res["h_plus"])
        assert res["zz_applied"]
        assert abs(h.omega_zz) < 0.01 * abs(h.omega_zx)
        assert h.conditional_angle(res["segment_ns"]) == pytest.approx(np.pi / 4, rel=5e-3)


def test_before_after_statistics(ensemble_results):
    s = ensemble_results["summary"]
    assert s["median_ratio"] >= 3
    assert s["median_incoherent_fraction_after"] > 0.5
    assert s["best_after"] < s["best_before"]
    assert s["median_unexplained_before"] > 0


def test_budget_additivity(ensemble_results):
    for p in ensemble_results["pairs"].values():
        for mode in ("naive", "suppressed"):
            b = p[mode]["budget"]
            known = sum(b["components"][k] for k in COMPONENTS if k != "unexplained")
            assert known + b["unexplained_raw"] == pytest.approx(b["irb_epg"], abs=1e-15)


def test_incoherent_component_range(ensemble_results):
    for p in ensemble_results["pairs"].values():
        assert 0.002 < p["naive"]["budget"]["components"]["incoherent"] < 0.009
        assert p["suppressed"]["ecr_ns"] >= p["naive"]["ecr_ns"]


def test_report_structure(ensemble_results):
    assert len(plots.budget_rows(ensemble_results)) == 15 * len(COMPONENTS)
    svg = plots.budget_svg(ensemble_results)
    assert len(re.findall(r'<g class="bar-pair"', svg)) == 15
    assert "<polyline" in plots.cumulative_svg(ensemble_results)
    pair = next(iter(ensemble_results["pairs"].values()))
    assert "<polyline" in plots.leakage_svg(pair)
    with pytest.raises(ValueError):
        plots.leakage_svg({})


def test_ideal_pair_sanity():
    """Noise and readout error off: the corrected gate benchmarks below 0.2 %."""
    base = device.default_ensemble().pair("Q25-Q26").params
    big = 1e9
    ideal = PairParams(replace(base.control, t1=big, t2e=big), replace(base.target, t1=big, t2e=big),
                       base.coupling, "ideal")
    cfg = replace(device.single_pair_config(ideal, seed=3), readout=device.ReadoutModel(0.0, 0.9))
    doc = pipeline.run_pipeline(pipeline.calibrate_device(cfg), suppress=True, exact=True)
    b = doc["pairs"]["ideal"]["suppressed"]["budget"]
    assert b["irb_epg"] < 2e-3
    assert b["components"]["incoherent"] < 1e-8
    assert sum(b["components"].values()) < 2e-3
