from __future__ import annotations

import math

import numpy as np
import pytest

from ecrbudget.budget import (
    COMPONENTS,
    EpochError,
    ErrorBudget,
    PairSetMismatchError,
    assemble_budget,
    compare_before_after,
    incoherent_epg,
)

T1, T2E = 69.0, 103.0


def median_epg(duration: float) -> float:
    return incoherent_epg(T1, T2E, T1, T2E, duration)


def test_zero_duration_is_error_free():
    assert median_epg(0.0) == 0.0


def test_median_coherence_at_350ns():
    t = 0.35
    f = (3 + math.exp(-t / T1) + 2 * math.exp(-t / T2E)) / 6
    assert median_epg(350.0) == pytest.approx(1 - f * f, rel=1e-12)
    assert median_epg(350.0) == pytest.approx(0.0040, abs=2e-4)
    # first order: 2 (t/T1 + 2 t/T2) / 6
    assert median_epg(350.0) == pytest.approx(2 * (t / T1 + 2 * t / T2E) / 6, rel=0.01)


def test_monotonicity():
    durations = np.linspace(100, 600, 11)
    assert np.all(np.diff([median_epg(d) for d in durations]) > 0)
    base = incoherent_epg(T1, T2E, T1, T2E, 300.0)
    for i in range(4):
        args = [T1, T2E, T1, T2E]
        args[i] *= 1.2
        if args[1] > 2 * args[0] or args[3] > 2 * args[2]:
            continue
        assert incoherent_epg(*args, 300.0) < base


def test_bad_coherence_rejected():
    with pytest.raises(ValueError):
        incoherent_epg(10.0, 25.0, T1, T2E, 300.0)
    with pytest.raises(ValueError):
        incoherent_epg(0.0, 1.0, T1, T2E, 300.0)
    with pytest.raises(ValueError):
        median_epg(-1.0)


def test_zero_budget():
    b = assemble_budget("p", {"iz": 0.0, "zz": 0.0}, 0.0, 0.0, 0.0)
    assert all(v == 0.0 for v in b.components.values())
    assert b.unexplained_raw == 0.0


def test_leakage_is_doubled():
    b = assemble_budget("p", {}, 3e-4, 0.0, 0.01)
    assert b.components["leakage"] == pytest.approx(6e-4)


def test_additivity():
    b = assemble_budget("p", {"iz": 1e-3, "zz": 5e-4}, 2e-4, 4e-3, 0.02, 1e-3, True, ("abc", "abc"))
    assert b.known + b.unexplained_raw == pytest.approx(b.irb_epg, abs=1e-15)
    assert b.components["unexplained"] == b.unexplained_raw > 0
    assert b.snapshot == "abc" and b.suppressed


def test_negative_unexplained_is_floored():
    b = assemble_budget("p", {"iz": 1e-3}, 0.0, 4e-3, 3e-3)
    assert b.components["unexplained"] == 0.0
    assert b.unexplained_raw == pytest.approx(-2e-3)
    assert b.known + b.unexplained_raw == pytest.approx(b.irb_epg, abs=1e-15)


def test_epoch_mismatch():
    with pytest.raises(EpochError):
        assemble_budget("p", {}, 0.0, 0.0, 0.01, snapshots=("a", "b"))


def test_budget_validation_and_round_trip():
    with pytest.raises(ValueError):
        ErrorBudget("p", {"iz": 0.0}, 0.0)
    with pytest.raises(ValueError):
        ErrorBudget("p", {k: -1e-3 if k == "zz" else 0.0 for k in COMPONENTS}, 0.0)
    b = assemble_budget("p", {"iz": 1e-3, "zz": 5e-4}, 2e-4, 4e-3, 0.02)
    assert ErrorBudget.from_dict(b.to_dict()) == b
    assert b.incoherent_fraction == pytest.approx(4e-3 / b.known)


def budgets(epgs, suppressed=False):
    return [assemble_budget(f"p{i}", {}, 0.0, 0.0, e, suppressed=suppressed) for i, e in enumerate(epgs)]


def test_identical_ensembles():
    c = compare_before_after(budgets([0.01, 0.02, 0.03]), budgets([0.01, 0.02, 0.03]))
    assert np.allclose(c.ratios, 1.0) and c.median_ratio == 1.0


def test_comparison_statistics():
    c = compare_before_after(budgets([0.04, 0.05, 0.03]), budgets([0.01, 0.01, 0.02]))
    s = c.summary()
    assert s["median_ratio"] == pytest.approx(4.0)
    assert s["best_after"] < s["best_before"]
    xs, levels = c.cumulative()["before"]
    assert list(xs) == [0.03, 0.04, 0.05] and levels[-1] == 1.0


def test_pair_set_mismatch():
    with pytest.raises(PairSetMismatchError):
        compare_before_after(budgets([0.01, 0.02]), budgets([0.01]))
