"""Incoherent error model, per-pair error budgets and before/after ensemble statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COMPONENTS = ("incoherent", "iz", "zz", "leakage", "unexplained")
KNOWN = COMPONENTS[:-1]


class EpochError(ValueError):
    """Budget inputs come from different device-state snapshots."""


class PairSetMismatchError(ValueError):
    """Before/after ensembles do not cover the same pairs."""


def qubit_fidelity(t1_us: float, t2_us: float, duration_ns: float) -> float:
    """Average fidelity of the idle channel of one qubit (amplitude damping plus dephasing)."""
    if t1_us <= 0 or t2_us <= 0:
        raise ValueError("coherence times must be positive")
    if t2_us > 2 * t1_us + 1e-12:
        raise ValueError("T2 cannot exceed 2 T1")
    t = duration_ns * 1e-3
    return (3 + np.exp(-t / t1_us) + 2 * np.exp(-t / t2_us)) / 6


def incoherent_epg(t1_c: float, t2e_c: float, t1_t: float, t2e_t: float, gate_duration: float) -> float:
    """1 - F_c F_t for coherence times in us and a gate duration in ns."""
    if gate_duration < 0:
        raise ValueError("gate duration must be non-negative")
    return float(1 - qubit_fidelity(t1_c, t2e_c, gate_duration) * qubit_fidelity(t1_t, t2e_t, gate_duration))


@dataclass
class ErrorBudget:
    pair: str
    components: dict
    irb_epg: float
    irb_uncertainty: float = 0.0
    suppressed: bool = False
    unexplained_raw: float = 0.0
    snapshot: str = ""

    def __post_init__(self):
        missing = set(COMPONENTS) - set(self.components)
        if missing:
            raise ValueError(f"budget lacks components {sorted(missing)}")
        if any(v < 0 for v in self.components.values()):
            raise ValueError("budget components must be non-negative")

    @property
    def known(self) -> float:
        return float(sum(self.components[k] for k in KNOWN))

    @property
    def incoherent_fraction(self) -> float:
        return self.components["incoherent"] / self.known if self.known > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "pair": self.pair, "components": dict(self.components), "irb_epg": self.irb_epg,
            "irb_uncertainty": self.irb_uncertainty, "suppressed": self.suppressed,
            "unexplained_raw": self.unexplained_raw, "snapshot": self.snapshot, "units": "probability",
        }

    @classmethod
    def from_dict(cls, d: dict) -> ErrorBudget:
        return cls(**{k: v for k, v in d.items() if k != "units"})


def assemble_budget(
    pair: str,
    term_epgs: dict,
    leakage_rate: float,
    incoherent: float,
    irb_epg: float,
    irb_uncertainty: float = 0.0,
    suppressed: bool = False,
    snapshots: tuple[str, ...] = (),
) -> ErrorBudget:
    """Combine the known error sources with a measured IRB EPG.

    ``leakage_rate`` is per ZX(pi/4) segment; the gate has two, so it is
    doubled.  Every entry of ``snapshots`` must agree.
    """
    if len(set(snapshots)) > 1:
        raise EpochError(f"inputs from different snapshots: {sorted(set(snapshots))}")
    comps = {
        "incoherent": float(incoherent),
        "iz": float(term_epgs.get("iz", 0.0)),
        "zz": float(term_epgs.get("zz", 0.0)),
        "leakage": 2.0 * float(leakage_rate),
    }
    raw = float(irb_epg) - sum(comps.values())
    comps["unexplained"] = max(raw, 0.0)
    return ErrorBudget(pair, comps, float(irb_epg), float(irb_uncertainty), suppressed, raw,
                       snapshots[0] if snapshots else "")


@dataclass
class Comparison:
    pairs: list
    before: np.ndarray
    after: np.ndarray
    ratios: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ratios = self.before / np.maximum(self.after, 1e-12)

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))

    def summary(self) -> dict:
        return {
            "median_before": float(np.median(self.before)), "median_after": float(np.median(self.after)),
            "mean_before": float(np.mean(self.before)), "mean_after": float(np.mean(self.after)),
            "median_ratio": self.median_ratio, "ratio_of_medians": float(np.median(self.before) / np.median(self.after)),
            "best_before": float(np.min(self.before)), "best_after": float(np.min(self.after)),
            "per_pair": {p: float(r) for p, r in zip(self.pairs, self.ratios)},
        }

    def cumulative(self) -> dict:
        """Sorted EPGs with empirical CDF levels for both ensembles."""
        n = len(self.pairs)
        levels = (np.arange(n) + 1) / n
        return {"before": (np.sort(self.before), levels), "after": (np.sort(self.after), levels)}


def compare_before_after(naive: list[ErrorBudget], corrected: list[ErrorBudget]) -> Comparison:
    a = {b.pair: b for b in naive}
    c = {b.pair: b for b in corrected}
    if set(a) != set(c) or len(a) != len(naive) or len(c) != len(corrected):
        raise PairSetMismatchError("before and after ensembles cover different pairs")
    pairs = [b.pair for b in naive]
    return Comparison(pairs, np.array([a[p].irb_epg for p in pairs]), np.array([c[p].irb_epg for p in pairs]))
