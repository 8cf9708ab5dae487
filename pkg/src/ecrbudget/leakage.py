"""Control-leakage amplification, classification, rate estimation and suppression.

The amplification unit is one ZX(pi/4) CR segment followed by a virtual
``Z(phi)`` on the control.  Repeating it ``n`` times adds the leakage
amplitudes of consecutive pulses coherently when ``phi`` cancels their
relative phase, so a per-pulse probability ``p`` shows up as a peak of height
``sin^2(n asin(sqrt p))``.

Leakage types, named after the control transition hit by the CR tone:

* ``L01``: 0-1 (computational flips, peaks coincide for both control states);
* ``L12``: 1-2 (single peak in the ``|2>`` population for control ``|1>``);
* ``L02_2``: two-photon 0-2 (two peaks pi apart for control ``|0>``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import hilbert
from .calibration import CalibrationError, calibrate_cr, cr_detuning
from .dynamics import PairHamiltonian, TWO_PI
from .gates import CRPulseConfig, cr_segment
from .pulses import drag_alpha

TYPES = ("L01", "L12", "L02_2")
DEFAULT_REPS = 12
DEFAULT_PHIS = 48
PEAK_FLOOR = 1e-2  # minimum peak height above the median
SATURATION = 0.9
COHERENT_LIMIT = 0.5
REP_SWEEP = (1, 2, 4, 8, 12)
TARGET_RATE = 1e-3
SINGLE_TYPE_GOAL = 2e-4
SWEEP_SPAN = 0.3
SWEEP_STEPS = 13
STRETCHES = tuple(np.round(np.arange(1.06, 1.405, 0.03), 2))


class UnclassifiedPatternError(RuntimeError):
    def __init__(self, message: str, scans):
        super().__init__(message)
        self.scans = scans


class RateSaturationError(RuntimeError):
    """Peak population too close to 1; rerun with fewer repetitions."""


class SuppressionError(RuntimeError):
    def __init__(self, message: str, residual: float, cfg: CRPulseConfig | None = None):
        super().__init__(message)
        self.residual = residual
        self.cfg = cfg


def default_phis(n: int = DEFAULT_PHIS) -> np.ndarray:
    return np.arange(n) * TWO_PI / n


@dataclass(frozen=True, eq=False)
class LeakageScan:
    phis: np.ndarray
    n_reps: int
    control_init: int
    p2: np.ndarray
    p_flip: np.ndarray

    def __post_init__(self):
        phis = np.asarray(self.phis, dtype=float)
        if np.any(np.diff(phis) <= 0):
            raise ValueError("phis must be sorted and distinct")
        for arr in (self.p2, self.p_flip):
            if np.any(np.asarray(arr) < -1e-9) or np.any(np.asarray(arr) > 1 + 1e-9):
                raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "p2", np.clip(np.asarray(self.p2, float), 0, 1))
        object.__setattr__(self, "p_flip", np.clip(np.asarray(self.p_flip, float), 0, 1))

    def signal(self, name: str) -> np.ndarray:
        return {"p2": self.p2, "p_flip": self.p_flip}[name]

    def to_dict(self) -> dict:
        return {
            "phis_rad": self.phis.tolist(),
            "n_reps": self.n_reps,
            "control_init": self.control_init,
            "p2": self.p2.tolist(),
            "p_flip": self.p_flip.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> LeakageScan:
        return cls(np.array(d["phis_rad"]), d["n_reps"], d["control_init"], np.array(d["p2"]),
                   np.array(d["p_flip"]))


@dataclass(frozen=True)
class LeakageReport:
    rates: dict = field(default_factory=dict)  # type -> probability per ZX(pi/4)
    peak_phis: dict = field(default_factory=dict)  # type -> list of radians

    def __post_init__(self):
        for k, v in self.rates.items():
            if k not in TYPES:
                raise ValueError(f"unknown leakage type {k!r}")
            if v < 0:
                raise ValueError("leakage rates must be non-negative")
        if "L02_2" in self.peak_phis and len(self.peak_phis["L02_2"]) == 2:
            a, b = self.peak_phis["L02_2"]
            if abs(abs(_wrap(a - b)) - np.pi) > 0.5:
                raise ValueError("two-photon peaks must be separated by pi")

    @property
    def detected(self) -> set:
        return set(self.rates)

    @property
    def total(self) -> float:
        return float(sum(self.rates.values()))

    def dominant(self) -> str | None:
        return max(self.rates, key=self.rates.get) if self.rates else None

    def to_dict(self) -> dict:
        return {"rates": dict(self.rates), "peak_phis_rad": {k: list(v) for k, v in self.peak_phis.items()},
                "units": "probability per ZX(pi/4) pulse"}

    @classmethod
    def from_dict(cls, d: dict) -> LeakageReport:
        return cls(dict(d["rates"]), {k: list(v) for k, v in d["peak_phis_rad"].items()})


def _wrap(x):
    return (np.asarray(x) + np.pi) % TWO_PI - np.pi


# -- experiment ------------------------------------------------------------------


def _signals(w: np.ndarray, control_init: int) -> tuple[float, float]:
    """Average |2> and flipped-control populations over target preparations |0>, |1>."""
    p2 = flip = 0.0
    for t in (0, 1):
        col = np.abs(w[:, hilbert.index(control_init, t)]) ** 2
        pops = col.reshape(3, 3).sum(axis=1)
        p2 += pops[2] / 2
        flip += pops[1 - control_init] / 2
    return float(p2), float(flip)


def segment_unitary(ham: PairHamiltonian, cfg: CRPulseConfig) -> np.ndarray:
    return ham.propagate(cr_segment(cfg), cfg.dt)


def scan_from_unitary(u: np.ndarray, ham: PairHamiltonian, n_reps: int, phis, control_init: int) -> LeakageScan:
    p2, flip = [], []
    for phi in phis:
        step = ham.virtual_z_diag("control", phi)[:, None] * u
        w = np.linalg.matrix_power(step, n_reps)
        a, b = _signals(w, control_init)
        p2.append(a)
        flip.append(b)
    return LeakageScan(np.asarray(phis, float), n_reps, control_init, np.array(p2), np.array(flip))


def run_amplification(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    n_reps: int = DEFAULT_REPS,
    phis=None,
    control_init: int = 0,
) -> LeakageScan:
    """Sweep ``phi`` for ``n_reps`` repetitions of [ZX(pi/4) segment, control Z(phi)]."""
    phis = default_phis() if phis is None else np.asarray(phis, float)
    if n_reps < 1:
        raise ValueError("n_reps must be positive")
    if n_reps < 4:
        warnings.warn("fewer than 4 repetitions gives little amplification", stacklevel=2)
    if len(phis) < 24:
        warnings.warn("fewer than 24 phase points may miss peaks", stacklevel=2)
    return scan_from_unitary(segment_unitary(ham, cfg), ham, n_reps, phis, control_init)


# -- analysis --------------------------------------------------------------------


def find_peaks(values: np.ndarray, floor: float = PEAK_FLOOR) -> list[int]:
    """Indices above ``median + max(5 MAD, floor)`` that exceed both circular neighbours."""
    v = np.asarray(values, float)
    med = np.median(v)
    mad = np.median(np.abs(v - med))
    thresh = med + max(5 * mad, floor)
    left, right = np.roll(v, 1), np.roll(v, -1)
    idx = np.flatnonzero((v > thresh) & (v >= left) & (v >= right))
    # plateaus: keep one index per run of equal maxima
    keep = [int(i) for i in idx if not (v[i] == left[i] and (i - 1) % len(v) in idx)]
    return sorted(keep, key=lambda i: -v[i])


def rate_from_peak(p_peak: float, n_reps: int) -> float:
    """Per-pulse probability ``sin^2(theta/2)`` from ``P = sin^2(n theta/2)``."""
    if p_peak > SATURATION:
        raise RateSaturationError(f"peak population {p_peak:.3f} is saturated; use fewer repetitions")
    if p_peak <= 0:
        return 0.0
    return float(np.sin(np.arcsin(np.sqrt(p_peak)) / n_reps) ** 2)


def fit_rate(ns, peaks) -> float:
    """Per-pulse rate from peak heights ``P(n) = sin^2(n theta / 2)`` of a repetition sweep.

    ``theta`` is the median of the per-``n`` inversions, which is robust to the
    loss of coherent build-up at large ``n`` for strong leakage.
    """
    ns = np.asarray(ns, float)
    peaks = np.asarray(peaks, float)
    if np.any(peaks > SATURATION):
        raise RateSaturationError("saturated peak in the repetition sweep")
    thetas = 2 * np.arcsin(np.sqrt(np.clip(peaks, 0, 1))) / ns
    return float(np.sin(np.median(thetas) / 2) ** 2)


def estimate_leakage_rate(scan: LeakageScan, signal: str = "p2", phi: float | None = None) -> float:
    """Per-pulse probability from the peak height (or the value at ``phi``)."""
    v = scan.signal(signal)
    if phi is None:
        p = float(np.max(v))
    else:
        p = float(v[np.argmin(np.abs(_wrap(scan.phis - phi)))])
    return rate_from_peak(p, scan.n_reps)


def _provisional_rate(p: float, n: int) -> float:
    return rate_from_peak(min(p, SATURATION), n)


def classify_leakage(scan0: LeakageScan, scan1: LeakageScan, floor: float = PEAK_FLOOR) -> LeakageReport:
    """Apply the peak rules for the three leakage types to the two control preparations."""
    if scan0.control_init != 0 or scan1.control_init != 1:
        raise ValueError("expected scans for control |0> and |1> in that order")
    if not np.array_equal(scan0.phis, scan1.phis) or scan0.n_reps != scan1.n_reps:
        raise ValueError("scans must share the phase grid and repetition count")
    phis = scan0.phis
    step = TWO_PI / len(phis)
    tol = 1.5 * step
    rates, where = {}, {}
    peaks = {
        ("p2", 0): find_peaks(scan0.p2, floor),
        ("p2", 1): find_peaks(scan1.p2, floor),
        ("p_flip", 0): find_peaks(scan0.p_flip, floor),
        ("p_flip", 1): find_peaks(scan1.p_flip, floor),
    }
    explained = {k: set() for k in peaks}

    # L01: flip peaks at the same phase for both control states
    pairs = [(i, j) for i in peaks[("p_flip", 0)] for j in peaks[("p_flip", 1)]
             if abs(_wrap(phis[i] - phis[j])) <= tol]
    if pairs:
        i, j = pairs[0]
        rates["L01"] = 0.5 * (_provisional_rate(scan0.p_flip[i], scan0.n_reps)
                              + _provisional_rate(scan1.p_flip[j], scan1.n_reps))
        where["L01"] = [float(phis[i])]
        for a, b in pairs:
            explained[("p_flip", 0)].add(a)
            explained[("p_flip", 1)].add(b)

    # L02_2: two |2> peaks pi apart for control |0>
    p0 = peaks[("p2", 0)]
    pi_pairs = [(i, j) for k, i in enumerate(p0) for j in p0[k + 1:]
                if abs(abs(_wrap(phis[i] - phis[j])) - np.pi) <= tol]
    if pi_pairs:
        i, j = pi_pairs[0]
        rates["L02_2"] = _provisional_rate(max(scan0.p2[i], scan0.p2[j]), scan0.n_reps)
        where["L02_2"] = [float(phis[i]), float(phis[j])]
        for a, b in pi_pairs:
            explained[("p2", 0)].update((a, b))

    # L12: a single dominant |2> peak for control |1>
    p1 = peaks[("p2", 1)]
    if p1:
        i = p1[0]
        rates["L12"] = _provisional_rate(scan1.p2[i], scan1.n_reps)
        where["L12"] = [float(phis[i])]
        explained[("p2", 1)].add(i)

    unexplained = {k: [i for i in v if i not in explained[k]] for k, v in peaks.items()}
    if not rates and any(unexplained.values()):
        raise UnclassifiedPatternError(
            f"peaks match no leakage rule: { {f'{s}|{c}': v for (s, c), v in unexplained.items() if v} }",
            (scan0, scan1),
        )
    return LeakageReport(rates, where)


def scan_pair(
    ham: PairHamiltonian, cfg: CRPulseConfig, n_reps: int = DEFAULT_REPS, phis=None, min_reps: int = 4
) -> tuple[LeakageScan, LeakageScan, int]:
    """Both control preparations, halving ``n_reps`` (down to ``min_reps``) while a peak exceeds 1/2.

    Strong leakage amplifies only over a few repetitions because the leaked
    branch dephases from the computational one; scans are kept in the regime
    where peak heights still follow the coherent model.
    """
    phis = default_phis() if phis is None else phis
    u = segment_unitary(ham, cfg)
    n = n_reps
    while True:
        s0 = scan_from_unitary(u, ham, n, phis, 0)
        s1 = scan_from_unitary(u, ham, n, phis, 1)
        peak = max(s0.p2.max(), s1.p2.max(), s0.p_flip.max(), s1.p_flip.max())
        if peak <= COHERENT_LIMIT or n <= min_reps:
            return s0, s1, n
        n = max(min_reps, n // 2)


def rate_sweep(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    signal: str,
    control_init: int,
    reps=REP_SWEEP,
    phis=None,
    u: np.ndarray | None = None,
) -> float:
    """Per-pulse rate fitted to the peak heights of a repetition sweep.

    Only the leading points that grow with ``n`` and stay below 1/2 are
    fitted; beyond that the leaked branch has dephased.
    """
    phis = default_phis() if phis is None else phis
    u = segment_unitary(ham, cfg) if u is None else u
    ns, peaks = [], []
    for n in reps:
        p = float(scan_from_unitary(u, ham, n, phis, control_init).signal(signal).max())
        if peaks and (p <= peaks[-1] or p > COHERENT_LIMIT):
            break
        ns.append(n)
        peaks.append(min(p, SATURATION))
    return fit_rate(ns, peaks)


def characterize(ham: PairHamiltonian, cfg: CRPulseConfig, n_reps: int = DEFAULT_REPS, phis=None):
    """Scans, classified report (rates refined by repetition sweeps) and the total rate."""
    s0, s1, n = scan_pair(ham, cfg, n_reps, phis)
    report = classify_leakage(s0, s1)
    u = segment_unitary(ham, cfg)
    signal_rates = _signal_rates(ham, cfg, phis, u)
    rates = {k: float(np.mean([signal_rates[src] for src in SOURCES[k]])) for k in report.rates}
    report = LeakageReport(rates, report.peak_phis)
    return s0, s1, report, _total(signal_rates)


SOURCES = {"L01": [("p_flip", 0), ("p_flip", 1)], "L12": [("p2", 1)], "L02_2": [("p2", 0)]}


def _signal_rates(ham, cfg, phis, u) -> dict:
    return {(sig, c): rate_sweep(ham, cfg, sig, c, phis=phis, u=u)
            for sig in ("p2", "p_flip") for c in (0, 1)}


def _total(r: dict) -> float:
    return float(r[("p2", 0)] + r[("p2", 1)] + 0.5 * (r[("p_flip", 0)] + r[("p_flip", 1)]))


def total_leakage(ham: PairHamiltonian, cfg: CRPulseConfig, phis=None) -> float:
    """Per-pulse leakage summed over every signal, without peak detection.

    The |2> rates for both control states plus the mean computational-flip
    rate, each fitted from a repetition sweep of its maximum over ``phi``.
    """
    return _total(_signal_rates(ham, cfg, phis, segment_unitary(ham, cfg)))


def type_rates(ham: PairHamiltonian, cfg: CRPulseConfig, phis=None) -> dict:
    """Per-pulse rate of every leakage type from its own signals, detected or not."""
    r = _signal_rates(ham, cfg, phis, segment_unitary(ham, cfg))
    return {k: float(np.mean([r[src] for src in SOURCES[k]])) for k in TYPES}


# -- suppression -----------------------------------------------------------------


def transition_alpha(ham: PairHamiltonian, cfg: CRPulseConfig, kind: str) -> float:
    """DRAG parameter (ns) nulling the CR spectrum at the control transition of ``kind``."""
    f01 = ham.dressed_frequencies[0] / TWO_PI
    f_cr = f01 + cfg.cr_detuning * 1e-3
    anh = ham.pair.control.anharmonicity * 1e-3
    if kind == "L01":
        return drag_alpha(f01, f_cr)
    if kind == "L12":
        return drag_alpha(f01 + anh, f_cr)
    if kind == "L02_2":
        return drag_alpha(f01 + anh / 2, f_cr, two_photon=True)
    raise ValueError(f"unknown leakage type {kind!r}")


@dataclass(frozen=True)
class SuppressionResult:
    cfg: CRPulseConfig
    residual: float
    path: str
    sweep: tuple = ()  # (alpha, residual) pairs of the last DRAG sweep


def _measure_residual(ham, cfg, n_reps, phis) -> float:
    return total_leakage(ham, cfg, phis)


def _drag_path(ham, cfg, kind, n_reps, phis):
    alpha0 = transition_alpha(ham, cfg, kind)
    factors = np.linspace(1 - SWEEP_SPAN, 1 + SWEEP_SPAN, SWEEP_STEPS)
    sweep = [(f * alpha0, _measure_residual(ham, replace(cfg, drag_alpha=f * alpha0), n_reps, phis))
             for f in factors]
    alpha, _ = min(sweep, key=lambda x: x[1])
    out = calibrate_cr(ham, start=replace(cfg, drag_alpha=float(alpha)), rise=cfg.rise)
    return out, _measure_residual(ham, out, n_reps, phis), tuple(sweep)


def stretch(ham: PairHamiltonian, cfg: CRPulseConfig, factor: float) -> CRPulseConfig:
    """Lengthen the flat top by ``factor`` and recalibrate the amplitude for the same angle."""
    flat = float(np.ceil(cfg.cr_flat * factor / 4.0) * 4.0)
    area_old = cfg.cr_flat + _ramp_area(cfg)
    area_new = flat + _ramp_area(cfg)
    start = replace(cfg, cr_flat=flat, cr_amplitude=cfg.cr_amplitude * area_old / area_new,
                    cancel_amplitude=cfg.cancel_amplitude * area_old / area_new)
    return calibrate_cr(ham, start=start, rise=cfg.rise)


def _ramp_area(cfg: CRPulseConfig) -> float:
    """Flat-equivalent length (ns) of both ramps."""
    from .pulses import gaussian_square

    env = gaussian_square(1.0, cfg.sigma, cfg.rise, 0.0, cfg.dt)
    return float(np.sum(env.samples.real) * cfg.dt)


def suppress_leakage(
    ham: PairHamiltonian,
    cfg: CRPulseConfig,
    report: LeakageReport,
    n_reps: int = DEFAULT_REPS,
    phis=None,
    target: float = TARGET_RATE,
) -> SuppressionResult:
    """DRAG (and pulse stretching when two-photon leakage is involved) against detected leakage.

    Single type: DRAG at the transition's analytic parameter, then a +-30 %
    sweep minimizing the re-measured total rate.  If two-photon leakage is
    present (with another type, or alone and DRAG misses the single-type
    goal) the flat top is stretched by 6-40 % (shortest first), rescanned, and any remaining
    type is DRAG-suppressed; the best candidate is kept.
    """
    if not report.rates:
        return SuppressionResult(cfg, 0.0, "none")
    candidates = []
    types = report.detected
    if types == {"L02_2"} or "L02_2" not in types:
        kind = report.dominant() if len(types) > 1 else next(iter(types))
        out, res, sweep = _drag_path(ham, cfg, kind, n_reps, phis)
        candidates.append(SuppressionResult(out, res, f"drag:{kind}", sweep))
    if "L02_2" in types and (len(types) > 1 or candidates[0].residual > SINGLE_TYPE_GOAL):
        for factor in STRETCHES:
            try:
                st = stretch(ham, cfg, factor)
            except CalibrationError:
                continue
            _, _, rep, res = characterize(ham, st, n_reps, phis)
            path = f"stretch:{factor:.2f}"
            sweep = ()
            if rep.rates and res > SINGLE_TYPE_GOAL:
                kind = rep.dominant()
                drag_cfg, drag_res, sweep = _drag_path(ham, st, kind, n_reps, phis)
                if drag_res < res:
                    st, res, path = drag_cfg, drag_res, path + f"+drag:{kind}"
            candidates.append(SuppressionResult(st, res, path, sweep))
            if res <= SINGLE_TYPE_GOAL:
                break
    best = min(candidates, key=lambda c: c.residual)
    if best.residual >= target:
        raise SuppressionError(f"residual leakage {best.residual:.2e} per pulse after suppression",
                               best.residual, best.cfg)
    return best
