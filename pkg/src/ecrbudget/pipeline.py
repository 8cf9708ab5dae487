"""Per-pair orchestration: calibrate, characterize, suppress, benchmark and budget.

Each stage works on one pair; failures are recorded against that pair and
never touch the others.  Random streams are derived from the configuration
seed and the pair's position, so results do not depend on execution order or
parallelism.
"""

from __future__ import annotations

import logging
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import io
from .benchmarking import SimulatedGateSet, run_irb
from .budget import ErrorBudget, assemble_budget, compare_before_after, incoherent_epg
from .calibration import calibrate_cr, calibrate_sx
from .corrections import correct_pair, ecr_segment_hamiltonians, term_epgs
from .device import DeviceConfig, PairSpec
from .dynamics import NoiseModel, PairHamiltonian, build_hamiltonian
from .gates import CRPulseConfig, SingleQubitGateConfig, assemble_ecr
from .leakage import characterize, suppress_leakage
from .pulses import Schedule
from .tomography import fit_effective_hamiltonian, measure_bloch_trajectories

log = logging.getLogger(__name__)

TRAJECTORY_POINTS = 9


# -- device state ------------------------------------------------------------------


def calibrate_pair(spec: PairSpec, dt: float = 0.25) -> dict:
    """Calibrated SX (both qubits) and CR configuration of one pair."""
    ham = build_hamiltonian(spec.params)
    sqc = calibrate_sx(ham, "control", dt=dt)
    sqt = calibrate_sx(ham, "target", dt=dt)
    cr = calibrate_cr(ham)
    return {"cr": cr.to_dict(), "sx_control": asdict(sqc), "sx_target": asdict(sqt)}


def load_pair_state(entry: dict) -> tuple[CRPulseConfig, SingleQubitGateConfig, SingleQubitGateConfig]:
    return (CRPulseConfig.from_dict(entry["cr"]), SingleQubitGateConfig(**entry["sx_control"]),
            SingleQubitGateConfig(**entry["sx_target"]))


def calibrate_device(config: DeviceConfig, workers: int = 1) -> dict:
    """Device-state document; per-pair failures are recorded, not raised."""
    pairs, failures = {}, {}
    outcomes = _map(_calibrate_job, [(spec, config.dt) for spec in config.pairs], workers)
    for spec, (ok, payload) in zip(config.pairs, outcomes):
        if ok:
            pairs[spec.label] = payload
        else:
            failures[spec.label] = payload
    doc = {
        "kind": "device-state", "schema_version": io.SCHEMA_VERSION,
        "config": config.to_dict(), "pairs": pairs, "failures": failures,
    }
    doc["snapshot"] = io.snapshot_hash(doc)
    return doc


def _calibrate_job(args):
    spec, dt = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return True, calibrate_pair(spec, dt)
    except Exception as exc:  # isolate the pair
        return False, f"{type(exc).__name__}: {exc}"


# -- per-pair evaluation ---------------------------------------------------------------


def gate_set(ham: PairHamiltonian, cr: CRPulseConfig, sqc, sqt, corrected: bool, config: DeviceConfig,
             noisy: bool = True) -> tuple[SimulatedGateSet, float]:
    noise = NoiseModel.from_pair(ham.pair, enabled=noisy)
    sx = tuple(
        _as_superop(ham.propagate(Schedule().append(ch, sq.sx()), config.dt, noise))
        for ch, sq in (("control", sqc), ("target", sqt))
    )
    sched = assemble_ecr(cr, sqc, corrected, sqt)
    ecr = _as_superop(ham.propagate(sched, config.dt, noise))
    gs = SimulatedGateSet(sx, ecr, config.readout.assignment_error, config.readout.leak_as_one)
    return gs, sched.duration


def _as_superop(m: np.ndarray) -> np.ndarray:
    if m.shape[0] == 9:
        return np.kron(m, m.conj())
    return m


def trajectory_hamiltonian(ham, cr, sqt=None, corrected=False):
    """Bloch-trajectory tomography of the CR pulse with the flat top stepped from 0 to its length."""
    flat = max(cr.cr_flat, 8.0)
    durations = np.linspace(0.0, flat, TRAJECTORY_POINTS)
    durations = np.round(durations / cr.dt) * cr.dt
    durations = np.unique(durations)
    t0 = measure_bloch_trajectories(ham, cr, durations, 0, sqt, corrected)
    t1 = measure_bloch_trajectories(ham, cr, durations, 1, sqt, corrected)
    return fit_effective_hamiltonian(t0, t1)


def evaluate(ham, spec: PairSpec, cr, sqc, sqt, corrected: bool, config: DeviceConfig, rb_seed: int,
             snapshot: str, shots, leakage_rate: float, scans=None, report=None) -> dict:
    """Tomography refit, IRB and budget of one gate configuration."""
    hp, hm, seg = ecr_segment_hamiltonians(ham, cr, sqt, corrected)
    terms = term_epgs(hp, hm, seg)
    gs, duration = gate_set(ham, cr, sqc, sqt, corrected, config)
    irb = run_irb(gs, config.lengths, config.n_seeds, shots, rb_seed)
    p = spec.params
    inc = incoherent_epg(p.control.t1, p.control.t2e, p.target.t1, p.target.t2e, duration)
    budget = assemble_budget(spec.label, terms, leakage_rate, inc, irb.epg, irb.epg_err, corrected,
                             (snapshot,))
    out = {
        "cr": cr.to_dict(), "corrections": asdict(cr.corrections),
        "h_plus": hp.to_dict(), "h_minus": hm.to_dict(), "segment_ns": seg, "ecr_ns": duration,
        "term_epg": terms, "leakage_rate": leakage_rate, "irb": irb.to_dict(), "budget": budget.to_dict(),
    }
    if scans is not None:
        out["leakage_scans"] = [s.to_dict() for s in scans]
    if report is not None:
        out["leakage_report"] = report.to_dict()
    return out


def process_pair(spec: PairSpec, entry: dict, config: DeviceConfig, suppress: bool, index: int,
                 snapshot: str, shots) -> dict:
    """Naive evaluation, plus the suppressed/corrected one when ``suppress``."""
    t_start = time.perf_counter()
    ham = build_hamiltonian(spec.params)
    cr, sqc, sqt = load_pair_state({**entry, "cr": entry.get("cr_calibrated", entry["cr"])})
    rb_seed = int(np.random.SeedSequence([config.seed, index]).generate_state(1)[0])
    s0, s1, report, rate = characterize(ham, cr)
    result = {
        "label": spec.label, "snapshot": snapshot, "cohort": spec.cohort, "high_zz": spec.high_zz,
        "tomography": trajectory_hamiltonian(ham, cr).to_dict(),
    }
    result["naive"] = evaluate(ham, spec, cr, sqc, sqt, False, config, rb_seed, snapshot, shots, rate,
                               (s0, s1), report)
    if suppress:
        supp = suppress_leakage(ham, cr, report) if report.rates else None
        cr2 = supp.cfg if supp is not None else cr
        corr = correct_pair(ham, cr2, sqc, sqt)
        s0b, s1b, report_b, rate_b = characterize(ham, corr.cfg)
        result["suppressed"] = evaluate(ham, spec, corr.cfg, sqc, sqt, True, config, rb_seed, snapshot,
                                        shots, rate_b, (s0b, s1b), report_b)
        result["suppressed"]["suppression_path"] = supp.path if supp is not None else "none"
        result["suppressed"]["zz_applied"] = corr.zz_applied
    result["runtime_s"] = time.perf_counter() - t_start
    return result


def _pair_job(args):
    spec, entry, config, suppress, index, snapshot, shots = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return True, process_pair(spec, entry, config, suppress, index, snapshot, shots)
    except Exception as exc:  # isolate the pair
        log.debug("pair %s failed\n%s", spec.label, traceback.format_exc())
        return False, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- single stages -------------------------------------------------------------------


def _context(spec: PairSpec, entry: dict):
    ham = build_hamiltonian(spec.params)
    cr, sqc, sqt = load_pair_state(entry)
    return ham, cr, sqc, sqt, bool(entry.get("corrected", False))


def stage_tomography(spec, entry, config, index) -> dict:
    ham, cr, sqc, sqt, corrected = _context(spec, entry)
    hp, hm, seg = ecr_segment_hamiltonians(ham, cr, sqt, corrected)
    return {
        "trajectory_fit": trajectory_hamiltonian(ham, cr, sqt, corrected).to_dict(),
        "h_plus": hp.to_dict(), "h_minus": hm.to_dict(), "segment_ns": seg, "term_epg": term_epgs(hp, hm, seg),
    }


def stage_leakage(spec, entry, config, index) -> dict:
    ham, cr, *_ = _context(spec, entry)
    s0, s1, report, rate = characterize(ham, cr)
    return {"leakage_scans": [s0.to_dict(), s1.to_dict()], "leakage_report": report.to_dict(), "leakage_rate": rate}


def stage_suppress(spec, entry, config, index) -> dict:
    """New device-state entry with the leakage-suppressed, coherently corrected CR pulse."""
    ham, cr, sqc, sqt, _ = _context(spec, entry)
    _, _, report, _ = characterize(ham, cr)
    supp = suppress_leakage(ham, cr, report) if report.rates else None
    corr = correct_pair(ham, supp.cfg if supp is not None else cr, sqc, sqt)
    # the calibrated pulse stays available for later before/after runs
    return {**entry, "cr_calibrated": entry.get("cr_calibrated", entry["cr"]), "cr": corr.cfg.to_dict(),
            "corrected": True,
            "suppression_path": supp.path if supp is not None else "none", "zz_applied": corr.zz_applied}


def stage_irb(spec, entry, config, index, shots=None) -> dict:
    ham, cr, sqc, sqt, corrected = _context(spec, entry)
    gs, duration = gate_set(ham, cr, sqc, sqt, corrected, config)
    rb_seed = int(np.random.SeedSequence([config.seed, index]).generate_state(1)[0])
    return {"irb": run_irb(gs, config.lengths, config.n_seeds, shots, rb_seed).to_dict(), "ecr_ns": duration}


def _stage_job(args):
    fn, spec, entry, config, index, kw = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return True, fn(spec, entry, config, index, **kw)
    except Exception as exc:  # isolate the pair
        log.debug("pair %s failed\n%s", spec.label, traceback.format_exc())
        return False, f"{type(exc).__name__}: {exc}"


def run_stage(state: dict, fn, workers: int = 1, **kw) -> tuple[dict, dict]:
    """Apply one stage to every calibrated pair: (results by label, failures by label)."""
    config = DeviceConfig.from_dict(state["config"])
    jobs = [(fn, spec, state["pairs"][spec.label], config, i, kw)
            for i, spec in enumerate(config.pairs) if spec.label in state["pairs"]]
    out, failures = {}, dict(state.get("failures", {}))
    for job, (ok, payload) in zip(jobs, _map(_stage_job, jobs, workers)):
        (out if ok else failures)[job[1].label] = payload
    return out, failures


def run_pipeline(state: dict, suppress: bool = True, exact: bool = False, shots: int | None = None,
                 workers: int = 1, labels: list[str] | None = None) -> dict:
    """Results document for every calibrated pair of a device state."""
    config = DeviceConfig.from_dict(state["config"])
    snapshot = state.get("snapshot") or io.snapshot_hash(state)
    shots = None if exact else (shots if shots is not None else config.shots)
    jobs, specs = [], []
    for index, spec in enumerate(config.pairs):
        if spec.label not in state["pairs"] or (labels and spec.label not in labels):
            continue
        jobs.append((spec, state["pairs"][spec.label], config, suppress, index, snapshot, shots))
        specs.append(spec)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    outcomes = _map(_pair_job, jobs, workers)
    pairs, failures = {}, dict(state.get("failures", {}))
    for spec, (ok, payload) in zip(specs, outcomes):
        if ok:
            pairs[spec.label] = payload
        else:
            failures[spec.label] = payload
    doc = {
        "kind": "results", "schema_version": io.SCHEMA_VERSION, "snapshot": snapshot,
        "suppress": suppress, "shots": shots, "pairs": pairs, "failures": failures,
        "timestamps": {"started": started, "finished": time.strftime("%Y-%m-%dT%H:%M:%S")},
        "units": {"rates": "rad/ns", "epg": "probability", "durations": "ns"},
    }
    if suppress and pairs:
        doc["summary"] = summarize(doc)
    return doc


def budgets(doc: dict, mode: str) -> list[ErrorBudget]:
    return [ErrorBudget.from_dict(p[mode]["budget"]) for p in doc["pairs"].values() if mode in p]


def summarize(doc: dict) -> dict:
    naive, after = budgets(doc, "naive"), budgets(doc, "suppressed")
    comp = compare_before_after(naive, after)
    fractions = [b.incoherent_fraction for b in after]
    return {
        **comp.summary(),
        "median_incoherent_fraction_after": float(np.median(fractions)),
        "median_unexplained_before": float(np.median([b.unexplained_raw for b in naive])),
        "zz_compensated": sorted(k for k, p in doc["pairs"].items() if p["suppressed"].get("zz_applied")),
    }
