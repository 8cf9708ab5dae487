"""Command-line front end.

Every verb reads and writes canonical JSON; exit status is 0 on success, 1
when some pairs failed and 2 for configuration or document errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io, pipeline, plots
from .budget import ErrorBudget, compare_before_after
from .device import ConfigError, DeviceConfig, default_ensemble

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
REPORT_FORMATS = ("csv", "json", "svg")

log = logging.getLogger("ecrbudget")


class UsageError(Exception):
    """Bad flags or inputs; maps to the configuration exit code."""


def load_config(path: str | None, seed: int | None) -> DeviceConfig:
    if path is None:
        return default_ensemble() if seed is None else default_ensemble(seed)
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = DeviceConfig.from_dict(data)
    return cfg if seed is None else replace(cfg, seed=seed)


def load_state(args) -> dict:
    """Device state from --state, or a fresh calibration of --config."""
    if args.state:
        state = io.read(args.state, "device-state")
        DeviceConfig.from_dict(state["config"])  # validate
        if args.seed is not None:
            state = {**state, "config": {**state["config"], "seed": args.seed}}
        return state
    return pipeline.calibrate_device(load_config(args.config, args.seed), args.workers)


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def _stage_doc(kind: str, state: dict, pairs: dict, failures: dict, **extra) -> dict:
    return {"kind": kind, "schema_version": io.SCHEMA_VERSION, "snapshot": state.get("snapshot", ""),
            "pairs": pairs, "failures": failures, **extra}


def _status(failures: dict) -> int:
    for label, msg in sorted(failures.items()):
        log.warning("pair %s failed: %s", label, msg)
    return EXIT_PARTIAL if failures else EXIT_OK


# -- verbs ----------------------------------------------------------------------------


def cmd_init_config(args) -> int:
    cfg = default_ensemble() if args.seed is None else default_ensemble(args.seed)
    io.write(_out(args, "config.json"), cfg.to_dict())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    state = pipeline.calibrate_device(load_config(args.config, args.seed), args.workers)
    io.write(_out(args, "device_state.json"), state)
    log.info("calibrated %d pairs", len(state["pairs"]))
    return _status(state["failures"])


def cmd_tomography(args) -> int:
    state = load_state(args)
    pairs, failures = pipeline.run_stage(state, pipeline.stage_tomography, args.workers)
    io.write(_out(args, "tomography.json"), _stage_doc("tomography", state, pairs, failures,
                                                      units={"rates": "rad/ns", "durations": "ns"}))
    return _status(failures)


def cmd_leakage(args) -> int:
    state = load_state(args)
    pairs, failures = pipeline.run_stage(state, pipeline.stage_leakage, args.workers)
    out = _out(args, "leakage.json")
    io.write(out, _stage_doc("leakage", state, pairs, failures, units={"rates": "probability per ZX(pi/4)"}))
    for label, res in pairs.items():
        (out.parent / f"leakage_{label}.svg").write_text(plots.leakage_svg({"naive": res}, label))
    return _status(failures)


def cmd_suppress(args) -> int:
    state = load_state(args)
    pairs, failures = pipeline.run_stage(state, pipeline.stage_suppress, args.workers)
    new = {**state, "pairs": pairs, "failures": failures}
    new["snapshot"] = io.snapshot_hash(new)
    io.write(_out(args, "device_state_suppressed.json"), new)
    return _status(failures)


def cmd_irb(args) -> int:
    state = load_state(args)
    shots = _shots(args, state)
    pairs, failures = pipeline.run_stage(state, pipeline.stage_irb, args.workers, shots=shots)
    out = _out(args, "irb.json")
    io.write(out, _stage_doc("irb", state, pairs, failures, shots=shots))
    for label, res in pairs.items():
        (out.parent / f"survival_{label}.csv").write_text(plots.survival_csv(res["irb"]))
        (out.parent / f"survival_{label}.svg").write_text(plots.survival_svg(res["irb"], label))
    return _status(failures)


def _shots(args, state: dict) -> int | None:
    if args.exact:
        return None
    return args.shots if args.shots is not None else state["config"].get("shots", 1024)


def cmd_budget(args) -> int:
    doc = io.read(args.results, "results")
    out = {"kind": "budget", "schema_version": io.SCHEMA_VERSION, "snapshot": doc["snapshot"],
           "budgets": {}, "failures": doc.get("failures", {})}
    for label, pair in sorted(doc["pairs"].items()):
        out["budgets"][label] = {m: pair[m]["budget"] for m in ("naive", "suppressed") if m in pair}
    naive = [ErrorBudget.from_dict(b["naive"]) for b in out["budgets"].values() if "suppressed" in b]
    after = [ErrorBudget.from_dict(b["suppressed"]) for b in out["budgets"].values() if "suppressed" in b]
    if naive:
        comp = compare_before_after(naive, after)
        out["comparison"] = comp.summary()
        out["cumulative"] = comp.cumulative()
    io.write(_out(args, "budget.json"), out)
    print(plots.budget_csv(doc), end="")
    return _status(out["failures"])


def write_report(doc: dict, fmt: str, out_dir: Path) -> list[Path]:
    if fmt not in REPORT_FORMATS:
        raise UsageError(f"unknown report format {fmt!r}; choose from {', '.join(REPORT_FORMATS)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        written.append(io.write(out_dir / "results.json", doc))
    elif fmt == "csv":
        p = out_dir / "budget.csv"
        p.write_text(plots.budget_csv(doc))
        written.append(p)
    else:
        for name, svg in (("budget.svg", plots.budget_svg(doc)), ("cumulative.svg", plots.cumulative_svg(doc))):
            (out_dir / name).write_text(svg)
            written.append(out_dir / name)
        for label, pair in doc["pairs"].items():
            if pair.get("naive", {}).get("leakage_scans"):
                p = out_dir / f"leakage_{label}.svg"
                p.write_text(plots.leakage_svg(pair, label))
                written.append(p)
    return written


def cmd_report(args) -> int:
    doc = io.read(args.results, "results")
    for fmt in args.format:
        for p in write_report(doc, fmt, _out(args, ".")):
            log.info("wrote %s", p)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    state = load_state(args)
    out_dir = _out(args, "results")
    if not args.state:
        io.write(out_dir / "device_state.json", state)
    doc = pipeline.run_pipeline(state, suppress=args.suppress, exact=args.exact, shots=args.shots,
                                workers=args.workers)
    io.write(out_dir / "results.json", doc)
    for fmt in ("csv", "svg"):
        write_report(doc, fmt, out_dir)
    for label, pair in doc["pairs"].items():
        for mode in ("naive", "suppressed"):
            if mode in pair:
                (out_dir / f"survival_{label}_{mode}.csv").write_text(plots.survival_csv(pair[mode]["irb"]))
    if "summary" in doc:
        s = doc["summary"]
        log.info("median IRB EPG %.4f -> %.4f (ratio %.2f)", s["median_before"], s["median_after"], s["median_ratio"])
    return _status(doc["failures"])


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecrbudget", description="ECR gate error budgeting on simulated pairs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, state=True):
        p.add_argument("--config", help="device configuration JSON (default: built-in ensemble)")
        if state:
            p.add_argument("--state", help="device-state JSON from 'calibrate' (skips calibration)")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--seed", type=int, help="override the configuration seed")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    def sampling(p):
        p.add_argument("--shots", type=int, help="shots per sequence (default: from config)")
        p.add_argument("--exact", action="store_true", help="exact expectation values instead of shots")

    p = sub.add_parser("init-config", help="write the default ensemble configuration")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_init_config)

    p = sub.add_parser("calibrate", help="calibrate SX and CR pulses of every pair")
    common(p, state=False)
    p.set_defaults(fn=cmd_calibrate)

    for verb, fn, text in (("tomography", cmd_tomography, "effective Hamiltonian of each CR segment"),
                           ("leakage", cmd_leakage, "leakage phase sweeps and classification"),
                           ("suppress", cmd_suppress, "leakage suppression and coherent corrections")):
        p = sub.add_parser(verb, help=text)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("irb", help="interleaved randomized benchmarking of each ECR")
    common(p)
    sampling(p)
    p.set_defaults(fn=cmd_irb)

    p = sub.add_parser("pipeline", help="full before/after run with CSV and SVG output")
    common(p)
    sampling(p)
    p.add_argument("--suppress", action="store_true", help="also evaluate the suppressed, corrected gates")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("budget", help="error budgets and before/after comparison of a results file")
    p.add_argument("results")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_budget)

    p = sub.add_parser("report", help="export a results file as csv, json or svg")
    p.add_argument("results")
    p.add_argument("--format", nargs="+", default=["csv"], help="any of csv, json, svg")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, io.DocumentError, UsageError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
