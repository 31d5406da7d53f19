"""Command-line entry point: presets, drivers, and artifact export.

Subcommands: single, coupled, sweep, cpg, analyze.  All numeric output is
SI base units at full precision; CSV is the plotting interface.  Exit
codes: 0 success, 2 usage/config error, 3 runtime simulation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    classify_regime,
    peak_metrics,
    phase_difference,
    phase_portrait,
    spectrum,
)
from .circuit import (
    CouplingKind,
    CouplingSpec,
    NetworkConfig,
    SimConfig,
    SimulationError,
    dynamic_iv,
    events_to_csv,
    simulate,
    waveform_from_csv,
    waveform_to_csv,
)
from .cpg import (
    Gait,
    GaitDeathError,
    classify_gait,
    gait_spec,
    run_gait,
)
from .presets import (
    apply_override,
    list_presets,
    load_config,
    load_preset,
    network_from_config,
    sim_from_config,
)
from .sweep import boundaries_to_json, sweep_c, sweep_r, sweep_to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_SI_SUFFIXES = {
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "μ": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
}


class UsageError(Exception):
    pass


def parse_si(text: str) -> float:
    """Parse a number with an optional SI suffix (k, M, G, m, u/μ, n, p)."""
    text = text.strip()
    m = re.fullmatch(r"([+-]?[0-9.]+(?:[eE][+-]?\d+)?)\s*([pnumμkMG]?)", text)
    if not m:
        raise UsageError(f"cannot parse numeric value {text!r}")
    value = float(m.group(1))
    if m.group(2):
        value *= _SI_SUFFIXES[m.group(2)]
    return value


def _parse_set_value(text: str):
    try:
        return parse_si(text)
    except UsageError:
        if text in ("true", "false"):
            return text == "true"
        return text


def _load_base_config(args) -> dict:
    if args.preset and args.config:
        raise UsageError("give either --preset or --config, not both")
    if args.preset:
        try:
            return load_preset(args.preset)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
    if args.config:
        if not os.path.exists(args.config):
            raise UsageError(f"config file not found: {args.config}")
        return load_config(args.config)
    raise UsageError("a --preset name or --config file is required")


def _apply_sets(cfg: dict, sets: list[str]) -> dict:
    for item in sets or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg = apply_override(cfg, key.strip(), _parse_set_value(value.strip()))
    return cfg


def _seed_override(sim: SimConfig) -> SimConfig:
    env = os.environ.get("VO2_OSC_SEED")
    if env is None:
        return sim
    try:
        return replace(sim, master_seed=int(env))
    except ValueError:
        raise UsageError(f"VO2_OSC_SEED must be an integer, got {env!r}") from None


def _build(cfg: dict) -> tuple[NetworkConfig, SimConfig]:
    try:
        net = network_from_config(cfg)
        sim = _seed_override(sim_from_config(cfg))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    return net, sim


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=str)
        fh.write("\n")


def _manifest(out_dir: Path, command: str, cfg: dict, sim: SimConfig,
              outputs: list[Path], warnings: list[str], t0: float) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "config": cfg,
            "seed": sim.master_seed,
            "version": __version__,
            "wall_clock_s": time.monotonic() - t0,
            "outputs": [p.name for p in outputs],
            "warnings": warnings,
        },
    )


def _spectrum_csv(path: Path, spec) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "magnitude"])
        for f, m in zip(spec.freqs, spec.magnitude):
            w.writerow([repr(float(f)), repr(float(m))])


def cmd_single(args) -> int:
    t0 = time.monotonic()
    cfg = _apply_sets(_load_base_config(args), args.set)
    net, sim = _build(cfg)
    if net.n_osc != 1:
        raise UsageError(f"single expects 1 oscillator, config has {net.n_osc}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wf = simulate(net, sim)
    outputs = []

    p = out / "waveform.csv"
    waveform_to_csv(wf, p)
    outputs.append(p)
    p = out / "events.csv"
    events_to_csv(wf, p)
    outputs.append(p)

    spec = spectrum(wf, 0)
    p = out / "spectrum.csv"
    _spectrum_csv(p, spec)
    outputs.append(p)

    pm = peak_metrics(spec)
    p = out / "peak_metrics.json"
    _write_json(p, {
        "f1_hz": pm.f1,
        "delta_f1_hz": pm.delta_f1,
        "rel_fluct": pm.rel_fluct,
        "peak_height": pm.peak_height,
        "df_hz": spec.df,
    })
    outputs.append(p)

    iv = dynamic_iv(wf, 0)
    p = out / "dynamic_iv.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "i"])
        for row in iv:
            w.writerow([repr(float(row[0])), repr(float(row[1]))])
    outputs.append(p)

    _manifest(out, "single", cfg, sim, outputs, wf.warnings, t0)
    return EXIT_OK


def _parse_coupling_flag(text: str) -> tuple[CouplingKind, float]:
    m = re.fullmatch(r"([rc]):(.+)", text.strip())
    if not m:
        raise UsageError(
            f"--coupling expects r:<ohms> or c:<farads>, got {text!r}"
        )
    kind = CouplingKind.RESISTIVE if m.group(1) == "r" else CouplingKind.CAPACITIVE
    return kind, parse_si(m.group(2))


def cmd_coupled(args) -> int:
    t0 = time.monotonic()
    cfg = _apply_sets(_load_base_config(args), args.set)
    net, sim = _build(cfg)
    if net.n_osc != 2:
        raise UsageError(f"coupled expects 2 oscillators, config has {net.n_osc}")
    if args.coupling:
        if len(args.coupling) > 1:
            raise UsageError("give at most one --coupling per pair slot")
        kind, value = _parse_coupling_flag(args.coupling[0])
        slot = net.couplings[0] if net.couplings else CouplingSpec(
            0, 1, kind, value
        )
        r_ox = slot.r_ox if kind is CouplingKind.RESISTIVE else None
        net = replace(
            net, couplings=(CouplingSpec(slot.i, slot.j, kind, value, r_ox),)
        )
    if not net.couplings:
        raise UsageError("coupled needs a coupling (config slot or --coupling)")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wf = simulate(net, sim)
    outputs = []

    p = out / "waveform.csv"
    waveform_to_csv(wf, p)
    outputs.append(p)
    p = out / "events.csv"
    events_to_csv(wf, p)
    outputs.append(p)

    for k in range(2):
        spec = spectrum(wf, k)
        p = out / f"spectrum_osc{k}.csv"
        _spectrum_csv(p, spec)
        outputs.append(p)

    report = classify_regime(wf)
    p = out / "sync_report.json"
    _write_json(p, {
        "f1_per_osc": report.f1_per_osc,
        "delta_phi_mean_deg": report.delta_phi_mean_deg,
        "delta_phi_circstd_deg": report.delta_phi_circstd_deg,
        "regime": report.regime.name,
        "phase_failures": report.phase_failures,
        "thresholds": vars(report.thresholds),
    })
    outputs.append(p)

    if report.regime.name != "DEATH":
        dphi = phase_difference(wf, 0, 1)
        p = out / "phase_difference.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "delta_phi_deg"])
            for row in dphi:
                w.writerow([repr(float(row[0])), repr(float(row[1]))])
        outputs.append(p)

        t_on = wf.event_times(0, "on")
        n_periods = min(200, len(t_on) - 1)
        if n_periods >= 1:
            portrait = phase_portrait(wf, 0, 1, n_periods=n_periods)
            p = out / "phase_portrait.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["v_a", "v_b"])
                for row in portrait:
                    w.writerow([repr(float(row[0])), repr(float(row[1]))])
            outputs.append(p)

    _manifest(out, "coupled", cfg, sim, outputs, wf.warnings, t0)
    return EXIT_OK


def _parse_range(text: str) -> list[float]:
    """Parse lo:hi:logN / lo:hi:linN range specs or comma lists."""
    if ":" in text:
        m = re.fullmatch(r"([^:]+):([^:]+):(log|lin)(\d+)", text.strip())
        if not m:
            raise UsageError(
                f"range spec must be lo:hi:logN or lo:hi:linN, got {text!r}"
            )
        lo, hi, n = parse_si(m.group(1)), parse_si(m.group(2)), int(m.group(4))
        if n < 1 or lo <= 0 or hi <= lo:
            raise UsageError(f"empty or invalid range {text!r}")
        if m.group(3) == "log":
            return list(np.geomspace(lo, hi, n))
        return list(np.linspace(lo, hi, n))
    values = [parse_si(v) for v in text.split(",") if v.strip()]
    if not values:
        raise UsageError("empty range")
    return values


def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    cfg = _apply_sets(_load_base_config(args), args.set)
    net, sim = _build(cfg)
    values = _parse_range(args.range)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fn = sweep_r if args.kind == "r" else sweep_c
    result = fn(net, values, sim, jobs=args.jobs)
    outputs = []

    p = out / "sweep.csv"
    sweep_to_csv(result, p)
    outputs.append(p)
    p = out / "boundaries.json"
    boundaries_to_json(result, p)
    outputs.append(p)

    warnings = [
        f"point {pt.param!r} failed: {pt.error}" for pt in result.points if pt.failed
    ]
    _manifest(out, f"sweep {args.kind}", cfg, sim, outputs, warnings, t0)
    n_ok = sum(not pt.failed for pt in result.points)
    if n_ok < 0.9 * len(result.points):
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_cpg(args) -> int:
    t0 = time.monotonic()
    try:
        gait = Gait(args.gait)
    except ValueError:
        raise UsageError(
            f"unknown gait {args.gait!r}; shipped: "
            + ", ".join(g.value for g in Gait)
        ) from None
    cfg = load_preset(f"gait-{gait.value}")
    cfg = _apply_sets(cfg, args.set)
    net, sim = _build(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    wf = simulate(net, sim)
    from .cpg import measure_phases  # local import keeps module surface tidy

    phases = measure_phases(wf)
    name, err = classify_gait(phases)
    outputs = []

    p = out / "waveform.csv"
    # current-sense channels: voltage across r_i per oscillator
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"v_sense_{k}" for k in range(wf.n_osc)])
        r_i = [o.r_i for o in net.oscillators]
        for row_t, row_i in zip(wf.t, wf.i):
            w.writerow(
                [repr(float(row_t))]
                + [repr(float(cur * r)) for cur, r in zip(row_i, r_i)]
            )
    outputs.append(p)

    p = out / "gait_report.json"
    _write_json(p, {
        "requested": gait.value,
        "measured_phases_deg": list(phases),
        "classified": name,
        "max_error_deg": err,
        "template": list(gait_spec(gait).template),
    })
    outputs.append(p)

    _manifest(out, f"cpg {gait.value}", cfg, sim, outputs, wf.warnings, t0)
    return EXIT_OK


def cmd_analyze(args) -> int:
    t0 = time.monotonic()
    if not os.path.exists(args.waveform):
        raise UsageError(f"waveform file not found: {args.waveform}")
    events = args.events
    if events and not os.path.exists(events):
        raise UsageError(f"events file not found: {events}")
    wf = waveform_from_csv(args.waveform, events_path=events)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for k in range(wf.n_osc):
        spec = spectrum(wf, k)
        pm = peak_metrics(spec)
        p = out / f"peak_metrics_osc{k}.json"
        _write_json(p, {
            "f1_hz": pm.f1,
            "delta_f1_hz": pm.delta_f1,
            "rel_fluct": pm.rel_fluct,
            "df_hz": spec.df,
        })
        outputs.append(p)
    if wf.n_osc >= 2:
        report = classify_regime(wf)
        p = out / "sync_report.json"
        _write_json(p, {
            "f1_per_osc": report.f1_per_osc,
            "delta_phi_mean_deg": report.delta_phi_mean_deg,
            "delta_phi_circstd_deg": report.delta_phi_circstd_deg,
            "regime": report.regime.name,
            "phase_failures": report.phase_failures,
        })
        outputs.append(p)
    _write_json(out / "manifest.json", {
        "command": "analyze",
        "config": {"waveform": args.waveform},
        "seed": None,
        "version": __version__,
        "wall_clock_s": time.monotonic() - t0,
        "outputs": [p.name for p in outputs],
        "warnings": [],
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vo2osc",
        description="Deterministic simulator for networks of VO2-switch "
        "relaxation oscillators",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=True):
        if preset:
            p.add_argument("--preset", help="named preset: " + ", ".join(list_presets()))
            p.add_argument("--config", help="path to a JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value (dotted path, SI suffixes)")
        p.add_argument("--out-dir", default=".", help="output directory")

    p = sub.add_parser("single", help="run one oscillator")
    common(p)
    p.set_defaults(fn=cmd_single)

    p = sub.add_parser("coupled", help="run a coupled pair")
    common(p)
    p.add_argument("--coupling", action="append", metavar="r:VAL|c:VAL",
                   help="replace the pair coupling (r:2.4k or c:1u)")
    p.set_defaults(fn=cmd_coupled)

    p = sub.add_parser("sweep", help="sweep the coupling value")
    p.add_argument("kind", choices=["r", "c"])
    p.add_argument("range", help="lo:hi:logN, lo:hi:linN, or comma list")
    common(p)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers (default: available cores)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("cpg", help="run a gait preset")
    p.add_argument("gait", help="step, trot, or amble")
    common(p, preset=False)
    p.set_defaults(fn=cmd_cpg)

    p = sub.add_parser("analyze", help="re-run analysis on a waveform CSV")
    p.add_argument("waveform", help="waveform CSV path")
    p.add_argument("--events", help="events CSV path", default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, GaitDeathError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
