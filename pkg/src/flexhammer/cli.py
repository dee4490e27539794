"""Command-line front end.

Subcommands: ``simulate`` (one strike through a hammer or the teleop
loop), ``identify`` (swept-sine estimation of the environment model),
``bode`` (closed-form response curves), ``experiment`` (configured batch
run), ``analyze`` (per-strike metrics to condition summaries), ``stats``
(nonparametric tests over condition summaries). Exit codes: 0 success,
2 usage, 3 invalid configuration or data, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import stats as st
from .dynamics import (flexible_hammer, resonance_frequency, rigid_hammer,
                       simulate_hammer, velocity_frequency_response)
from .excitation import StrikeProfile, TrackingOperator, OperatorModel, sine_sweep, strike_profile
from .experiment import load_config, run_experiment
from .identification import (ImpedanceCurve, ZeModel, estimate_response,
                             resonance_prominence, simulate_ze, ze_response)
from .teleop import (DeviceParams, SimulationDiverged, controller_preset,
                     simulate_teleop, transmitted_impedance)
from .trials import metrics_from_csv, summarize_condition


def _hammer_from_args(args):
    if args.rigid:
        return rigid_hammer()
    return flexible_hammer(args.stiffness)


def _cmd_simulate(args) -> int:
    hammer = _hammer_from_args(args)
    freq = args.freq
    if freq is None:
        freq = (resonance_frequency(hammer, "approx")
                if not args.rigid else 6.0)
    duration = args.duration or (0.3 + 1.0 / freq + 0.6)
    profile = StrikeProfile(args.amplitude, freq, onset=0.3)
    v = strike_profile(profile, args.dt, duration)
    if args.preset is None:
        trace = simulate_hammer(hammer, v, dt=args.dt)
    else:
        devices = DeviceParams()
        operator = TrackingOperator(OperatorModel(), v, args.dt)
        trace = simulate_teleop(devices, devices, hammer,
                                controller_preset(args.preset), operator,
                                dt=args.dt)
    trace.to_csv(args.out)
    print(f"wrote {len(trace)} samples to {args.out}")
    return 0


def _cmd_identify(args) -> int:
    sweep = sine_sweep(args.f0, args.f1, args.duration, args.dt)
    model = ZeModel()
    torque = simulate_ze(model, sweep, dt=args.dt)
    curve = estimate_response(sweep, torque, args.dt,
                              band=(args.band_lo, args.band_hi),
                              resolution=args.resolution)
    curve.to_csv(args.out)
    peak, prom = resonance_prominence(curve, (args.band_lo + 1.0,
                                              args.band_hi - 1.0))
    print(f"wrote {len(curve.freq_hz)} bins to {args.out}; "
          f"peak {peak:.3f} Hz, prominence {prom:.2f} dB")
    return 0


def _cmd_bode(args) -> int:
    grid = np.geomspace(args.fmin, args.fmax, args.points)
    if args.what == "ze":
        curve = ze_response(ZeModel(), grid)
    elif args.what == "hflex":
        resp = velocity_frequency_response(_hammer_from_args(args), grid)
        curve = ImpedanceCurve(grid, resp.magnitude_db, resp.phase_deg)
    else:
        devices = DeviceParams()
        curve = transmitted_impedance(controller_preset(args.preset),
                                      devices, devices, ZeModel(), grid)
    curve.to_csv(args.out)
    print(f"wrote {args.points} points to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    manifest = run_experiment(cfg, args.out, jobs=args.jobs)
    print(f"run complete: {sum(len(v) for v in manifest.files.values())} "
          f"files under {args.out} (config {manifest.config_hash[:12]})")
    return 0


def _cmd_analyze(args) -> int:
    out = {}
    for path in args.metrics:
        metrics = metrics_from_csv(path)
        summary = summarize_condition(metrics, k=args.best_k)
        out[Path(path).stem] = json.loads(summary.to_json())
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_stats(args) -> int:
    columns, labels = [], []
    for path in args.summaries:
        rows = json.loads(Path(path).read_text())
        columns.append([row[args.measure] for row in rows])
        labels.append(Path(path).stem.replace("_summaries", ""))
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise ValueError(f"summary files disagree on participant count: {lengths}")
    block = np.array(columns).T
    report = {"conditions": labels, "measure": args.measure}
    fr = st.friedman(block)
    report["friedman"] = {"chi2": fr.statistic, "pvalue": fr.pvalue, "n": fr.n}
    sigma = st.mad_sigma(block.ravel())
    report["sigma_est"] = sigma
    report["minimum_effect_size"] = (st.minimum_effect_size(sigma, block.shape[0])
                                     if sigma > 0 else 0.0)
    pairwise = {}
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            try:
                w = st.wilcoxon_signed_rank(block[:, i], block[:, j])
                pairwise[f"{labels[i]} vs {labels[j]}"] = {
                    "w_plus": w.statistic, "pvalue": w.pvalue, "n": w.n,
                    "median_difference": w.effect,
                    "ci95": [w.ci_lower, w.ci_upper]}
            except ValueError as exc:
                pairwise[f"{labels[i]} vs {labels[j]}"] = {"error": str(exc)}
    report["wilcoxon_pairwise"] = pairwise
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexhammer",
        description="Resonant-hammering simulation and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_hammer_flags(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--stiffness", type=float, default=2.23,
                       help="spring stiffness in N·m/rad (default 2.23)")
        g.add_argument("--rigid", action="store_true",
                       help="use the rigid extension")

    p = sub.add_parser("simulate", help="simulate a single strike")
    add_hammer_flags(p)
    p.add_argument("--freq", type=float, default=None,
                   help="excitation frequency in Hz (default: resonance)")
    p.add_argument("--amplitude", type=float, default=2.0)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--preset", type=int, choices=(1, 2, 3), default=None,
                   help="run through the teleop loop with this controller")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", default="strike.csv")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("identify", help="swept-sine identification round trip")
    p.add_argument("--f0", type=float, default=0.1)
    p.add_argument("--f1", type=float, default=20.0)
    p.add_argument("--duration", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--resolution", type=float, default=0.05,
                   help="spectral resolution in Hz")
    p.add_argument("--band-lo", type=float, default=0.5)
    p.add_argument("--band-hi", type=float, default=15.0)
    p.add_argument("--out", default="identified.csv")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("bode", help="closed-form frequency response curves")
    p.add_argument("--what", choices=("ze", "hflex", "zto"), default="ze")
    add_hammer_flags(p)
    p.add_argument("--preset", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--fmin", type=float, default=0.5)
    p.add_argument("--fmax", type=float, default=20.0)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--out", default="bode.csv")
    p.set_defaults(func=_cmd_bode)

    p = sub.add_parser("experiment", help="run a configured virtual experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("analyze", help="summarize per-strike metrics CSVs")
    p.add_argument("metrics", nargs="+", help="metrics CSV files")
    p.add_argument("--best-k", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stats", help="nonparametric tests over summaries")
    p.add_argument("summaries", nargs="+",
                   help="per-condition *_summaries.json files (>= 2)")
    p.add_argument("--measure", choices=("median_vhat", "median_gain",
                                         "median_freq_hz"),
                   default="median_gain")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SimulationDiverged, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
