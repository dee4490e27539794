"""Configuration-driven virtual hammering experiments.

A run sweeps hammer/controller conditions with an ensemble of simulated
participants, extracts per-strike measures, aggregates best-k medians per
participant, and applies the nonparametric test battery across
conditions. All outputs are plain CSV/JSON under a stable directory
layout (traces/, metrics/, stats/, manifest.json) and are reproducible
bit-for-bit from (config, seed).
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version as pkg_version
from itertools import combinations
from pathlib import Path

import numpy as np

from . import stats as st
from .dynamics import (HAMMER_DAMPING, HAMMERHEAD_INERTIA, HammerParams,
                       flexible_hammer, resonance_frequency, rigid_hammer,
                       simulate_hammer)
from .excitation import OperatorModel, StrikeProfile, TrackingOperator, ensemble
from .teleop import (DeviceParams, controller_preset,
                     preset_for_condition, simulate_teleop)
from .trials import (StrikeMetrics, UnextractableStrike, metrics_to_csv,
                     segment_strikes, strike_metrics, summarize_condition)

MEASURES = ("vhat", "gain", "freq_hz")


@dataclass(frozen=True)
class ConditionSpec:
    """One experimental condition: a hammer and, in teleop mode, a preset."""

    label: str
    stiffness: float | None     # None marks the rigid extension
    preset: int | None = None   # teleop controller, None in direct mode


@dataclass(frozen=True)
class OperatorSettings:
    """Tracking gains and the two timing-variability levels.

    ``jitter`` scatters the excitation frequency per strike;
    ``participant_jitter`` biases it once per simulated participant.
    """

    kp: float = 2.0
    ki: float = 60.0
    jitter: float = 0.05
    participant_jitter: float = 0.12

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("operator gains must be non-negative")
        for name in ("jitter", "participant_jitter"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5], got {v}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    conditions: tuple[ConditionSpec, ...]
    trials: int = 40
    participants: int = 13
    seed: int = 0
    dt: float = 1e-3
    best_k: int = 10
    strike_amplitude: float = 2.0
    max_excitation_hz: float = 8.0
    rigid_excitation_hz: float = 6.0
    hammer_inertia: float = HAMMERHEAD_INERTIA
    hammer_damping: float = HAMMER_DAMPING
    operator: OperatorSettings = field(default_factory=OperatorSettings)
    device_inertia: float = 2e-3
    device_damping: float = 0.01
    save_traces: str = "first"   # none | first | all

    def __post_init__(self):
        if self.mode not in ("direct", "teleop"):
            raise ValueError(f"mode must be 'direct' or 'teleop', got {self.mode!r}")
        if not self.conditions:
            raise ValueError("conditions: need at least one condition")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.participants < 1:
            raise ValueError(f"participants must be >= 1, got {self.participants}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.best_k < 1:
            raise ValueError(f"best_k must be >= 1, got {self.best_k}")
        if self.save_traces not in ("none", "first", "all"):
            raise ValueError(f"save_traces must be none/first/all, got {self.save_traces!r}")
        labels = [c.label for c in self.conditions]
        if len(set(labels)) != len(labels):
            raise ValueError(f"condition labels must be unique: {labels}")
        for c in self.conditions:
            if c.stiffness is not None and not c.stiffness > 0:
                raise ValueError(
                    f"stiffness: condition {c.label!r} needs a positive value "
                    f"or \"rigid\", got {c.stiffness}")
            if self.mode == "teleop" and c.preset not in (1, 2, 3):
                raise ValueError(
                    f"preset: teleop condition {c.label!r} needs preset 1, 2 or 3")
            if self.mode == "direct" and c.preset is not None:
                raise ValueError(
                    f"preset: direct-mode condition {c.label!r} cannot set one")

    def hammer(self, cond: ConditionSpec) -> HammerParams:
        if cond.stiffness is None:
            return rigid_hammer(m=self.hammer_inertia, b=self.hammer_damping)
        return flexible_hammer(cond.stiffness, m=self.hammer_inertia,
                               b=self.hammer_damping)

    def excitation_hz(self, cond: ConditionSpec) -> float:
        """Per-condition target frequency: the resonance, capped at the
        fastest motion a human operator sustains; rigid conditions use a
        fixed mid-range rate (the gain there is rate-independent)."""
        if cond.stiffness is None:
            return self.rigid_excitation_hz
        f = resonance_frequency(self.hammer(cond), "approx")
        return min(f, self.max_excitation_hz)

    def canonical_dict(self) -> dict:
        d = asdict(self)
        d["conditions"] = [asdict(c) for c in self.conditions]
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


_SCHEMA = {
    "mode", "conditions", "trials", "participants", "seed", "dt", "best_k",
    "strike_amplitude", "max_excitation_hz", "rigid_excitation_hz",
    "hammer_inertia", "hammer_damping", "operator", "device_inertia",
    "device_damping", "save_traces",
}
_CONDITION_KEYS = {"label", "stiffness", "preset", "feedback"}
_OPERATOR_KEYS = {"kp", "ki", "jitter", "participant_jitter"}


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration.

    Unknown keys are rejected; validation errors name the offending
    field. See configs/ for the shipped defaults.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: parse error at line {exc.lineno}, "
                         f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _SCHEMA
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    if "conditions" not in raw or "mode" not in raw:
        raise ValueError(f"{path}: 'mode' and 'conditions' are required")
    conditions = []
    for i, entry in enumerate(raw["conditions"]):
        if not isinstance(entry, dict):
            raise ValueError(f"conditions[{i}]: must be an object")
        unknown = set(entry) - _CONDITION_KEYS
        if unknown:
            raise ValueError(f"conditions[{i}]: unknown keys {sorted(unknown)}")
        stiffness = entry.get("stiffness", "rigid" if raw["mode"] == "direct" else 2.3)
        if stiffness == "rigid":
            stiffness = None
        elif not isinstance(stiffness, (int, float)):
            raise ValueError(
                f"conditions[{i}].stiffness: expected a number or \"rigid\"")
        preset = entry.get("preset")
        if "feedback" in entry:
            if preset is not None:
                raise ValueError(
                    f"conditions[{i}]: give either 'preset' or 'feedback', not both")
            preset = preset_for_condition(entry["feedback"])
        label = entry.get("label")
        if not label:
            raise ValueError(f"conditions[{i}].label: required")
        conditions.append(ConditionSpec(label=str(label),
                                        stiffness=stiffness, preset=preset))
    kwargs = {k: raw[k] for k in raw if k not in ("conditions", "operator")}
    if "operator" in raw:
        op = raw["operator"]
        unknown = set(op) - _OPERATOR_KEYS
        if unknown:
            raise ValueError(f"operator: unknown keys {sorted(unknown)}")
        kwargs["operator"] = OperatorSettings(**op)
    return ExperimentConfig(conditions=tuple(conditions), **kwargs)


@dataclass
class RunManifest:
    """Record of one completed experiment run."""

    config_hash: str
    tool_version: str
    seed: int
    files: dict[str, list[str]]
    created: str

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _tool_version() -> str:
    try:
        return pkg_version("flexhammer")
    except PackageNotFoundError:
        return "unversioned"


def _trial_duration(cfg: ExperimentConfig, freq_hz: float) -> float:
    spread = 3.0 * (cfg.operator.jitter + cfg.operator.participant_jitter)
    slowest = freq_hz * math.exp(-spread)
    return 0.3 + 1.0 / slowest + 0.6


def _participant_rng(cfg: ExperimentConfig, c_idx: int, p_idx: int):
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(c_idx, p_idx))
    return np.random.default_rng(ss), int(ss.generate_state(1)[0])


def _simulate_participant(cfg: ExperimentConfig, c_idx: int, p_idx: int):
    """All trials of one participant under one condition.

    Returns (metrics, n_discarded, traces) with traces a list of
    (trial_index, Trace) per the save_traces policy.
    """
    cond = cfg.conditions[c_idx]
    hammer = cfg.hammer(cond)
    f_nominal = cfg.excitation_hz(cond)
    rng, model_seed = _participant_rng(cfg, c_idx, p_idx)
    pj = cfg.operator.participant_jitter
    bias = float(np.clip(rng.standard_normal() * pj, -3.0 * pj, 3.0 * pj))
    f_part = f_nominal * math.exp(bias)
    duration = _trial_duration(cfg, f_nominal)
    profile = StrikeProfile(cfg.strike_amplitude, f_part, onset=0.3)
    model = OperatorModel(kp=cfg.operator.kp, ki=cfg.operator.ki,
                          jitter=cfg.operator.jitter, seed=model_seed)
    inputs = ensemble(profile, model, cfg.trials, cfg.dt, duration)

    metrics: list[StrikeMetrics] = []
    discarded = 0
    traces = []
    devices = DeviceParams(cfg.device_inertia, cfg.device_damping)
    for t_idx, v_des in enumerate(inputs):
        if cfg.mode == "direct":
            trace = simulate_hammer(hammer, v_des, dt=cfg.dt)
            v_in_ch, v_ham_ch = trace["v_in"], trace["v_out"]
        else:
            operator = TrackingOperator(model, v_des, cfg.dt)
            trace = simulate_teleop(devices, devices, hammer,
                                    controller_preset(cond.preset), operator,
                                    dt=cfg.dt)
            v_in_ch, v_ham_ch = trace["v_s"], trace["v_flx"]
        if cfg.save_traces == "all" or (cfg.save_traces == "first"
                                        and p_idx == 0 and t_idx == 0):
            traces.append((t_idx, trace))
        segments = segment_strikes(v_in_ch)
        if len(segments) != 1:
            discarded += 1
            continue
        start, stop = segments[0]
        try:
            metrics.append(strike_metrics(v_in_ch[start:stop],
                                          v_ham_ch[start:], cfg.dt))
        except UnextractableStrike:
            discarded += 1
    return metrics, discarded, traces


def _participant_job(args):
    cfg_dict, c_idx, p_idx = args
    cfg = _config_from_dict(cfg_dict)
    metrics, discarded, traces = _simulate_participant(cfg, c_idx, p_idx)
    return c_idx, p_idx, metrics, discarded, traces


def _config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    d["conditions"] = tuple(ConditionSpec(**c) for c in d["conditions"])
    d["operator"] = OperatorSettings(**d["operator"])
    return ExperimentConfig(**d)


def run_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> RunManifest:
    """Execute the configured virtual experiment and write all outputs.

    Layout under ``out_dir``: traces/ (representative trial recordings),
    metrics/ (per-strike CSV and per-participant summaries), stats/
    (cross-condition test reports), manifest.json. Results are identical
    for any ``jobs`` count and byte-identical across repeat runs up to
    the manifest's creation timestamp.
    """
    out = Path(out_dir)
    for sub in ("traces", "metrics", "stats"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    tasks = [(c, p) for c in range(len(cfg.conditions))
             for p in range(cfg.participants)]
    results = {}
    if jobs > 1:
        payload = cfg.canonical_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for c, p, metrics, discarded, traces in pool.map(
                    _participant_job, [(payload, c, p) for c, p in tasks],
                    chunksize=1):
                results[(c, p)] = (metrics, discarded, traces)
    else:
        for c, p in tasks:
            results[(c, p)] = _simulate_participant(cfg, c, p)

    files: dict[str, list[str]] = {"traces": [], "metrics": [], "stats": []}
    summaries = {}   # (c_idx, p_idx) -> ConditionSummary
    for c_idx, cond in enumerate(cfg.conditions):
        cond_summaries = []
        for p_idx in range(cfg.participants):
            metrics, discarded, traces = results[(c_idx, p_idx)]
            mpath = out / "metrics" / f"{cond.label}_p{p_idx:02d}.csv"
            metrics_to_csv(metrics, mpath)
            files["metrics"].append(str(mpath.relative_to(out)))
            for t_idx, trace in traces:
                tpath = (out / "traces"
                         / f"{cond.label}_p{p_idx:02d}_t{t_idx:02d}.csv")
                trace.to_csv(tpath)
                files["traces"].append(str(tpath.relative_to(out)))
            if not metrics:
                raise RuntimeError(
                    f"condition {cond.label!r} participant {p_idx}: "
                    f"every trial was discarded")
            summary = summarize_condition(metrics, k=cfg.best_k,
                                          n_discarded=discarded)
            summaries[(c_idx, p_idx)] = summary
            cond_summaries.append(asdict(summary))
        spath = out / "metrics" / f"{cond.label}_summaries.json"
        spath.write_text(json.dumps(cond_summaries, indent=2, sort_keys=True) + "\n")
        files["metrics"].append(str(spath.relative_to(out)))

    report = _cross_condition_stats(cfg, summaries)
    rpath = out / "stats" / "tests.json"
    rpath.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    files["stats"].append(str(rpath.relative_to(out)))

    manifest = RunManifest(
        config_hash=cfg.config_hash(), tool_version=_tool_version(),
        seed=cfg.seed, files=files,
        created=datetime.now(timezone.utc).isoformat())
    manifest.write(out / "manifest.json")
    return manifest


def _measure_value(summary, measure: str) -> float:
    return {"vhat": summary.median_vhat, "gain": summary.median_gain,
            "freq_hz": summary.median_freq_hz}[measure]


def _cross_condition_stats(cfg: ExperimentConfig, summaries) -> dict:
    """Friedman plus pairwise Wilcoxon per measure over the block matrix
    (rows: participants, columns: conditions), with the MAD-based sigma
    and the minimum effect size at the participant count."""
    labels = [c.label for c in cfg.conditions]
    report: dict = {"conditions": labels, "participants": cfg.participants}
    for measure in MEASURES:
        block = np.array([[ _measure_value(summaries[(c, p)], measure)
                            for c in range(len(labels))]
                          for p in range(cfg.participants)])
        entry: dict = {
            "condition_medians": {lab: float(np.median(block[:, j]))
                                  for j, lab in enumerate(labels)},
        }
        sigma = st.mad_sigma(block.ravel())
        entry["sigma_est"] = sigma
        entry["minimum_effect_size"] = st.minimum_effect_size(
            sigma, cfg.participants) if sigma > 0 else 0.0
        if len(labels) >= 2 and cfg.participants >= 2:
            fr = st.friedman(block)
            entry["friedman"] = {"chi2": fr.statistic, "pvalue": fr.pvalue,
                                 "n": fr.n}
            pairwise = {}
            for i, j in combinations(range(len(labels)), 2):
                try:
                    w = st.wilcoxon_signed_rank(block[:, i], block[:, j])
                    pairwise[f"{labels[i]} vs {labels[j]}"] = {
                        "w_plus": w.statistic, "pvalue": w.pvalue, "n": w.n,
                        "median_difference": w.effect,
                        "ci95": [w.ci_lower, w.ci_upper]}
                except ValueError as exc:
                    pairwise[f"{labels[i]} vs {labels[j]}"] = {"error": str(exc)}
            entry["wilcoxon_pairwise"] = pairwise
        report[measure] = entry
    return report
